"""Semi-automatic annotation pipeline: three streams keyed on the ground
truth available for a video (masks only; boxes plus caption; boxes plus
referring expressions), orchestrated against chat and segmentation
services with caching, overlay rendering, and a human-review pass."""

from .jobs import PipelineJob, Relation, StreamResult  # noqa: F401
from .overlays import object_color, render_overlays  # noqa: F401
from .review import ReviewDecision, ReviewedDataset, apply_review, read_decisions  # noqa: F401
from .streams import run_job, run_jobs, run_stream_a, run_stream_b, run_stream_c  # noqa: F401
