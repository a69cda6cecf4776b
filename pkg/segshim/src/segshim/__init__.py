"""HTTP shim around a box-promptable video segmenter."""

from .app import app_from_env, create_app  # noqa: F401
from .backends import MockBackend, load_backend  # noqa: F401
