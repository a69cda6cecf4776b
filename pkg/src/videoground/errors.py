"""Exception types shared across the toolkit."""


class VideogroundError(Exception):
    """Base class for all toolkit errors."""


# ---------------------------------------------------------------- mask layer

class DimensionMismatch(VideogroundError):
    """Two masks / tracks with incompatible height x width were combined."""


class CountsMismatch(VideogroundError):
    """RLE counts do not sum to height x width."""


class MalformedRleString(VideogroundError):
    """Compressed RLE text contains out-of-range characters or ends mid-value."""


# ------------------------------------------------------------ caption layer

class CaptionParseError(VideogroundError):
    """Base class for grounded-caption grammar errors."""


class UnbalancedTag(CaptionParseError):
    """Opening tag without its closing counterpart, or a stray closer."""


class DanglingSeg(CaptionParseError):
    """Segmentation tag with no phrase attached, or a phrase left unbound."""


class BadSegId(CaptionParseError):
    """Segmentation tag id is not a non-negative integer."""


class NestedTag(CaptionParseError):
    """Phrase tags may not nest."""


# --------------------------------------------------------------- text metrics

class CorpusTooSmall(VideogroundError):
    """Corpus-level metric called with fewer than two items."""


class JudgeUnavailable(VideogroundError):
    """The judge endpoint could not be reached or kept failing."""


class UnparseableJudgeReply(VideogroundError):
    """Judge replies never contained a usable numeric score."""


# -------------------------------------------------------------- dataset layer

class DatasetError(VideogroundError):
    """Validation failure; ``failures`` holds (line_number, message) pairs."""

    def __init__(self, message, failures=()):
        super().__init__(message)
        self.failures = list(failures)


class SchemaError(DatasetError):
    """Record is structurally broken (bad JSON, missing/ill-typed fields)."""


class InvariantViolation(DatasetError):
    """Record is well-formed but semantically inconsistent."""


class InvalidSegmentation(VideogroundError):
    """Segment-wise sampling asked for an impossible partition."""


# ------------------------------------------------------- services & pipeline

class ChatFailure(VideogroundError):
    """Chat endpoint failed after exhausting retries."""


class SegFailure(VideogroundError):
    """Segmentation endpoint failed or returned a malformed response."""


class UnparseableReply(VideogroundError):
    """A service reply failed structural validation after retries."""


class MissingFrame(VideogroundError):
    """A referenced video frame file does not exist."""


class UnknownSample(VideogroundError):
    """A review decision referenced a sample id not in the dataset."""


class InvalidEdit(VideogroundError):
    """An edited answer fails to parse or cites objects the sample lacks."""
