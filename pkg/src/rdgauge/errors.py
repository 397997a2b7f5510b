"""Exception hierarchy.

The CLI maps these onto exit codes: usage errors are 1, anything under
RdgaugeError is 2 (data), and MissingBinaryError is 3 (environment).
"""


class RdgaugeError(Exception):
    """Base class for all rdgauge errors."""


# --- media-io ---------------------------------------------------------------

class Y4MFormatError(RdgaugeError):
    """Stream does not look like YUV4MPEG2 (bad signature, bad marker, bad tag)."""


class Y4MUnsupportedError(RdgaugeError):
    """Valid Y4M, but a layout we do not handle (non-4:2:0, interlaced, ...)."""


class Y4MValidationError(RdgaugeError):
    """Header or frame violates its own invariants (odd 4:2:0 dims, wrong plane size)."""


class IncompleteFrameError(RdgaugeError):
    """Stream ended in the middle of a frame payload."""


# --- orchestration ----------------------------------------------------------

class PlanError(RdgaugeError):
    """Invalid benchmark plan (unknown preset, bad pass combination, duplicate toggle)."""


class MissingBinaryError(RdgaugeError):
    """A required external tool is not on PATH; distinct from an encode failure."""


class MetricError(RdgaugeError):
    """Quality measurement failed (e.g. frame-count mismatch between source and output)."""


class MetricParseError(MetricError):
    """Metric tool produced a log we cannot parse."""


# --- results store ----------------------------------------------------------

class StoreValidationError(RdgaugeError):
    """Record rejected before append."""


class StoreLoadError(RdgaugeError):
    """Malformed non-trailing line in the store file."""


class StoreImportError(RdgaugeError):
    """External table row could not be turned into a record."""


# --- analysis ---------------------------------------------------------------

class AnalysisError(RdgaugeError):
    """Base for rate-distortion analysis errors."""


class CurveError(AnalysisError):
    """Fewer than two usable points survived curve cleaning."""


class OverlapError(AnalysisError):
    """Curves share no (or a degenerate) quality interval; never silently 0%."""


class DomainError(AnalysisError):
    """Value outside an operation's domain (e.g. harmonic mean of non-positives)."""


class AggregationError(AnalysisError):
    """Inconsistent record sets handed to an aggregation (mixed keys, empty result)."""
