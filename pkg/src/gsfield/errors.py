"""Exception types shared across the package.

Every error raised on bad inputs derives from GsfieldError so the CLI can
map it to exit code 2 (validation) while anything else stays exit code 1.
"""


class GsfieldError(Exception):
    """Base class for all input/contract violations raised by gsfield."""


# --- tensor / image I/O ---

class MalformedHeader(GsfieldError):
    """GST1 file with bad magic, rank or dtype code."""


class TruncatedPayload(GsfieldError):
    """GST1 payload size does not match the declared dims/dtype."""


class IoFailure(GsfieldError):
    """Underlying OS-level read/write failure."""


class UnsupportedFormat(GsfieldError):
    """Image file is not a binary P6 PPM with maxval 255."""


# --- camera / geometry ---

class BehindCamera(GsfieldError):
    """Projection requested for a point with camera-space depth <= 0."""


class NonPositiveDepth(GsfieldError):
    """Depth value <= 0 where a positive metric depth is required."""


class ShapeMismatch(GsfieldError):
    """Array arguments whose shapes do not agree."""


# --- tracking ---

class EmptySparseSet(GsfieldError):
    """Sparse-to-dense interpolation called with zero sparse tracks."""


class DegenerateWindow(GsfieldError):
    """Correlation window with all scores equal.

    The batched operator resolves this case to a zero position residual
    instead of raising, so one blank window cannot abort a dense solve;
    the class names the condition for callers that probe single windows.
    """


# --- gaussian field ---

class IndexOutOfRange(GsfieldError):
    """Timestep index outside [0, T)."""


class EmptyMask(GsfieldError):
    """Edit mask selects no primitives."""


# --- renderer / trajectory ---

class LengthMismatch(GsfieldError):
    """Schedule length does not match the field's frame count."""


class InvalidSpec(GsfieldError):
    """Trajectory or scene specification outside its valid ranges."""


class UnsortedKeys(GsfieldError):
    """Keyframes not sorted by frame index."""


class MissingEndpoints(GsfieldError):
    """Keyframes do not cover frame 0 and frame T-1."""


class DegenerateDolly(GsfieldError):
    """Dolly-zoom translation would reach or pass the subject plane."""


# --- metrics ---

class NoVisiblePoints(GsfieldError):
    """Metric over visible points evaluated with zero visible samples."""


class EmptyEval(GsfieldError):
    """Metric evaluated with zero samples."""


class TooSmall(GsfieldError):
    """Image smaller than the SSIM window."""


# --- configuration ---

class ConfigError(GsfieldError):
    """Unknown key or out-of-range value in a pipeline config."""
