"""Exception types raised across the package."""


class TactileError(Exception):
    """Base class for all errors raised by voronoi_tactile."""


class DegenerateGeometryError(TactileError):
    """Point set has no 2D extent (fewer than 3 non-collinear points)."""


class DuplicateSiteError(TactileError):
    """Two sites coincide within the duplicate tolerance."""


class ContainmentError(TactileError):
    """A centroid lies on or outside the boundary polygon."""


class FrameAlignmentError(TactileError):
    """Frames, cell sets or per-cell arrays disagree on marker identity."""


class EmptyFieldError(TactileError):
    """Shear field requested from an empty list of vectors."""


class CalibrationProtocolError(TactileError):
    """Calibration pairs violate the protocol (count or mechanical ordering)."""


class CalibrationQualityError(TactileError):
    """Raw calibration values decrease somewhere along the sweep."""

    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


class OutOfRangeError(TactileError):
    """Raw value outside the calibrated range."""


class ScenarioInfeasibleError(TactileError):
    """Simulated displacement makes two markers collide."""


class RecordingParseError(TactileError):
    """Malformed recording, feature, calibration or config file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class UnitMismatchError(TactileError):
    """Calibration table units differ from the recording units."""
