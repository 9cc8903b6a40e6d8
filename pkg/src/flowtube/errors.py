"""Exception types shared across the toolkit."""


class FlowTubeError(Exception):
    """Base class for all toolkit errors."""


class InvalidSpecError(FlowTubeError, ValueError):
    """Malformed or physically meaningless input."""


class SingularGeometryError(InvalidSpecError):
    """Geometry with a zero-size critical dimension."""


class BackDiffusionError(FlowTubeError):
    """Flow network would pull exhaust gas back into the reactor."""


class InfeasibleDesignError(FlowTubeError):
    """No geometry can satisfy the requested design target."""


class DegenerateInputError(FlowTubeError, ValueError):
    """Data carries no information for the requested operation."""


class CalibrationError(FlowTubeError):
    """Mass calibration could not be established."""
