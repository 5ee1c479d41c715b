"""Exception types shared across the package."""


class RobopackError(Exception):
    """Base class for all package-specific errors."""


class PlacementError(RobopackError, ValueError):
    """A placement violates feasibility rules (overlap, overhang, height cap)."""


class CapacityExhausted(RobopackError):
    """No bin can accept the box and the bin budget is already spent."""


class CorruptModel(RobopackError):
    """A model file failed structural validation on load."""


class TrainingDiverged(RobopackError):
    """Training produced non-finite losses or weights."""
