"""Exception hierarchy shared by all tailmix modules."""


class TailmixError(Exception):
    """Base class for every error raised by tailmix."""


class ParameterError(TailmixError, ValueError):
    """A distribution or model parameter lies outside its domain."""


class DataError(TailmixError, ValueError):
    """Input data is empty, non-finite, degenerate or malformed."""


class ThresholdError(TailmixError, ArithmeticError):
    """The component densities never cross on the searched interval."""


class ConstructionError(TailmixError, ValueError):
    """A mixture or warp cannot be assembled from the given pieces."""


class InvalidWarpError(ConstructionError):
    """A tail warp is not strictly increasing on its transition zone."""


class FitError(TailmixError, RuntimeError):
    """Every optimizer start was infeasible."""
