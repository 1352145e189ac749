"""Exception types raised across the package."""


class ToricMAError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(ToricMAError, ValueError):
    pass


class NegativeCoordinate(ToricMAError, ValueError):
    pass


class NonConvexInput(ToricMAError, ValueError):
    """Node data does not describe a convex function with the declared body."""


class IncompatibleGrids(ToricMAError, ValueError):
    pass


class GridCoverageError(ToricMAError, ValueError):
    pass


class DegenerateBody(ToricMAError, ValueError):
    pass


class MassMismatch(ToricMAError, ValueError):
    """Target measure does not carry the mass of MA(h_P)."""


class NoStabilization(ToricMAError, RuntimeError):
    pass


class NonConvergence(ToricMAError, RuntimeError):
    pass


class FitResidualError(ToricMAError, ArithmeticError):
    """Volume samples are not reproduced by a homogeneous polynomial."""
