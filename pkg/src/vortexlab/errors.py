"""Shared exception types.

Every named failure mode of the library maps to one of these, so callers can
distinguish "you fed me garbage" (ValueError subclasses) from "the numerics
did not converge" (ArithmeticError subclasses).
"""


class DomainError(ValueError):
    """A point lies outside the closed unit disk, or a radius is out of range."""


class CoincidentPointsError(ValueError):
    """Kernel evaluation requested at a pair closer than the working cutoff."""


class SupportError(ValueError):
    """A test function's support is not strictly inside the open space-time box."""


class SeparationError(ValueError):
    """A cutoff does not equal 1 on a neighborhood of the test-function support."""


class ResolutionError(ValueError):
    """The grid cannot resolve the requested feature (bump, ball, heat kernel)."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the target tolerance."""


class DegenerateFitError(ArithmeticError):
    """Curve fit requested on data too small to distinguish from noise."""


class TrajectoryFormatError(ValueError):
    """A trajectory file has a bad magic number, version, or layout."""


class ConfigError(ValueError):
    """Configuration file failed validation; message lists the offending keys."""


class StageError(RuntimeError):
    """A pipeline stage failed; message is tagged with the stage name."""


class ProjectionConditioningWarning(UserWarning):
    """Mode projection requested beyond what the grid resolves reliably."""
