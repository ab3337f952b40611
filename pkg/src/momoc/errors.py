"""Exception types shared across the toolkit."""


class MomocError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(MomocError, ValueError):
    """Raised when an input array violates a precondition (shape, finiteness, dtype)."""


class ConfigurationError(MomocError, ValueError):
    """Raised when a parameter combination is infeasible or inconsistent."""


class SolverDivergedError(MomocError, RuntimeError):
    """Raised when an iterative solver's loss grows past the divergence guard."""


class DegenerateExclusionError(MomocError, RuntimeError):
    """Raised when data-consistency thresholding would discard every shot."""


class RegistrationError(MomocError, RuntimeError):
    """Raised when rigid registration is undefined (e.g. flat images)."""


class UndefinedCorrelationError(MomocError, ValueError):
    """Raised when a rank correlation is undefined (zero rank variance)."""
