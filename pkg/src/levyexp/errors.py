"""Exception hierarchy shared across the package."""


class LevyExpError(Exception):
    """Base class for all package errors."""


class InvalidTriplet(LevyExpError, ValueError):
    """A characteristic triplet or measure component violates its invariants."""


class QuadratureFailure(LevyExpError, ArithmeticError):
    """Adaptive integration did not reach the requested tolerance."""


class UnsupportedCombination(LevyExpError):
    """An image Levy measure leaves the component catalog and cannot be tabulated."""


class PreconditionViolation(LevyExpError, ValueError):
    pass


class ParameterError(LevyExpError, ValueError):
    """Invalid simulation parameters (grid step, truncation level, ...)."""


class HorizonExceeded(LevyExpError, RuntimeError):
    """The adaptive horizon hit its cap before the tail bound was met."""


class EnumerationOverflow(LevyExpError, RuntimeError):
    """Depth-limited enumeration of a support set produced too many points."""


class SchemaError(LevyExpError, ValueError):
    """A scenario or process document does not match the JSON schema."""

    def __init__(self, message, path="/"):
        super().__init__(message)
        self.path = path if isinstance(path, str) else "/" + "/".join(map(str, path))

    def __str__(self):
        return f"{self.path or '/'}: {self.args[0]}"
