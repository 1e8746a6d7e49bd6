"""Exception hierarchy shared across the library."""


class ZoptimError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(ZoptimError, ValueError):
    """An argument is outside its documented domain."""


class NumericFailureError(ZoptimError, ArithmeticError):
    """A computation produced a non-finite value.

    Carries the offending point (when known) and the bad value so callers
    can report where the objective blew up.
    """

    def __init__(self, message, point=None, value=None):
        super().__init__(message)
        self.point = point
        self.value = value


class DegenerateScaleError(ZoptimError, ArithmeticError):
    """A scale estimate collapsed to zero (e.g. all perturbed losses equal)."""


class PreconditionError(ZoptimError, ValueError):
    """A theorem's parameter condition does not hold, so its bound is undefined."""


class StalePrefixError(InvalidArgumentError):
    """A cached activation prefix no longer matches the current parameters."""


class ConfigError(ZoptimError, ValueError):
    """An experiment configuration is malformed or inconsistent."""
