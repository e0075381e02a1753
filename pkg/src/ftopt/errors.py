"""Exception hierarchy shared across the package."""


class FtoptError(Exception):
    """Base class for every error raised by ftopt."""


class DomainError(FtoptError, ValueError):
    """A function was evaluated outside its domain (e.g. a non-finite point)."""


class ParameterError(FtoptError, ValueError):
    """An operation received parameters that violate its preconditions."""


class NumericError(FtoptError, ArithmeticError):
    """A numerical routine failed to converge or bracket a root."""


class ProtocolViolation(FtoptError, RuntimeError):
    """An algorithm step received inputs its protocol forbids."""


class ConfigError(FtoptError, ValueError):
    """A scenario configuration is malformed or inconsistent.

    ``field`` names the offending entry (dotted path) when known.
    """

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
