"""Exception hierarchy shared by all modules."""


class VarstabError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(VarstabError):
    """Inputs are malformed or a precondition of an operation is unmet."""


class LegendreError(ConfigurationError):
    """The strengthened Legendre condition fails along the candidate path."""

    def __init__(self, message: str, x: float | None = None):
        super().__init__(message)
        self.x = x


class NumericalError(VarstabError):
    """A computation produced non-finite values or failed to converge."""

    def __init__(self, message: str, x: float | None = None):
        super().__init__(message)
        self.x = x
