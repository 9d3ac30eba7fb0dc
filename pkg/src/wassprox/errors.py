"""Exception hierarchy shared by all modules."""


class WassProxError(Exception):
    """Base class for every error raised by this package."""


class InitializationError(WassProxError, ValueError):
    """The initial point cloud could not be built."""


class NumericalError(WassProxError, ArithmeticError):
    """A computation produced non-finite values or divided by zero."""


class KernelUnderflowError(NumericalError):
    """Entries of the Gibbs kernel underflowed to exactly zero.

    ``max_ratio`` is the largest ``C / (2 * epsilon)`` seen, which tells the
    caller how far ``epsilon`` is from the representable regime.
    """

    def __init__(self, message, max_ratio):
        super().__init__(message)
        self.max_ratio = max_ratio


class ConfigError(WassProxError, ValueError):
    """Invalid run configuration. ``code`` distinguishes the failure kind."""

    def __init__(self, message, code="invalid"):
        super().__init__(message)
        self.code = code
