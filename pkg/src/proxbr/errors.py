class ProxbrError(Exception):
    """Base class for errors raised by proxbr."""


class DimensionError(ProxbrError, ValueError):
    pass


class UnknownFunctionError(ProxbrError, KeyError):
    pass


class InvalidFunctionError(ProxbrError, ValueError):
    pass


class NumericalFailure(ProxbrError, ArithmeticError):
    """A computation could not produce a certified answer."""


class UnboundedBelowError(NumericalFailure):
    """The regularized objective decreases without bound; lambda is at or below the threshold."""


class ToleranceNotReached(NumericalFailure):
    pass


class InconclusiveError(NumericalFailure):
    pass


class PreconditionError(ProxbrError, ValueError):
    pass


class LambdaBelowThreshold(PreconditionError):
    """Raised when a certificate is requested for lambda <= the prox-boundedness threshold."""


class ConfigError(ProxbrError, ValueError):
    pass
