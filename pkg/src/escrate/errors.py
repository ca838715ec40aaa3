"""Exception types raised by escrate."""


class EscrateError(Exception):
    """Base class for all library errors."""


class StateCapExceeded(EscrateError):
    pass


class EnumerationCapExceeded(EscrateError):
    pass


class NotMixingAfterRestriction(EscrateError):
    """The nonzero pattern of a matrix is not primitive."""


class NoConvergence(EscrateError):
    pass


class InsufficientDigits(EscrateError):
    """A non-periodic point does not carry enough digits for the request."""


class DepthMismatch(EscrateError):
    pass


class NotInRepeller(EscrateError):
    pass


class DepthCapExceeded(EscrateError):
    def __init__(self, message, best_eta=None, depth=None):
        super().__init__(message)
        self.best_eta = best_eta
        self.depth = depth


class NoRoot(EscrateError):
    pass


class InsufficientTail(EscrateError):
    pass


class ConfigError(EscrateError):
    pass


class DegenerateHoleWarning(UserWarning):
    """Issued when a ratio is requested for an empty hole."""
