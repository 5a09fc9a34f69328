"""Exception types raised across synclab."""


class SynclabError(Exception):
    """Base class for every error raised by this package."""


class InvalidTopology(SynclabError, ValueError):
    pass


class NotPositiveDefinite(SynclabError, ValueError):
    pass


class DimensionMismatch(SynclabError, ValueError):
    pass


class InvalidGain(SynclabError, ValueError):
    pass


class SingularInertia(SynclabError, ValueError):
    pass


class NonFiniteDerivative(SynclabError, ArithmeticError):
    pass


class NonFiniteState(SynclabError, ArithmeticError):
    def __init__(self, message, time=None, component=None):
        super().__init__(message)
        self.time = time
        self.component = component


class InsufficientSamples(SynclabError, ValueError):
    pass


class SchemaError(SynclabError, ValueError):
    pass


class IndexOutOfRange(SynclabError, IndexError):
    pass
