"""Exception types shared across the package."""


class DistillboundError(Exception):
    pass


class ShapeError(DistillboundError, ValueError):
    pass


class PreconditionError(DistillboundError, ValueError):
    pass


class UnsupportedError(DistillboundError):
    pass


class ParseError(DistillboundError, ValueError):
    pass


class NumericalError(DistillboundError, ArithmeticError):
    """A computation failed to converge or produced non-finite values.

    ``last`` carries whatever partial state the caller may want to inspect:
    the last power-iteration vector, or the last finite weight snapshot.
    """

    def __init__(self, message, last=None):
        super().__init__(message)
        self.last = last


class ConvergenceError(NumericalError):
    pass


class ConfigError(DistillboundError, ValueError):
    pass
