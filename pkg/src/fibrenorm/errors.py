"""Exception hierarchy shared by every module."""


class FibRenormError(Exception):
    pass


class DomainError(FibRenormError, ValueError):
    pass


class SimplexViolation(FibRenormError, ValueError):
    pass


class DegenerateInterval(FibRenormError, ValueError):
    pass


class BracketError(FibRenormError, ValueError):
    pass


class ToleranceError(FibRenormError, ArithmeticError):
    pass


class PrecisionExhausted(FibRenormError, ArithmeticError):
    """Raised when cancellation ate through the guard bits; restart at higher precision."""

    def __init__(self, message, needed_bits=None):
        super().__init__(message)
        self.needed_bits = needed_bits


class PrecisionCeiling(FibRenormError, ArithmeticError):
    pass


class NotRenormalizable(FibRenormError):
    def __init__(self, message, side=None):
        super().__init__(message)
        self.side = side


class InversionBracketError(BracketError):
    pass


class NonReturn(FibRenormError):
    pass


class FlatHit(FibRenormError):
    pass


class StepTooLarge(FibRenormError, ValueError):
    pass


class SingularBasis(FibRenormError, ArithmeticError):
    pass


class NotConverged(FibRenormError):
    pass


class Inconclusive(FibRenormError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DepthMismatch(FibRenormError, ValueError):
    pass


class SameSideBracket(FibRenormError, ValueError):
    pass
