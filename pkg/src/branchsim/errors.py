"""Exception hierarchy shared by every module."""


class BranchSimError(Exception):
    pass


class InvalidInstance(BranchSimError, ValueError):
    pass


class NonPositiveGain(InvalidInstance):
    pass


class NegativeGap(InvalidInstance):
    pass


class EmptyInstance(InvalidInstance):
    pass


class InstanceFormatError(InvalidInstance):
    pass


class NumericError(BranchSimError, ArithmeticError):
    """Raised for overflow and convergence failures (CLI exit code 3)."""


class TreeSizeOverflow(NumericError, OverflowError):
    pass


class NoConvergence(NumericError):
    pass


class DomainError(NumericError, ValueError):
    pass


class StateSpaceTooLarge(BranchSimError):
    pass


class StateExplosion(BranchSimError):
    pass


class RuleViolation(BranchSimError):
    pass


class VerificationFailed(BranchSimError, AssertionError):
    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap
