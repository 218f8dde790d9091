"""Exception types raised across the toolkit."""


class SetegError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameter(SetegError, ValueError):
    pass


class InvalidState(SetegError, ValueError):
    """A (zeta, chi, upsilon) triple or density matrix outside the allowed set."""


class InvalidWeights(SetegError, ValueError):
    pass


class NotSingleErrorType(SetegError):
    """The density matrix has weight outside span{|00>, |11>}."""


class NonConvexSpec(SetegError, ValueError):
    pass


class TruncationTooSmall(SetegError, ValueError):
    pass


class IllConditioned(SetegError):
    """Two states are too close to parallel for a stable dual basis."""


class DegenerateOutcome(SetegError, ValueError):
    pass


class InfeasibleProtocol(SetegError, ValueError):
    pass


class BoundViolated(SetegError):
    """A searched protocol beat the analytic upper bound (an implementation bug)."""
