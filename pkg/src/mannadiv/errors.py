"""Exception types shared across the package."""


class MannadivError(Exception):
    """Base class for all package errors."""


class ShapeMismatch(MannadivError):
    """A share, utility, or measure was used with the wrong manna kind."""


class NonSegmentShare(MannadivError):
    """A segment-only utility was evaluated on a non-segment share."""


class OutOfRange(MannadivError):
    """A clock time or cut point fell outside its valid range."""


class Unsupported(MannadivError):
    """Problem size or domain outside the solver's budget."""


class NonMonotone(MannadivError):
    """An operation restricted to co-monotone utilities got a non-monotone one."""


class NoConvergence(MannadivError):
    """A numeric search exhausted its restarts; carries the best residual seen."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class InvariantViolation(MannadivError):
    """Input violated a documented precondition."""


class ProtocolError(MannadivError):
    """Base class for protocol-level failures."""


class EmptyAcceptance(ProtocolError):
    """A chooser accepted no share."""


class MalformedPartition(ProtocolError):
    """A proposed partition does not exhaust the remaining manna."""


class BadBudgetShare(ProtocolError):
    """A chosen share violates its measure budget or the remaining manna."""


class NonIncreasingBid(ProtocolError):
    """A clock bid fell below the current clock floor."""


class WrongPhase(ProtocolError):
    """An action was submitted in a phase that does not expect it."""


class NotYourTurn(ProtocolError):
    """An action was submitted by an agent the phase does not designate."""


class InvalidAction(ProtocolError):
    """An action payload failed protocol-level validation."""
