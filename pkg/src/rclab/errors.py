"""Exception hierarchy shared by all rclab modules."""

from __future__ import annotations


class RCLabError(Exception):
    """Base class for all errors raised by rclab."""


class GraphError(RCLabError, ValueError):
    pass


class DuplicateEdge(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class IndexOutOfRange(GraphError):
    pass


class ParityError(RCLabError, ValueError):
    pass


class GenerationFailure(RCLabError, RuntimeError):
    pass


class BudgetExceeded(RCLabError):
    """An exhaustive enumeration would exceed its configured size budget."""


class InvalidQ(RCLabError, ValueError):
    pass


class Positivity(RCLabError, ValueError):
    """A weight that must be strictly positive was not."""


class DomainError(RCLabError, ValueError):
    pass


class Singularity(RCLabError, ZeroDivisionError):
    pass


class QuadratureFailure(RCLabError, ArithmeticError):
    pass


class RootNotBracketed(RCLabError, ValueError):
    pass


class NonConvergence(RCLabError):
    """Belief propagation did not reach the residual tolerance."""

    def __init__(self, message: str, state=None):
        super().__init__(message)
        self.state = state


class NoConvergedRun(RCLabError):
    pass


class InconsistentMarginals(RCLabError, ValueError):
    pass


class SignCondition(RCLabError, ValueError):
    """Vertex fields k*d + h do not have a fixed positive sign on the tree support."""
