"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class RicciPatternsError(Exception):
    """Base class for every error raised by this package."""


class SchemaError(RicciPatternsError):
    """The input document does not match the triangulation schema."""


class TopologyError(RicciPatternsError):
    """The combinatorial data is not a valid closed oriented triangulation."""


class WeightError(RicciPatternsError):
    """An edge weight lies outside [0, pi/2]."""


class SizeError(RicciPatternsError):
    """Subset enumeration would exceed the configured vertex cap."""


class InternalError(RicciPatternsError):
    """A numerical or combinatorial identity that must hold was violated."""


class PreconditionError(RicciPatternsError):
    """An operation was called on input outside its domain (e.g. wrong regime)."""


class DomainError(RicciPatternsError):
    """A coordinate or radius lies outside the valid domain."""


class StepError(RicciPatternsError):
    """A finite-difference step vanishes relative to the evaluation point."""


class StiffnessError(RicciPatternsError):
    """The adaptive integrator step collapsed below its floor."""


class BasepointError(RicciPatternsError):
    """The ratio basepoint is not a vertex of the surviving level V_0."""


class NoConvergence(RicciPatternsError):
    """Newton iteration failed; carries the best iterate and its residual."""

    def __init__(self, message: str, best=None, residual: float = float("nan"),
                 iterations: int = 0):
        super().__init__(message)
        self.best = best
        self.residual = residual
        self.iterations = iterations
