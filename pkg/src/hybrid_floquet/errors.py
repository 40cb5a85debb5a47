"""Exception hierarchy shared by the simulation and analysis layers."""

from __future__ import annotations


class HybridError(Exception):
    """Base class for numerical failures. ``context`` carries where it happened."""

    def __init__(self, message: str = "", **context):
        super().__init__(message)
        self.context = dict(context)

    def with_context(self, **more) -> "HybridError":
        self.context.update(more)
        return self

    def __str__(self) -> str:
        base = super().__str__()
        if not self.context:
            return base
        extra = ", ".join(f"{k}={v!r}" for k, v in self.context.items())
        return f"{base} [{extra}]"


class NonFiniteState(HybridError):
    pass


class Tangency(HybridError):
    """Vector field (nearly) tangent to a guard or section at a crossing."""


class NoImpact(HybridError):
    pass


class EventLocationError(HybridError):
    pass


class ZenoError(HybridError):
    pass


class MaxTransitionsError(HybridError):
    pass


class NoReturn(HybridError):
    pass


class NoConvergence(HybridError):
    def __init__(self, message: str = "", best=None, residual: float = float("inf"), **context):
        super().__init__(message, **context)
        self.best = best
        self.residual = residual


class SingularNewtonStep(HybridError):
    pass


class NoConvergenceQR(HybridError):
    pass


class NoStabilization(HybridError):
    pass


class RankMonotonicityError(HybridError):
    """Ranks of successive powers increased; the rank tolerance is mis-set."""
