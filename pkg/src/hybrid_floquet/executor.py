"""Hybrid executions: flow in a domain until a guard fires, reset, repeat."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import HybridSystemDef
from .errors import (
    EventLocationError,
    HybridError,
    MaxTransitionsError,
    NoImpact,
    NonFiniteState,
    Tangency,
    ZenoError,
)
from .flow import Monitor, StepperConfig, advance, guard_monitors


class Termination(str, Enum):
    TimeLimit = "TimeLimit"
    NoImpact = "NoImpact"
    Tangency = "Tangency"
    Zeno = "Zeno"
    MaxTransitions = "MaxTransitions"
    NonFiniteState = "NonFiniteState"
    # internal: a Poincare section was reached
    Section = "Section"


@dataclass(frozen=True)
class Limits:
    max_transitions: int = 10**6
    zeno_dwell: float = 1e-9
    zeno_run: int = 10
    # an arc longer than this without any guard firing ends with NoImpact
    max_dwell: float = math.inf


@dataclass
class ExecutionArc:
    domain: str
    t_entry: float
    t_exit: float
    entry_state: np.ndarray
    exit_state: np.ndarray
    exit_guard: str | None
    samples: list = field(default_factory=list, repr=False)

    @property
    def dwell(self) -> float:
        return self.t_exit - self.t_entry


@dataclass
class Execution:
    arcs: list[ExecutionArc]
    termination: Termination
    transitions: int
    message: str = ""

    @property
    def final_state(self) -> np.ndarray:
        return self.arcs[-1].exit_state

    @property
    def final_domain(self) -> str:
        return self.arcs[-1].domain

    @property
    def t_final(self) -> float:
        return self.arcs[-1].t_exit


TERMINATION_ERRORS = {
    Termination.NoImpact: NoImpact,
    Termination.Tangency: Tangency,
    Termination.Zeno: ZenoError,
    Termination.MaxTransitions: MaxTransitionsError,
    Termination.NonFiniteState: NonFiniteState,
}


@dataclass(frozen=True)
class SectionWatch:
    """Stop condition for return maps: a section event in one domain.

    The section fires on a downward crossing after its value has exceeded
    ``arm_level``, or when a reset lands within ``event_tol_g`` of it.
    """

    domain: str
    event: object
    arm_level: float


def on_section(watch: SectionWatch, domain: str, state, cfg: StepperConfig) -> bool:
    return domain == watch.domain and abs(float(watch.event(state))) <= cfg.event_tol_g


def run(
    system: HybridSystemDef,
    domain0: str,
    x0,
    t_max: float,
    cfg: StepperConfig | None = None,
    limits: Limits | None = None,
    t0: float = 0.0,
    watch: SectionWatch | None = None,
    record: bool = True,
) -> Execution:
    cfg = cfg or StepperConfig()
    limits = limits or Limits()
    domain = domain0
    x = np.asarray(x0, dtype=float).copy()
    t = float(t0)
    t_end = t0 + t_max
    arcs: list[ExecutionArc] = []
    transitions = 0
    short_run = 0

    def stop(term: Termination, msg: str = "") -> Execution:
        return Execution(arcs, term, transitions, msg)

    if not np.all(np.isfinite(x)):
        arcs.append(ExecutionArc(domain, t, t, x, x, None, [(t, x)] if record else []))
        return stop(Termination.NonFiniteState, "non-finite initial state")

    while True:
        dom = system.domain(domain)
        monitors = guard_monitors(system, domain)
        n_guards = len(monitors)
        if watch is not None and watch.domain == domain:
            monitors.append(Monitor(watch.event, watch.arm_level, False, "<section>"))
        horizon = min(t_end - t, limits.max_dwell)
        entry = x
        try:
            out = advance(dom, x, cfg, horizon, monitors, record=record)
        except Tangency as exc:
            arcs.append(ExecutionArc(domain, t, t, entry, entry, None, [(t, entry)] if record else []))
            return stop(Termination.Tangency, str(exc))
        except (NonFiniteState, EventLocationError) as exc:
            arcs.append(ExecutionArc(domain, t, t, entry, entry, None, [(t, entry)] if record else []))
            return stop(Termination.NonFiniteState, str(exc))
        samples = [(t + s, xs) for s, xs in out.samples] if record else []
        if out.crossing is None:
            t_exit = t + out.t
            arcs.append(ExecutionArc(domain, t, t_exit, entry, out.state, None, samples))
            if t_end - t_exit <= 0.0 or horizon >= t_end - t:
                return stop(Termination.TimeLimit)
            return stop(Termination.NoImpact, f"no guard fired within max_dwell in {domain!r}")

        t_exit = t + out.crossing.tau
        if out.crossing.index >= n_guards:
            arcs.append(ExecutionArc(domain, t, t_exit, entry, out.crossing.state, None, samples))
            return stop(Termination.Section)

        guard = system.guards_from(domain)[out.crossing.index]
        arcs.append(ExecutionArc(domain, t, t_exit, entry, out.crossing.state, guard.id, samples))
        t = t_exit
        short_run = short_run + 1 if arcs[-1].dwell < limits.zeno_dwell else 0
        if short_run >= limits.zeno_run:
            return stop(Termination.Zeno, f"{short_run} consecutive arcs shorter than {limits.zeno_dwell}")
        x = np.asarray(guard.reset(out.crossing.state), dtype=float)
        transitions += 1
        domain = guard.dst
        if not np.all(np.isfinite(x)):
            arcs.append(ExecutionArc(domain, t, t, x, x, None, [(t, x)] if record else []))
            return stop(Termination.NonFiniteState, f"reset {guard.id!r} produced non-finite state")
        if watch is not None and on_section(watch, domain, x, cfg):
            arcs.append(ExecutionArc(domain, t, t, x, x, None, [(t, x)] if record else []))
            return stop(Termination.Section)
        if transitions >= limits.max_transitions:
            arcs.append(ExecutionArc(domain, t, t, x, x, None, [(t, x)] if record else []))
            return stop(Termination.MaxTransitions)
        if t >= t_end:
            arcs.append(ExecutionArc(domain, t, t, x, x, None, [(t, x)] if record else []))
            return stop(Termination.TimeLimit)


def execute(
    system: HybridSystemDef,
    domain0: str,
    x0,
    t_max: float,
    cfg: StepperConfig | None = None,
    limits: Limits | None = None,
    t0: float = 0.0,
    record: bool = True,
) -> Execution:
    """Simulate from ``(domain0, x0)`` for ``t_max`` time units.

    Never raises for numerical failures; the reason execution stopped is in
    ``Execution.termination``.
    """
    return run(system, domain0, x0, t_max, cfg, limits, t0=t0, record=record)


def raise_for_termination(ex: Execution, **context) -> None:
    exc_type = TERMINATION_ERRORS.get(ex.termination)
    if exc_type is not None:
        raise exc_type(ex.message or ex.termination.value, termination=ex.termination.value, **context)


__all__ = [
    "Execution",
    "ExecutionArc",
    "HybridError",
    "Limits",
    "SectionWatch",
    "Termination",
    "execute",
    "raise_for_termination",
    "run",
]
