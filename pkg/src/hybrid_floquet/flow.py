"""Fixed-step integration inside a single domain with guard-crossing location.

Crossings are bracketed at every accepted step and refined by bisection on
the time offset inside the step, re-integrating from the last accepted
state with a partial step. A crossing is accepted only if the event value
is decreasing through zero at a rate of at least ``tangency_threshold``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import DomainDef, HybridSystemDef
from .errors import EventLocationError, NoImpact, NonFiniteState, Tangency

METHODS = ("RK4", "Euler")

# time offset for the finite-difference rate of change at a located crossing
_RATE_DT = 1e-6
_MAX_BISECT = 200


@dataclass(frozen=True)
class StepperConfig:
    method: str = "RK4"
    h: float = 1e-3
    event_tol_g: float = 1e-12
    event_tol_t: float = 1e-12
    tangency_threshold: float = 1e-8

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        for name in ("h", "event_tol_g", "event_tol_t", "tangency_threshold"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")


@dataclass(frozen=True)
class ImpactResult:
    guard_id: str
    eta: float
    exit_state: np.ndarray
    samples: list = field(default_factory=list, repr=False, compare=False)


def _check_finite(x: np.ndarray, where: str) -> np.ndarray:
    if not math.isfinite(x.sum()):
        raise NonFiniteState(f"non-finite state after {where}", state=x.tolist())
    return x


class AffineField:
    """Vector field s' = L s + c.

    Callable like any field. ``step`` recognizes it and applies the
    one-step map of the method as a single affine map, which is the same
    RK4/Euler step up to rounding but much cheaper on small systems.
    """

    def __init__(self, L, c):
        self.L = np.array(L, dtype=float)
        self.c = np.array(c, dtype=float)
        n = self.c.size
        if self.L.shape != (n, n):
            raise ValueError(f"L must be {n}x{n}, got {self.L.shape}")
        self._cache: dict = {}

    def __call__(self, s):
        return self.L @ s + self.c

    def step_map(self, h: float, method: str) -> tuple[np.ndarray, np.ndarray]:
        key = (h, method)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        n = self.c.size
        hL = h * self.L
        order = 4 if method == "RK4" else 1
        # T = sum_{i<=order} (hL)^i / i!,  v = h * sum_{i<order} (hL)^i / (i+1)! c
        T = np.eye(n)
        S = np.eye(n)
        term = np.eye(n)
        for i in range(1, order + 1):
            term = term @ hL / i
            T = T + term
            if i < order:
                S = S + term / (i + 1)
        out = (T, h * (S @ self.c))
        if len(self._cache) > 64:
            self._cache.clear()
        self._cache[key] = out
        return out


def affine_field(L, c) -> AffineField:
    return AffineField(L, c)


def step(field_fn: Callable, state, h: float, method: str = "RK4") -> np.ndarray:
    """One explicit step of size ``h`` (negative ``h`` integrates backward)."""
    x = state if type(state) is np.ndarray else np.asarray(state, dtype=float)
    if type(field_fn) is AffineField:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
        T, v = field_fn.step_map(h, method)
        return _check_finite(T @ x + v, f"{method} step")
    if method == "RK4":
        half = 0.5 * h
        k1 = field_fn(x)
        k2 = field_fn(x + half * k1)
        k3 = field_fn(x + half * k2)
        k4 = field_fn(x + h * k3)
        out = x + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
    elif method == "Euler":
        out = x + h * np.asarray(field_fn(x), dtype=float)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _check_finite(out, f"{method} step")


def flow_for(domain: DomainDef, state, duration: float, cfg: StepperConfig) -> np.ndarray:
    """Integrate for ``duration`` (either sign) on the fixed grid, then one partial step."""
    x = np.asarray(state, dtype=float)
    if duration == 0.0:
        return x.copy()
    sign = 1.0 if duration > 0 else -1.0
    n_full = int(abs(duration) // cfg.h)
    for _ in range(n_full):
        x = domain.wrap_state(step(domain.field, x, sign * cfg.h, cfg.method))
    rest = duration - sign * n_full * cfg.h
    if rest != 0.0:
        x = domain.wrap_state(step(domain.field, x, rest, cfg.method))
    return x


@dataclass
class Monitor:
    """An event watched during a flow.

    It can only fire once armed, i.e. after its value has exceeded
    ``arm_level``. ``strict`` monitors that start disarmed must arm within
    the first step (a state on a guard has to move into the flow set).
    """

    event: Callable[[np.ndarray], float]
    arm_level: float = 0.0
    strict: bool = True
    label: str = ""


@dataclass
class Crossing:
    index: int
    tau: float  # time from the start of the flow
    state: np.ndarray
    rate: float


@dataclass
class FlowOutcome:
    crossing: Crossing | None
    t: float  # elapsed time at stop
    state: np.ndarray
    samples: list  # (elapsed time, state) at accepted steps


def _rate(domain: DomainDef, fn, x: np.ndarray, cfg: StepperConfig) -> float:
    xp = domain.wrap_state(step(domain.field, x, _RATE_DT, cfg.method))
    xm = domain.wrap_state(step(domain.field, x, -_RATE_DT, cfg.method))
    return (float(fn(xp)) - float(fn(xm))) / (2.0 * _RATE_DT)


def _bisect(domain: DomainDef, fn, x0: np.ndarray, hh: float, x1: np.ndarray, v1: float, cfg):
    """Locate a downward zero of ``fn`` within the step ``x0 -> x1``.

    Returns (offset, state, value). The offset is an endpoint of the final
    bracket, so it lies inside every bracket produced on the way.
    """
    lo, hi = 0.0, hh
    v_lo, v_hi = float(fn(x0)), v1
    x_lo, x_hi = x0, x1
    for _ in range(_MAX_BISECT):
        width_ok = hi - lo <= cfg.event_tol_t
        best_v = v_hi if abs(v_hi) <= abs(v_lo) else v_lo
        if width_ok and abs(best_v) <= cfg.event_tol_g:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        xm = domain.wrap_state(step(domain.field, x0, mid, cfg.method))
        vm = float(fn(xm))
        if vm > 0.0:
            lo, v_lo, x_lo = mid, vm, xm
        else:
            hi, v_hi, x_hi = mid, vm, xm
    if abs(v_hi) <= abs(v_lo):
        return hi, x_hi, v_hi
    return lo, x_lo, v_lo


def advance(
    domain: DomainDef,
    state,
    cfg: StepperConfig,
    t_max: float,
    monitors: Sequence[Monitor],
    record: bool = False,
) -> FlowOutcome:
    """Flow until the earliest armed monitor crosses zero downward, or ``t_max``.

    Ties between monitors firing in the same step are broken by list order.
    """
    x = np.asarray(state, dtype=float).copy()
    _check_finite(x, "initial state")
    values = [float(m.event(x)) for m in monitors]
    armed = [v > m.arm_level for v, m in zip(values, monitors)]
    must_arm = [m.strict and not a for m, a in zip(monitors, armed)]
    samples = [(0.0, x)] if record else []
    t = 0.0
    n = 0
    while t < t_max:
        hh = min(cfg.h, t_max - t)
        if hh <= 0.0:
            break
        x1 = domain.wrap_state(step(domain.field, x, hh, cfg.method))
        v1 = [float(m.event(x1)) for m in monitors]
        hits = [i for i in range(len(monitors)) if armed[i] and v1[i] <= 0.0]
        if hits:
            best: Crossing | None = None
            for i in hits:
                tau, xs, vs = _bisect(domain, monitors[i].event, x, hh, x1, v1[i], cfg)
                if best is None or tau < best.tau:
                    best = Crossing(i, tau, xs, vs)
            fn = monitors[best.index].event
            value = float(fn(best.state))
            if abs(value) > cfg.event_tol_g:
                raise EventLocationError(
                    "could not reach the event tolerance", label=monitors[best.index].label,
                    residual=value,
                )
            rate = _rate(domain, fn, best.state, cfg)
            if not rate <= -cfg.tangency_threshold:
                raise Tangency(
                    "flow not transversal at crossing", label=monitors[best.index].label,
                    rate=rate, t=t + best.tau,
                )
            crossing = Crossing(best.index, t + best.tau, best.state, rate)
            if record:
                samples.append((crossing.tau, crossing.state))
            return FlowOutcome(crossing, crossing.tau, crossing.state, samples)
        for i, m in enumerate(monitors):
            if not armed[i] and v1[i] > m.arm_level:
                armed[i] = True
        if n == 0:
            for i, m in enumerate(monitors):
                if must_arm[i] and not armed[i]:
                    raise Tangency(
                        "state on guard does not move into the flow set", label=m.label,
                        value=v1[i],
                    )
        n += 1
        t = n * cfg.h if hh == cfg.h else t + hh
        x = x1
        if record:
            samples.append((t, x))
    return FlowOutcome(None, t, x, samples)


def guard_monitors(system: HybridSystemDef, domain_id: str) -> list[Monitor]:
    return [Monitor(g.event, 0.0, True, g.id) for g in system.guards_from(domain_id)]


def time_to_impact(
    system: HybridSystemDef,
    domain: str,
    state,
    cfg: StepperConfig | None = None,
    t_max: float = math.inf,
    record: bool = False,
) -> ImpactResult:
    """Time for the flow from ``state`` to reach the first guard of ``domain``.

    Raises NoImpact if no guard fires before ``t_max`` and Tangency if the
    located crossing is not transversal.
    """
    cfg = cfg or StepperConfig()
    dom = system.domain(domain)
    monitors = guard_monitors(system, domain)
    if not monitors:
        raise NoImpact(f"domain {domain!r} has no guards", domain=domain)
    out = advance(dom, state, cfg, t_max, monitors, record=record)
    if out.crossing is None:
        raise NoImpact("no guard crossing before t_max", domain=domain, t_max=t_max)
    guard = monitors[out.crossing.index].label
    return ImpactResult(guard, out.crossing.tau, out.crossing.state, out.samples)


def sample_normalized(
    system: HybridSystemDef,
    domain: str,
    state,
    cfg: StepperConfig | None,
    sigma_grid: Sequence[float],
    t_max: float = math.inf,
) -> list[np.ndarray]:
    """States at fractions ``sigma`` of the time-to-impact from ``state``.

    sigma = 0 gives ``state`` and sigma = 1 the impact state, both exactly.
    """
    cfg = cfg or StepperConfig()
    x = np.asarray(state, dtype=float)
    impact = time_to_impact(system, domain, x, cfg, t_max)
    dom = system.domain(domain)
    out = []
    for s in sigma_grid:
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"sigma must lie in [0, 1], got {s}")
        if s == 0.0:
            out.append(x.copy())
        elif s == 1.0:
            out.append(impact.exit_state.copy())
        else:
            out.append(flow_for(dom, x, s * impact.eta, cfg))
    return out
