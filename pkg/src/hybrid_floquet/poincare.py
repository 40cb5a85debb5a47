"""Poincare sections, return maps, per-domain step maps and fixed points."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import HybridSystemDef, PeriodicOrbitResult
from .errors import HybridError, NoConvergence, NoReturn, SingularNewtonStep
from .executor import Limits, SectionWatch, Termination, on_section, raise_for_termination, run
from .flow import StepperConfig, flow_for, time_to_impact

# departure crossings are ignored until the event value exceeds this many tolerances
REFRACTORY_FACTOR = 10.0


@dataclass(frozen=True)
class SectionDef:
    domain: str
    event: Callable[[np.ndarray], float]
    coords: Callable[[np.ndarray], np.ndarray]
    lift: Callable[[np.ndarray], np.ndarray]
    name: str = ""

    def watch(self, cfg: StepperConfig) -> SectionWatch:
        return SectionWatch(self.domain, self.event, REFRACTORY_FACTOR * cfg.event_tol_g)


@dataclass
class ReturnResult:
    u_out: np.ndarray
    return_time: float
    domain_sequence: list[str]
    dwell_times: list[float]
    guard_sequence: list[str]
    state: np.ndarray
    entry_states: list[np.ndarray]


def _first_hit(system, section: SectionDef, domain: str, x0, cfg, max_time, limits, record=False):
    ex = run(system, domain, x0, max_time, cfg, limits, watch=section.watch(cfg), record=record)
    if ex.termination == Termination.TimeLimit:
        raise NoReturn("no return to the section before max_time", section=section.name, max_time=max_time)
    if ex.termination != Termination.Section:
        raise_for_termination(ex, section=section.name)
    return ex


def return_map(
    system: HybridSystemDef,
    section: SectionDef,
    u,
    cfg: StepperConfig | None = None,
    max_time: float = 100.0,
    limits: Limits | None = None,
) -> ReturnResult:
    """First return of ``lift(u)`` to ``section`` by direct hybrid execution."""
    cfg = cfg or StepperConfig()
    x0 = np.asarray(section.lift(np.asarray(u, dtype=float)), dtype=float)
    ex = _first_hit(system, section, section.domain, x0, cfg, max_time, limits)
    arcs = ex.arcs
    return ReturnResult(
        u_out=np.asarray(section.coords(ex.final_state), dtype=float),
        return_time=ex.t_final - arcs[0].t_entry,
        domain_sequence=[a.domain for a in arcs],
        dwell_times=[a.dwell for a in arcs],
        guard_sequence=[a.exit_guard for a in arcs if a.exit_guard is not None],
        state=ex.final_state,
        entry_states=[a.entry_state for a in arcs],
    )


def return_fn(system, section, cfg=None, max_time: float = 100.0) -> Callable[[np.ndarray], np.ndarray]:
    return lambda u: return_map(system, section, u, cfg, max_time).u_out


def periodic_orbit(
    system: HybridSystemDef,
    section: SectionDef,
    u_star,
    cfg: StepperConfig | None = None,
    max_time: float = 100.0,
) -> PeriodicOrbitResult:
    """Describe the orbit through ``lift(u_star)``: domains, dwell times, entry points.

    The partial arcs before and after the section in its own domain are
    merged, so each domain of the cycle appears once.
    """
    cfg = cfg or StepperConfig()
    u_star = np.asarray(u_star, dtype=float)
    res = return_map(system, section, u_star, cfg, max_time)
    doms = list(res.domain_sequence)
    dwell = list(res.dwell_times)
    entries = list(res.entry_states)
    if len(doms) > 1 and doms[-1] == doms[0]:
        dwell[0] += dwell[-1]
        entries[0] = entries[-1]
        doms, dwell, entries = doms[:-1], dwell[:-1], entries[:-1]
    if len(doms) != len(set(doms)):
        raise HybridError("orbit revisits a domain within one cycle; unsupported", domains=doms)
    residual = float(np.max(np.abs(res.u_out - u_star)))
    return PeriodicOrbitResult(
        section=section,
        fixed_point=u_star,
        period=res.return_time,
        domain_sequence=tuple(doms),
        dwell_times=tuple(dwell),
        entry_points=tuple(np.asarray(e) for e in entries),
        guard_sequence=tuple(res.guard_sequence),
        residual=residual,
    )


# entry charts sit this fraction of the way along each arc of the orbit
CHART_FRACTION = 0.5


@dataclass(frozen=True)
class EntryChart:
    """Hyperplane through a point of the orbit inside domain ``domain``, dropping one coordinate.

    The anchor is the orbit state a fraction ``CHART_FRACTION`` of the way
    along the arc, not the entry point itself: entry points lie on the
    domain boundary, where the flow can leave the reset image tangentially
    (the hopper's lower mass lifts off with zero acceleration). The dropped
    coordinate is the one the flow moves fastest at the anchor.
    """

    domain: str
    anchor: np.ndarray
    drop: int
    period: float | None
    lead: float = 0.0  # orbit flow time from the entry point to the anchor

    def lift(self, u) -> np.ndarray:
        return np.insert(np.asarray(u, dtype=float), self.drop, self.anchor[self.drop])

    def coords(self, s) -> np.ndarray:
        return np.delete(np.asarray(s, dtype=float), self.drop)

    def offset(self, s) -> float:
        d = float(s[self.drop] - self.anchor[self.drop])
        if self.period is not None:
            d = (d + 0.5 * self.period) % self.period - 0.5 * self.period
        return d


_CHARTS: dict = {}


def entry_chart(system: HybridSystemDef, orbit: PeriodicOrbitResult, j: int, cfg: StepperConfig | None = None) -> EntryChart:
    cfg = cfg or StepperConfig()
    key = (id(system), id(orbit), j, cfg)
    hit = _CHARTS.get(key)
    if hit is not None and hit[0] is system and hit[1] is orbit:
        return hit[2]
    dom = system.domain(orbit.domain_sequence[j])
    lead = CHART_FRACTION * float(orbit.dwell_times[j])
    anchor = flow_for(dom, np.asarray(orbit.entry_points[j], dtype=float), lead, cfg)
    speed = np.abs(np.asarray(dom.field(anchor), dtype=float))
    drop = int(np.argmax(speed))
    period = dict(dom.wrap).get(drop)
    chart = EntryChart(dom.id, anchor, drop, period, lead)
    if len(_CHARTS) > 256:
        _CHARTS.clear()
    _CHARTS[key] = (system, orbit, chart)
    return chart


def _transport(system, chart: EntryChart, state, cfg: StepperConfig, tol: float = 1e-14, max_iter: int = 20):
    """Flow ``state`` onto the chart hyperplane, Newton on the flow time from ``chart.lead``."""
    dom = system.domain(chart.domain)
    x0 = np.asarray(state, dtype=float)
    tau = chart.lead
    x = flow_for(dom, x0, tau, cfg)
    for _ in range(max_iter):
        g = chart.offset(x)
        if abs(g) <= tol:
            return x
        rate = float(np.asarray(dom.field(x))[chart.drop])
        if rate == 0.0:
            break
        tau -= g / rate
        x = flow_for(dom, x0, tau, cfg)
    if abs(chart.offset(x)) <= 1e-12:
        return x
    raise NoConvergence("could not transport state onto entry chart", residual=abs(chart.offset(x)))


def step_map(
    system: HybridSystemDef,
    j: int,
    orbit: PeriodicOrbitResult,
    u,
    cfg: StepperConfig | None = None,
    max_time: float = 100.0,
) -> np.ndarray:
    """Leg ``j`` of the cycle: flow in domain j to its exit guard, reset.

    Leg 0 starts on the orbit's section. Later legs start on the entry
    chart of their domain. The last leg ends on the section; the others
    flow on from the landing state to the next domain's entry chart, so
    the legs compose to the return map.
    """
    cfg = cfg or StepperConfig()
    section: SectionDef = orbit.section
    k = len(orbit.domain_sequence)
    if not 0 <= j < k:
        raise IndexError(f"leg {j} out of range for a {k}-domain cycle")
    u = np.asarray(u, dtype=float)
    domain = orbit.domain_sequence[j]
    start = section.lift(u) if j == 0 else entry_chart(system, orbit, j, cfg).lift(u)
    impact = time_to_impact(system, domain, start, cfg, max_time)
    if orbit.guard_sequence and impact.guard_id != orbit.guard_sequence[j]:
        raise NoReturn(
            "leg left through an unexpected guard", leg=j, guard=impact.guard_id,
            expected=orbit.guard_sequence[j],
        )
    guard = system.guard(impact.guard_id)
    landing = np.asarray(guard.reset(impact.exit_state), dtype=float)
    if j + 1 < k:
        chart = entry_chart(system, orbit, j + 1, cfg)
        return chart.coords(_transport(system, chart, landing, cfg))
    watch = section.watch(cfg)
    if on_section(watch, guard.dst, landing, cfg):
        return np.asarray(section.coords(landing), dtype=float)
    ex = _first_hit(system, section, guard.dst, landing, cfg, max_time, None)
    return np.asarray(section.coords(ex.final_state), dtype=float)


def cycle_map(system, orbit: PeriodicOrbitResult, u, cfg=None, max_time: float = 100.0) -> np.ndarray:
    """Compose every leg around the cycle, starting and ending on the section."""
    v = np.asarray(u, dtype=float)
    for j in range(len(orbit.domain_sequence)):
        v = step_map(system, j, orbit, v, cfg, max_time)
    return v


def jacobian_fd(
    fn: Callable[[np.ndarray], np.ndarray],
    u,
    delta_rel: float = 1e-5,
    scheme: str = "central",
) -> np.ndarray:
    """Finite-difference Jacobian with steps delta_rel * max(|u_i|, 1)."""
    u = np.asarray(u, dtype=float)
    d = u.size
    if scheme not in ("central", "forward"):
        raise ValueError(f"unknown scheme {scheme!r}")
    base = None
    if scheme == "forward":
        base = np.asarray(fn(u), dtype=float)
    cols = []
    for i in range(d):
        delta = delta_rel * max(abs(u[i]), 1.0)
        up = u.copy()
        up[i] += delta
        um = u.copy()
        if scheme == "central":
            um[i] -= delta
        try:
            plus = np.asarray(fn(up), dtype=float)
            minus = np.asarray(fn(um), dtype=float) if scheme == "central" else base
            # divide by the step actually taken after rounding
            cols.append((plus - minus) / (up[i] - um[i]))
        except HybridError as exc:
            raise exc.with_context(perturbation_index=i, delta=delta)
    return np.column_stack(cols)


def solve_fixed_point(
    fn: Callable[[np.ndarray], np.ndarray],
    u0,
    tol: float = 1e-10,
    max_iter: int = 50,
    method: str = "newton",
    delta_rel: float = 1e-5,
    cond_limit: float = 1e12,
) -> tuple[np.ndarray, float]:
    """Solve fn(u) = u.

    ``newton`` uses the finite-difference Jacobian of fn(u) - u; ``iterate``
    applies fn repeatedly, which converges for attracting fixed points.
    """
    if method not in ("newton", "iterate"):
        raise ValueError(f"unknown method {method!r}")
    u = np.asarray(u0, dtype=float)
    best, best_res = u, math.inf
    # a failed map evaluation (no return, tangency, ...) means the iterate
    # left the region where the return map is defined
    try:
        pu = np.asarray(fn(u), dtype=float)
    except HybridError as exc:
        raise NoConvergence(
            "return map undefined at the initial guess", best=best, residual=best_res, method=method,
            cause=f"{type(exc).__name__}: {exc}",
        )
    res = float(np.max(np.abs(pu - u)))
    best_res = res
    it = 0
    for it in range(max_iter):
        if res <= tol:
            return u, res
        try:
            if method == "iterate":
                u = pu
            else:
                J = jacobian_fd(fn, u, delta_rel)
                lhs = J - np.eye(u.size)
                if np.linalg.cond(lhs) > cond_limit:
                    raise SingularNewtonStep("DP - I is numerically singular (multiplier near 1)", iteration=it)
                u = u - np.linalg.solve(lhs, pu - u)
            pu = np.asarray(fn(u), dtype=float)
        except SingularNewtonStep:
            raise
        except HybridError as exc:
            raise NoConvergence(
                f"return map undefined at iteration {it}", best=best, residual=best_res, method=method,
                cause=f"{type(exc).__name__}: {exc}",
            )
        res = float(np.max(np.abs(pu - u)))
        if not math.isfinite(res):
            break
        if res < best_res:
            best, best_res = u, res
    if res <= tol:
        return u, res
    raise NoConvergence(
        f"fixed point not found in {max_iter} iterations", best=best, residual=best_res, method=method,
    )


def find_fixed_point(
    system: HybridSystemDef,
    section: SectionDef,
    u0,
    cfg: StepperConfig | None = None,
    tol: float = 1e-10,
    max_iter: int = 50,
    method: str = "newton",
    max_time: float = 100.0,
    delta_rel: float = 1e-5,
) -> tuple[np.ndarray, float]:
    """Fixed point of the return map on ``section``; see find_fixed_point."""
    fn = return_fn(system, section, cfg, max_time)
    return solve_fixed_point(fn, u0, tol, max_iter, method, delta_rel)


def section_state_on_orbit(
    system: HybridSystemDef,
    orbit: PeriodicOrbitResult,
    target: SectionDef,
    cfg: StepperConfig | None = None,
    max_time: float = 100.0,
) -> np.ndarray:
    """Chart coordinates where the orbit first meets another section."""
    cfg = cfg or StepperConfig()
    x0 = orbit.section.lift(orbit.fixed_point)
    ex = _first_hit(system, target, orbit.section.domain, x0, cfg, max_time, None)
    return np.asarray(target.coords(ex.final_state), dtype=float)
