"""Definitions of hybrid dynamical systems.

A system is a set of domains, each with an autonomous vector field, plus
guards that move the state from one domain to another through a reset map.
Flow happens where a guard's event function is positive; the guard fires
when the event reaches zero while decreasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Vector = np.ndarray
VectorField = Callable[[np.ndarray], np.ndarray]
EventFn = Callable[[np.ndarray], float]
ResetFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DomainDef:
    id: str
    dim: int
    coord_names: tuple[str, ...]
    field: VectorField
    # (coordinate index, period) pairs for circle-valued coordinates
    wrap: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coord_names", tuple(self.coord_names))
        object.__setattr__(self, "wrap", tuple((int(i), float(p)) for i, p in self.wrap))

    def wrap_state(self, x: np.ndarray) -> np.ndarray:
        if not self.wrap:
            return x
        x = x.copy()
        for i, period in self.wrap:
            x[i] = x[i] % period
        return x


@dataclass(frozen=True)
class GuardDef:
    id: str
    src: str
    dst: str
    event: EventFn
    reset: ResetFn


@dataclass(frozen=True)
class HybridSystemDef:
    domains: tuple[DomainDef, ...]
    guards: tuple[GuardDef, ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "domains", tuple(self.domains))
        object.__setattr__(self, "guards", tuple(self.guards))

    def domain(self, domain_id: str) -> DomainDef:
        for d in self.domains:
            if d.id == domain_id:
                return d
        raise KeyError(f"unknown domain {domain_id!r}")

    def guard(self, guard_id: str) -> GuardDef:
        for g in self.guards:
            if g.id == guard_id:
                return g
        raise KeyError(f"unknown guard {guard_id!r}")

    def guards_from(self, domain_id: str) -> tuple[GuardDef, ...]:
        """Guards leaving ``domain_id``, in declaration order (the tie-break order)."""
        return tuple(g for g in self.guards if g.src == domain_id)

    def coordinate_union(self) -> list[str]:
        names: list[str] = []
        for d in self.domains:
            for n in d.coord_names:
                if n not in names:
                    names.append(n)
        return names


@dataclass(frozen=True)
class PeriodicOrbitResult:
    """A periodic orbit seen from a Poincare section.

    ``domain_sequence`` starts with the section's domain. ``dwell_times[j]``
    is the total time spent in ``domain_sequence[j]`` per cycle, and
    ``entry_points[j]`` the state just after the reset into that domain.
    ``guard_sequence[j]`` is the guard through which the orbit leaves it.
    """

    section: object
    fixed_point: np.ndarray
    period: float
    domain_sequence: tuple[str, ...]
    dwell_times: tuple[float, ...]
    entry_points: tuple[np.ndarray, ...]
    guard_sequence: tuple[str, ...] = ()
    residual: float = float("nan")
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "section_domain": getattr(self.section, "domain", None),
            "fixed_point": [float(v) for v in self.fixed_point],
            "period": float(self.period),
            "domain_sequence": list(self.domain_sequence),
            "guard_sequence": list(self.guard_sequence),
            "dwell_times": [float(v) for v in self.dwell_times],
            "entry_points": [[float(v) for v in p] for p in self.entry_points],
            "residual": float(self.residual),
        }


def _probe_point(domain: DomainDef) -> np.ndarray:
    # A deterministic generic point; callables are pure so any finite probe works.
    return np.linspace(0.1, 0.9, domain.dim) if domain.dim > 1 else np.array([0.3])


def validate(system: HybridSystemDef, probes: dict[str, Sequence[float]] | None = None) -> list[str]:
    """Check the structural invariants of ``system``.

    Field and reset output lengths are checked by evaluating the callables at
    a probe point per domain (``probes`` overrides the default). Returns one
    human-readable diagnostic per violation; an empty list means valid.
    """
    diags: list[str] = []
    ids = [d.id for d in system.domains]
    for dup in sorted({i for i in ids if ids.count(i) > 1}):
        diags.append(f"domain {dup!r}: duplicate domain id")
    gids = [g.id for g in system.guards]
    for dup in sorted({i for i in gids if gids.count(i) > 1}):
        diags.append(f"guard {dup!r}: duplicate guard id")

    by_id = {d.id: d for d in system.domains}
    probes = probes or {}
    points: dict[str, np.ndarray] = {}
    for d in system.domains:
        if d.dim < 1:
            diags.append(f"domain {d.id!r}: dim must be positive, got {d.dim}")
            continue
        if len(d.coord_names) != d.dim:
            diags.append(f"domain {d.id!r}: {len(d.coord_names)} coord names for dim {d.dim}")
        for i, period in d.wrap:
            if not (period > 0):
                diags.append(f"domain {d.id!r}: wrap period for coordinate {i} must be positive")
            if not 0 <= i < d.dim:
                diags.append(f"domain {d.id!r}: wrap index {i} out of range")
        x = np.asarray(probes.get(d.id, _probe_point(d)), dtype=float)
        points[d.id] = x
        try:
            out = np.asarray(d.field(x), dtype=float)
        except Exception as exc:  # diagnostics, not exceptions
            diags.append(f"domain {d.id!r}: field raised {exc!r}")
            continue
        if out.shape != (d.dim,):
            diags.append(f"domain {d.id!r}: field output length {out.size} != dim {d.dim}")

    for g in system.guards:
        missing = [end for end in (g.src, g.dst) if end not in by_id]
        for end in missing:
            diags.append(f"guard {g.id!r}: unresolved domain id {end!r}")
        if missing:
            continue
        x = points.get(g.src)
        if x is None:
            continue
        try:
            out = np.asarray(g.reset(x), dtype=float)
        except Exception as exc:
            diags.append(f"guard {g.id!r}: reset raised {exc!r}")
            continue
        dst_dim = by_id[g.dst].dim
        if out.shape != (dst_dim,):
            diags.append(
                f"guard {g.id!r}: reset output length {out.size} != dst {g.dst!r} dim {dst_dim}"
            )
    return diags
