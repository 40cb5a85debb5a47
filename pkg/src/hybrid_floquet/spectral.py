"""Multipliers, numerical rank, rank-of-iterates sweeps and section comparisons."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import HybridSystemDef, PeriodicOrbitResult
from .errors import NoConvergenceQR, NoStabilization, RankMonotonicityError
from .flow import StepperConfig
from .poincare import (
    SectionDef,
    find_fixed_point,
    jacobian_fd,
    return_fn,
    return_map,
    section_state_on_orbit,
)

DEFAULT_RTOL = 1e-6
# "nonzero multiplier" cut-off, separate from the rank tolerance
DEFAULT_ZERO_TOL = 1e-4


def _sort_key(z: complex):
    return (-abs(z), -z.real, -z.imag)


def eigenvalues(matrix) -> list[complex]:
    """All eigenvalues with multiplicity, sorted by decreasing modulus.

    Closed form for 1x1 and 2x2; LAPACK (Hessenberg + shifted QR) above.
    For real input, complex eigenvalues come out as exact conjugate pairs.
    """
    A = np.asarray(matrix)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    n = A.shape[0]
    real = not np.iscomplexobj(A)
    if n == 0:
        return []
    if n == 1:
        vals = [complex(A[0, 0])]
    elif n == 2:
        a, b, c, d = (complex(v) for v in A.ravel())
        half_tr = 0.5 * (a + d)
        disc = cmath.sqrt(0.25 * (a - d) ** 2 + b * c)
        # avoid cancellation: compute the larger root first
        big = half_tr + disc if abs(half_tr + disc) >= abs(half_tr - disc) else half_tr - disc
        det = a * d - b * c
        small = det / big if big != 0 else 0j
        vals = [big, small]
        if real:
            disc_r = 0.25 * (A[0, 0] - A[1, 1]) ** 2 + A[0, 1] * A[1, 0]
            hr = 0.5 * (A[0, 0] + A[1, 1])
            if disc_r < 0:
                im = math.sqrt(-disc_r)
                vals = [complex(hr, im), complex(hr, -im)]
            else:
                vals = [complex(v.real, 0.0) for v in vals]
    else:
        try:
            vals = [complex(v) for v in np.linalg.eigvals(A)]
        except np.linalg.LinAlgError as exc:
            raise NoConvergenceQR(str(exc)) from exc
    if real:
        vals = _pair_conjugates(vals)
    return sorted(vals, key=_sort_key)


def _pair_conjugates(vals: list[complex]) -> list[complex]:
    scale = max((abs(v) for v in vals), default=0.0) or 1.0
    reals = [complex(v.real, 0.0) for v in vals if abs(v.imag) <= 1e-13 * scale]
    upper = sorted((v for v in vals if v.imag > 1e-13 * scale), key=lambda z: (z.real, z.imag))
    lower = sorted((v.conjugate() for v in vals if v.imag < -1e-13 * scale), key=lambda z: (z.real, z.imag))
    if len(upper) != len(lower):
        raise NoConvergenceQR("complex eigenvalues of a real matrix are not paired")
    out = list(reals)
    for p, q in zip(upper, lower):
        z = 0.5 * (p + q)
        out += [z, z.conjugate()]
    return out


def numerical_rank(matrix, rtol: float = DEFAULT_RTOL) -> tuple[int, np.ndarray]:
    """Number of singular values above rtol * sigma_max, and the singular values."""
    A = np.asarray(matrix, dtype=float)
    if A.size == 0:
        return 0, np.zeros(0)
    s = np.linalg.svd(A, compute_uv=False)
    smax = s[0] if s.size else 0.0
    if smax == 0.0:
        return 0, s
    return int(np.sum(s > rtol * smax)), s


def decision_margin(singular_values, rank: int, rtol: float) -> float:
    """How far the rank decision sits from the threshold, as a ratio >= 1 when safe.

    min(sigma_r / (rtol sigma_max), rtol sigma_max / sigma_{r+1}); infinite
    when neither side has a value to compare.
    """
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0 or s[0] == 0.0:
        return math.inf
    thr = rtol * s[0]
    above = s[rank - 1] / thr if rank >= 1 else math.inf
    if rank < s.size:
        below = thr / s[rank] if s[rank] > 0 else math.inf
    else:
        below = math.inf
    return min(above, below)


@dataclass
class RankSweep:
    ranks: list[int]
    stabilization_index: int
    r: int
    basis: np.ndarray
    rtol: float
    singular_values: list[np.ndarray] = field(default_factory=list, repr=False)
    scales: list[float] = field(default_factory=list, repr=False)

    @property
    def margins(self) -> list[float]:
        return [decision_margin(s, r, self.rtol) for s, r in zip(self.singular_values, self.ranks)]

    def to_dict(self) -> dict:
        return {
            "ranks": list(self.ranks),
            "stabilization_index": self.stabilization_index,
            "r": self.r,
            "rtol": self.rtol,
            "basis": self.basis.tolist(),
            "singular_values": [s.tolist() for s in self.singular_values],
            "margins": [m if math.isfinite(m) else None for m in self.margins],
            "scales": list(self.scales),
        }


def rank_sweep(DP, n_max: int, rtol: float = DEFAULT_RTOL) -> RankSweep:
    """Numerical ranks of DP^m for m = 1..n_max.

    Each power is divided by its largest singular value before the next
    multiplication (scales recorded), so only singular-value ratios matter.
    """
    A = np.asarray(DP, dtype=float)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    d = A.shape[0]
    power = np.eye(d)
    ranks, svals, scales, powers = [], [], [], []
    for _ in range(n_max):
        power = power @ A
        rank, s = numerical_rank(power, rtol)
        scale = float(s[0]) if s.size and s[0] > 0 else 1.0
        power = power / scale
        ranks.append(rank)
        svals.append(s)
        scales.append(scale)
        powers.append(power)
    for m in range(1, n_max):
        if ranks[m] > ranks[m - 1]:
            raise RankMonotonicityError(
                "rank increased between successive powers; rtol is mis-set", ranks=ranks, rtol=rtol,
            )
    if n_max >= 2 and ranks[-1] != ranks[-2]:
        raise NoStabilization("ranks still decreasing at n_max", ranks=ranks)
    stab = n_max
    while stab > 1 and ranks[stab - 2] == ranks[-1]:
        stab -= 1
    r = ranks[stab - 1]
    U, _, _ = np.linalg.svd(powers[stab - 1])
    basis = U[:, :r].copy()
    return RankSweep(ranks, stab, r, basis, rtol, svals, scales)


@dataclass
class ConstantRank:
    r: int
    ranks: list[int]


@dataclass
class NonConstant:
    ranks: list[int]
    points: list[np.ndarray] = field(repr=False)

    @property
    def details(self) -> str:
        distinct = sorted(set(self.ranks))
        return f"ranks {distinct} observed over {len(self.ranks)} points"


def iterate_fn(fn: Callable, m: int) -> Callable:
    def composed(u):
        v = np.asarray(u, dtype=float)
        for _ in range(m):
            v = np.asarray(fn(v), dtype=float)
        return v

    return composed


def rank_profile(
    fn: Callable,
    u_star,
    iterate_m: int,
    radius: float,
    n_samples: int,
    rtol: float = DEFAULT_RTOL,
    delta_rel: float = 1e-5,
    seed: int = 0,
) -> ConstantRank | NonConstant:
    """Numerical rank of D(fn^m) at u_star and at n_samples random points of
    the sup-norm ball of ``radius`` around it.
    """
    u_star = np.asarray(u_star, dtype=float)
    rng = np.random.default_rng(seed)
    points = [u_star] + [u_star + rng.uniform(-radius, radius, u_star.size) for _ in range(n_samples)]
    g = iterate_fn(fn, iterate_m)
    ranks = []
    for i, p in enumerate(points):
        J = jacobian_fd(g, p, delta_rel)
        ranks.append(numerical_rank(J, rtol)[0])
    if len(set(ranks)) == 1:
        return ConstantRank(ranks[0], ranks)
    return NonConstant(ranks, points)


@dataclass
class FloquetReport:
    fixed_point: np.ndarray
    period: float
    jacobian: np.ndarray
    multipliers: list[complex]
    sweep: RankSweep
    stable: bool
    residual: float = float("nan")
    zero_tol: float = DEFAULT_ZERO_TOL

    @property
    def nonzero_multipliers(self) -> list[complex]:
        return [z for z in self.multipliers if abs(z) > self.zero_tol]

    def to_dict(self) -> dict:
        return {
            "fixed_point": self.fixed_point.tolist(),
            "period": self.period,
            "residual": self.residual,
            "jacobian": self.jacobian.tolist(),
            "multipliers": [[z.real, z.imag] for z in self.multipliers],
            "moduli": [abs(z) for z in self.multipliers],
            "zero_tol": self.zero_tol,
            "stable": self.stable,
            "rank_sweep": self.sweep.to_dict(),
        }


def is_stable(multipliers: Sequence[complex], zero_tol: float = DEFAULT_ZERO_TOL) -> bool:
    return all(abs(z) < 1.0 for z in multipliers if abs(z) > zero_tol)


def floquet_report(
    system: HybridSystemDef,
    section: SectionDef,
    u0,
    cfg: StepperConfig | None = None,
    *,
    method: str = "newton",
    tol: float = 1e-10,
    max_iter: int = 50,
    delta_rel: float = 1e-5,
    scheme: str = "central",
    rtol: float = DEFAULT_RTOL,
    zero_tol: float = DEFAULT_ZERO_TOL,
    n_max: int | None = None,
    max_time: float = 100.0,
) -> FloquetReport:
    """Fixed point, linearized return map, multipliers and rank sweep."""
    cfg = cfg or StepperConfig()
    u_star, residual = find_fixed_point(system, section, u0, cfg, tol, max_iter, method, max_time, delta_rel)
    period = return_map(system, section, u_star, cfg, max_time).return_time
    J = jacobian_fd(return_fn(system, section, cfg, max_time), u_star, delta_rel, scheme)
    mults = eigenvalues(J)
    sweep = rank_sweep(J, n_max or J.shape[0] + 2, rtol)
    return FloquetReport(u_star, period, J, mults, sweep, is_stable(mults, zero_tol), residual, zero_tol)


def match_spectra(a: Sequence[complex], b: Sequence[complex]) -> float:
    """Largest per-component (real or imaginary) gap under the best pairing."""
    if len(a) != len(b):
        return math.inf
    if not a:
        return 0.0
    cost = np.array([[max(abs(x.real - y.real), abs(x.imag - y.imag)) for y in b] for x in a])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


@dataclass
class SectionConsistency:
    names: list[str]
    fixed_points: list[np.ndarray]
    jacobians: list[np.ndarray]
    spectra: list[list[complex]]  # eigenvalues of DP^m
    nonzero: list[list[complex]]
    max_mismatch: float
    zero_tol: float
    m: int

    def to_dict(self) -> dict:
        return {
            "sections": self.names,
            "m": self.m,
            "zero_tol": self.zero_tol,
            "fixed_points": [u.tolist() for u in self.fixed_points],
            "spectra": [[[z.real, z.imag] for z in s] for s in self.spectra],
            "nonzero": [[[z.real, z.imag] for z in s] for s in self.nonzero],
            "max_mismatch": self.max_mismatch,
        }


def section_consistency(
    system: HybridSystemDef,
    sections: Sequence[SectionDef],
    orbit: PeriodicOrbitResult,
    cfg: StepperConfig | None = None,
    m: int = 1,
    zero_tol: float = DEFAULT_ZERO_TOL,
    tol: float = 1e-10,
    delta_rel: float = 1e-5,
    max_time: float = 100.0,
) -> SectionConsistency:
    """Compare the nonzero spectra of DP^m computed on several sections of one orbit."""
    cfg = cfg or StepperConfig()
    fps, jacs, spectra, nonzero = [], [], [], []
    for sec in sections:
        if sec is orbit.section:
            u0 = orbit.fixed_point
        else:
            u0 = section_state_on_orbit(system, orbit, sec, cfg, max_time)
        u_star, _ = find_fixed_point(system, sec, u0, cfg, tol, 50, "newton", max_time, delta_rel)
        J = jacobian_fd(return_fn(system, sec, cfg, max_time), u_star, delta_rel)
        spec = eigenvalues(np.linalg.matrix_power(J, m))
        fps.append(u_star)
        jacs.append(J)
        spectra.append(spec)
        nonzero.append([z for z in spec if abs(z) > zero_tol])
    worst = 0.0
    for i in range(len(sections)):
        for j in range(i + 1, len(sections)):
            worst = max(worst, match_spectra(nonzero[i], nonzero[j]))
    names = [s.name or s.domain for s in sections]
    return SectionConsistency(names, fps, jacs, spectra, nonzero, worst, zero_tol, m)
