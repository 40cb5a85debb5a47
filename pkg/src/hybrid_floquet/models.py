"""Bundled systems: a forced two-mass vertical hopper and a linear
single-domain system whose reset annihilates a nilpotent block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import DomainDef, GuardDef, HybridSystemDef
from .flow import affine_field
from .poincare import SectionDef

TWO_PI = 2.0 * math.pi

HOPPER_COORDS = ("phi", "x", "xdot", "y", "ydot")


@dataclass(frozen=True)
class HopperParams:
    m: float = 1.0  # lower mass
    M: float = 2.0  # upper mass
    k: float = 10.0  # spring stiffness
    b: float = 5.0  # drag on the lower mass while airborne
    l0: float = 2.0  # spring rest length
    a: float = 20.0  # actuator amplitude
    omega: float = TWO_PI  # forcing frequency
    g: float = 2.0

    def __post_init__(self):
        for name in ("m", "M", "k", "l0", "omega", "g"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("a", "b"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be non-negative")


def make_hopper(p: HopperParams | None = None) -> HybridSystemDef:
    """Vertical hopper with an aerial domain (phi, x, xdot, y, ydot) and a
    ground domain (phi, y, ydot); phi wraps modulo 2*pi.

    Touchdown fires when the lower mass height x reaches 0 and discards
    (x, xdot) (plastic impact). Liftoff fires when the ground normal force
    k*l0 + a*sin(phi) - k*y + g*m reaches 0.
    """
    p = p or HopperParams()
    m, M, k, b, l0, a, w, g = p.m, p.M, p.k, p.b, p.l0, p.a, p.omega, p.g

    def air_field(s):
        phi, x, xd, y, yd = s
        act = a * math.sin(phi)
        spring = k * (y - x)
        return np.array([
            w,
            xd,
            (-k * l0 - act + spring - b * xd - g * m) / m,
            yd,
            (k * l0 + act - spring - g * M) / M,
        ])

    def ground_field(s):
        phi, y, yd = s
        return np.array([w, yd, (k * l0 + a * math.sin(phi) - k * y - g * M) / M])

    def touchdown_event(s):
        return s[1]

    def touchdown_reset(s):
        return np.array([s[0], s[3], s[4]])

    def liftoff_event(s):
        return k * l0 + a * math.sin(s[0]) - k * s[1] + g * m

    def liftoff_reset(s):
        return np.array([s[0], 0.0, 0.0, s[1], s[2]])

    air = DomainDef("air", 5, HOPPER_COORDS, air_field, wrap=((0, TWO_PI),))
    ground = DomainDef("ground", 3, ("phi", "y", "ydot"), ground_field, wrap=((0, TWO_PI),))
    guards = (
        GuardDef("touchdown", "air", "ground", touchdown_event, touchdown_reset),
        GuardDef("liftoff", "ground", "air", liftoff_event, liftoff_reset),
    )
    return HybridSystemDef((air, ground), guards, name="hopper")


def _phase_event(phase: float):
    # smooth in phi; decreases through 0 only where phi passes `phase` (phi' > 0)
    def event(s):
        return -math.sin(s[0] - phase)

    return event


def hopper_section(phase: float = math.pi) -> SectionDef:
    """Section {phi = phase} in the ground domain, chart (y, ydot).

    The default phase pi is the ground-phase crossing of the period-one
    orbit at default parameters; see the README for the phase convention.
    """
    phase = float(phase)

    def coords(s):
        return np.array([s[1], s[2]])

    def lift(u):
        return np.array([phase, u[0], u[1]])

    return SectionDef("ground", _phase_event(phase), coords, lift, name=f"ground@phi={phase:.6g}")


def hopper_aerial_section(phase: float) -> SectionDef:
    """Section {phi = phase} in the aerial domain, chart (x, xdot, y, ydot)."""
    phase = float(phase)

    def coords(s):
        return np.array([s[1], s[2], s[3], s[4]])

    def lift(u):
        return np.array([phase, u[0], u[1], u[2], u[3]])

    return SectionDef("air", _phase_event(phase), coords, lift, name=f"air@phi={phase:.6g}")


def midair_phase(orbit, params: HopperParams | None = None) -> float:
    """Phase halfway through the orbit's aerial arc."""
    params = params or HopperParams()
    j = list(orbit.domain_sequence).index("air")
    start = float(orbit.entry_points[j][0])
    return (start + 0.5 * params.omega * orbit.dwell_times[j]) % TWO_PI


def _jordan_block(n: int) -> np.ndarray:
    return np.eye(n, k=1)


@dataclass(frozen=True)
class FloquetExampleParams:
    k: int = 2
    l: int = 2
    A: np.ndarray | None = field(default=None, compare=False)
    lambda_x: float = -1.0
    lambda_z: float = -1.0
    xi: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.k < 1 or self.l < 1:
            raise ValueError("block dimensions must be >= 1")
        if not (self.lambda_x < 0 and self.lambda_z < 0):
            raise ValueError("lambda_x and lambda_z must be negative")
        A = _jordan_block(self.l) if self.A is None else np.array(self.A, dtype=float)
        if A.shape != (self.l, self.l):
            raise ValueError(f"A must be {self.l}x{self.l}")
        if np.any(np.linalg.matrix_power(A, self.l) != 0.0):
            raise ValueError("A must satisfy A**l == 0 exactly")
        xi = np.zeros(self.k) if self.xi is None else np.array(self.xi, dtype=float)
        if xi.shape != (self.k,):
            raise ValueError(f"xi must have length {self.k}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "xi", xi)

    @property
    def dim(self) -> int:
        return 1 + self.k + self.l


def make_floquet_example(p: FloquetExampleParams | None = None) -> HybridSystemDef:
    """One domain (t, x, z) with t' = 1, x' = lambda_x (x - xi), z' = lambda_z z.

    At t = 1 the reset (1, x, z) -> (0, x, A z) applies; A nilpotent.
    """
    p = p or FloquetExampleParams()
    k, l = p.k, p.l
    A, xi, lx, lz = p.A, p.xi, p.lambda_x, p.lambda_z

    # affine field s' = L s + c; the stepper applies it as one affine map per step
    n = 1 + k + l
    L = np.zeros((n, n))
    L[1:1 + k, 1:1 + k] = lx * np.eye(k)
    L[1 + k:, 1 + k:] = lz * np.eye(l)
    c = np.zeros(n)
    c[0] = 1.0
    c[1:1 + k] = -lx * xi

    vf = affine_field(L, c)

    def event(s):
        return 1.0 - s[0]

    def reset(s):
        out = np.empty_like(s)
        out[0] = 0.0
        out[1:1 + k] = s[1:1 + k]
        out[1 + k:] = A @ s[1 + k:]
        return out

    names = ("t",) + tuple(f"x{i + 1}" for i in range(k)) + tuple(f"z{i + 1}" for i in range(l))
    dom = DomainDef("D", 1 + k + l, names, vf)
    return HybridSystemDef((dom,), (GuardDef("clock", "D", "D", event, reset),), name="floquet_example")


def floquet_section(p: FloquetExampleParams | None = None, t0: float = 0.0) -> SectionDef:
    """Time section {t = t0}, chart (x, z). At t0 = 0 it is the reset image."""
    p = p or FloquetExampleParams()
    t0 = float(t0)

    def event(s):
        return t0 - s[0]

    def coords(s):
        return np.array(s[1:], dtype=float)

    def lift(u):
        return np.concatenate(([t0], np.asarray(u, dtype=float)))

    return SectionDef("D", event, coords, lift, name=f"t={t0:g}")


def floquet_return_matrix(p: FloquetExampleParams | None = None) -> np.ndarray:
    """Closed-form linearized return map on {t = 0}: diag(e^lx I, e^lz A)."""
    p = p or FloquetExampleParams()
    d = p.k + p.l
    out = np.zeros((d, d))
    out[:p.k, :p.k] = math.exp(p.lambda_x) * np.eye(p.k)
    out[p.k:, p.k:] = math.exp(p.lambda_z) * p.A
    return out
