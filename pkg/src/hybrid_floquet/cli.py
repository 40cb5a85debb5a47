"""Command-line front end.

    hybrid-floquet <simulate|find-orbit|floquet|rank-sweep|converge|props>
        [--config PATH] [--set key=value]... --out DIR

The config is a JSON object with the blocks listed in ``RunConfig``; unknown
keys are rejected. ``--set`` takes dotted paths (``params.a=0``,
``stepper.h=5e-4``) and JSON values, and wins over the file. Every command
writes ``manifest.json`` with the fully resolved config, so passing a
manifest back as ``--config`` reruns the same computation.

Exit codes: 0 success, 2 config error, 3 analysis failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import math
import multiprocessing
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .core import validate
from .errors import HybridError, NoConvergence
from .executor import Limits, Termination, execute
from .flow import StepperConfig
from .models import (
    FloquetExampleParams,
    HopperParams,
    floquet_section,
    hopper_aerial_section,
    hopper_section,
    make_floquet_example,
    make_hopper,
    midair_phase,
)
from .oracles import prop1_oracle, prop2_oracle
from .poincare import find_fixed_point, jacobian_fd, periodic_orbit, return_fn, return_map
from .spectral import eigenvalues, floquet_report, rank_sweep, section_consistency

log = logging.getLogger("hybrid_floquet")

EXIT_OK, EXIT_CONFIG, EXIT_ANALYSIS = 0, 2, 3
COMMANDS = ("simulate", "find-orbit", "floquet", "rank-sweep", "converge", "props")
MODELS = ("hopper", "floquet_example")

HOPPER_KEYS = ("m", "M", "k", "b", "l0", "a", "omega", "g")
FLOQUET_KEYS = ("k_dim", "l_dim", "lambda_x", "lambda_z")


class ConfigError(Exception):
    pass


@dataclass
class StepperBlock:
    method: str = "RK4"
    h: float = 1e-3
    event_tol_g: float = 1e-12
    event_tol_t: float = 1e-12
    tangency_threshold: float = 1e-8


@dataclass
class SectionBlock:
    # hopper: domain "ground" or "air" plus phase; floquet_example: t0
    domain: str | None = None
    phase: float | None = None
    t0: float | None = None


@dataclass
class SimulateBlock:
    domain0: str | None = None
    x0: list | None = None
    t_max: float = 10.0
    max_transitions: int = 10**6
    zeno_dwell: float = 1e-9
    zeno_run: int = 10


@dataclass
class OrbitBlock:
    u0: list | None = None
    method: str = "newton"
    tol: float | None = None  # hopper 1e-10, floquet_example 1e-12
    max_iter: int = 50
    max_time: float = 100.0


@dataclass
class JacobianBlock:
    delta_rel: float = 1e-5
    scheme: str = "central"


@dataclass
class RankBlock:
    rtol: float = 1e-6
    n_max: int | None = None
    zero_tol: float = 1e-4
    # optional explicit matrix for rank-sweep instead of the model's DP
    matrix: list | None = None


@dataclass
class ConvergeBlock:
    perturbations: list | None = None
    samples: int = 0
    radius: float = 0.05
    seed: int = 0
    n_cycles: int = 15


@dataclass
class PropsBlock:
    seed: int = 42
    prop1_trials: int = 1000
    max_dim: int = 6
    prop2_trials: int = 500
    literal: bool = False


@dataclass
class RunConfig:
    model: str = "hopper"
    params: dict = field(default_factory=dict)
    stepper: StepperBlock = field(default_factory=StepperBlock)
    section: SectionBlock = field(default_factory=SectionBlock)
    simulate: SimulateBlock = field(default_factory=SimulateBlock)
    orbit: OrbitBlock = field(default_factory=OrbitBlock)
    jacobian: JacobianBlock = field(default_factory=JacobianBlock)
    rank: RankBlock = field(default_factory=RankBlock)
    converge: ConvergeBlock = field(default_factory=ConvergeBlock)
    props: PropsBlock = field(default_factory=PropsBlock)


def _coerce(value, typ: str, where: str):
    t = str(typ)
    if value is None:
        if "None" in t:
            return None
        raise ConfigError(f"{where}: null not allowed")
    if t.startswith("float"):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if t.startswith("int"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if t.startswith("bool"):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if t.startswith("str"):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if t.startswith("list"):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list, got {value!r}")
        return value
    if t.startswith("dict"):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected an object, got {value!r}")
        return value
    return value


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected an object")
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {unknown}")
    kwargs = {}
    for name, value in data.items():
        f = known[name]
        if dataclasses.is_dataclass(f.default_factory if f.default_factory is not dataclasses.MISSING else None):
            kwargs[name] = _build(f.default_factory, value, f"{where}.{name}")
        else:
            kwargs[name] = _coerce(value, f.type, f"{where}.{name}")
    return cls(**kwargs)


def parse_config(data: dict) -> RunConfig:
    if isinstance(data, dict) and "manifest_version" in data:
        data = data.get("config", {})
    cfg = _build(RunConfig, data, "config")
    if cfg.model not in MODELS:
        raise ConfigError(f"config.model: must be one of {MODELS}, got {cfg.model!r}")
    allowed = HOPPER_KEYS if cfg.model == "hopper" else FLOQUET_KEYS
    unknown = sorted(set(cfg.params) - set(allowed))
    if unknown:
        raise ConfigError(f"config.params: unknown key(s) {unknown} for model {cfg.model}")
    for key, value in cfg.params.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"config.params.{key}: expected a number")
    return cfg


def _set_path(data: dict, dotted: str, raw: str) -> None:
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    keys = dotted.split(".")
    node = data
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"--set {dotted}: {k} is not an object")
    node[keys[-1]] = value


def load_config(path: str | None, overrides: list[str]) -> RunConfig:
    data: dict = {}
    if path:
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON in {path}: {exc}")
        if isinstance(data, dict) and "manifest_version" in data:
            data = data.get("config", {})
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        _set_path(data, key.strip(), raw.strip())
    return parse_config(data)


class Setup:
    """The model, section and stepper resolved from a RunConfig."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        try:
            self.stepper = StepperConfig(**dataclasses.asdict(cfg.stepper))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config.stepper: {exc}")
        try:
            if cfg.model == "hopper":
                self.hopper = HopperParams(**{k: float(v) for k, v in cfg.params.items()})
                self.system = make_hopper(self.hopper)
            else:
                p = cfg.params
                self.floquet = FloquetExampleParams(
                    k=int(p.get("k_dim", 2)),
                    l=int(p.get("l_dim", 2)),
                    lambda_x=float(p.get("lambda_x", -1.0)),
                    lambda_z=float(p.get("lambda_z", -1.0)),
                )
                self.system = make_floquet_example(self.floquet)
        except ValueError as exc:
            raise ConfigError(f"config.params: {exc}")
        diags = validate(self.system)
        if diags:
            raise ConfigError("invalid system: " + "; ".join(diags))
        self.section = self._section()

    def _section(self):
        s = self.cfg.section
        if self.cfg.model == "hopper":
            if s.t0 is not None:
                raise ConfigError("config.section.t0 applies to floquet_example only")
            domain = s.domain or "ground"
            if domain == "ground":
                return hopper_section(math.pi if s.phase is None else s.phase)
            if domain == "air":
                if s.phase is None:
                    raise ConfigError("config.section.phase is required for an aerial section")
                return hopper_aerial_section(s.phase)
            raise ConfigError(f"config.section.domain must be 'ground' or 'air', got {domain!r}")
        if s.domain is not None or s.phase is not None:
            raise ConfigError("config.section for floquet_example takes only t0")
        t0 = 0.0 if s.t0 is None else s.t0
        if not 0.0 <= t0 < 1.0:
            raise ConfigError("config.section.t0 must lie in [0, 1)")
        return floquet_section(self.floquet, t0)

    @property
    def dim(self) -> int:
        return self.system.domain(self.section.domain).dim - 1

    def default_u0(self) -> list[float]:
        if self.cfg.model == "hopper":
            if self.section.domain == "ground":
                return [2.0, 2.0]
            raise ConfigError("config.orbit.u0 is required for an aerial section")
        return [0.5] * self.dim

    def resolved(self) -> RunConfig:
        """A copy of the config with every defaulted value made explicit."""
        cfg = dataclasses.replace(self.cfg)
        if cfg.model == "hopper":
            cfg.params = dataclasses.asdict(self.hopper)
            cfg.section = SectionBlock(
                domain=self.section.domain,
                phase=float(self.section.lift(np.zeros(self.dim))[0]),
                t0=None,
            )
        else:
            f = self.floquet
            cfg.params = {"k_dim": f.k, "l_dim": f.l, "lambda_x": f.lambda_x, "lambda_z": f.lambda_z}
            cfg.section = SectionBlock(t0=float(self.section.lift(np.zeros(self.dim))[0]))
        sim = dataclasses.replace(cfg.simulate)
        if sim.domain0 is None:
            sim.domain0 = self.section.domain
        if sim.x0 is None:
            sim.x0 = self._default_x0()
        cfg.simulate = sim
        orb = dataclasses.replace(cfg.orbit)
        if orb.u0 is None:
            orb.u0 = self.default_u0()
        if orb.tol is None:
            orb.tol = 1e-10 if cfg.model == "hopper" else 1e-12
        cfg.orbit = orb
        rank = dataclasses.replace(cfg.rank)
        if rank.n_max is None:
            size = len(rank.matrix) if rank.matrix is not None else self.dim
            rank.n_max = size + 2
        cfg.rank = rank
        conv = dataclasses.replace(cfg.converge)
        if conv.perturbations is None and conv.samples == 0:
            conv.perturbations = [[0.05] * self.dim] if cfg.model == "hopper" else [[1.0] * self.dim]
        cfg.converge = conv
        return cfg

    def _default_x0(self) -> list[float]:
        if self.cfg.model == "hopper":
            if self.section.domain == "ground":
                return [float(v) for v in self.section.lift(np.array([1.96, 1.88]))]
            raise ConfigError("config.simulate.x0 is required for an aerial section")
        return [float(v) for v in self.section.lift(np.full(self.dim, 0.5))]


def _vector(value, n: int, where: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a list of numbers")
    if arr.shape != (n,):
        raise ConfigError(f"{where}: expected {n} numbers, got shape {arr.shape}")
    return arr


def threads() -> int:
    raw = os.environ.get("HF_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ConfigError(f"HF_THREADS must be an integer, got {raw!r}")
    return os.cpu_count() or 1


_FORK_JOB: Any = None


def _fork_call(i: int):
    return _FORK_JOB(i)


def parallel_map(fn, n_items: int, n_workers: int) -> list:
    """[fn(0), ..., fn(n_items - 1)], fanned out over forked workers when allowed.

    Results are merged by index, so the output does not depend on the
    worker count.
    """
    global _FORK_JOB
    if n_workers <= 1 or n_items <= 1 or "fork" not in multiprocessing.get_all_start_methods():
        return [fn(i) for i in range(n_items)]
    _FORK_JOB = fn
    try:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(min(n_workers, n_items)) as pool:
            return pool.map(_fork_call, range(n_items))
    finally:
        _FORK_JOB = None


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _finite(obj):
    # JSON has no inf/nan; map them to null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


def write_json(path: Path, payload) -> None:
    text = json.dumps(_finite(json.loads(json.dumps(payload, default=_json_default))), indent=2)
    path.write_text(text + "\n")


def write_manifest(out: Path, command: str, cfg: RunConfig, outputs: list[str], result: dict, status: str):
    write_json(out / "manifest.json", {
        "manifest_version": 1,
        "tool": "hybrid-floquet",
        "version": __version__,
        "command": command,
        "status": status,
        "config": dataclasses.asdict(cfg),
        "outputs": outputs,
        "result": result,
    })


def _fmt(v: float) -> str:
    return repr(float(v))


def write_trajectory_csv(path: Path, system, execution) -> None:
    columns = system.coordinate_union()
    with path.open("w", newline="") as fh:
        fh.write("# one row per sample; empty cell = coordinate not defined in the active domain\r\n")
        w = csv.writer(fh)
        w.writerow(["t", "domain"] + columns)
        for arc in execution.arcs:
            names = system.domain(arc.domain).coord_names
            for t, x in arc.samples:
                row = dict(zip(names, x))
                w.writerow([_fmt(t), arc.domain] + [_fmt(row[c]) if c in row else "" for c in columns])


class AnalysisFailure(Exception):
    def __init__(self, message: str, result: dict):
        super().__init__(message)
        self.result = result


def cmd_simulate(setup: Setup, cfg: RunConfig, out: Path) -> tuple[dict, list[str]]:
    sim = cfg.simulate
    if sim.domain0 not in [d.id for d in setup.system.domains]:
        raise ConfigError(f"config.simulate.domain0: unknown domain {sim.domain0!r}")
    x0 = _vector(sim.x0, setup.system.domain(sim.domain0).dim, "config.simulate.x0")
    if sim.t_max < 0:
        raise ConfigError("config.simulate.t_max must be >= 0")
    limits = Limits(sim.max_transitions, sim.zeno_dwell, sim.zeno_run)
    ex = execute(setup.system, sim.domain0, x0, sim.t_max, setup.stepper, limits)
    write_trajectory_csv(out / "trajectory.csv", setup.system, ex)
    result = {
        "termination": ex.termination.value,
        "transitions": ex.transitions,
        "message": ex.message,
        "t_final": ex.t_final,
        "arcs": [
            {"domain": a.domain, "t_entry": a.t_entry, "t_exit": a.t_exit, "exit_guard": a.exit_guard}
            for a in ex.arcs
        ],
    }
    if ex.termination != Termination.TimeLimit:
        raise AnalysisFailure(f"execution ended with {ex.termination.value}", result)
    return result, ["trajectory.csv"]


def _orbit(setup: Setup, cfg: RunConfig):
    o = cfg.orbit
    u0 = _vector(o.u0, setup.dim, "config.orbit.u0")
    if o.method not in ("newton", "iterate"):
        raise ConfigError("config.orbit.method must be 'newton' or 'iterate'")
    u_star, residual = find_fixed_point(
        setup.system, setup.section, u0, setup.stepper, o.tol, o.max_iter, o.method, o.max_time,
        cfg.jacobian.delta_rel,
    )
    orbit = periodic_orbit(setup.system, setup.section, u_star, setup.stepper, o.max_time)
    return dataclasses.replace(orbit, residual=residual)


def cmd_find_orbit(setup: Setup, cfg: RunConfig, out: Path):
    orbit = _orbit(setup, cfg)
    payload = orbit.to_dict()
    payload["section"] = setup.section.name
    write_json(out / "orbit.json", payload)
    return payload, ["orbit.json"]


def cmd_floquet(setup: Setup, cfg: RunConfig, out: Path):
    o, j, r = cfg.orbit, cfg.jacobian, cfg.rank
    u0 = _vector(o.u0, setup.dim, "config.orbit.u0")
    rep = floquet_report(
        setup.system, setup.section, u0, setup.stepper, method=o.method, tol=o.tol, max_iter=o.max_iter,
        delta_rel=j.delta_rel, scheme=j.scheme, rtol=r.rtol, zero_tol=r.zero_tol, n_max=r.n_max,
        max_time=o.max_time,
    )
    payload = rep.to_dict()
    payload["section"] = setup.section.name
    outputs = ["floquet.json"]
    if cfg.model == "hopper" and setup.section.domain == "ground":
        orbit = periodic_orbit(setup.system, setup.section, rep.fixed_point, setup.stepper, o.max_time)
        aerial = hopper_aerial_section(midair_phase(orbit, setup.hopper))
        sc = section_consistency(
            setup.system, [setup.section, aerial], orbit, setup.stepper, 1, r.zero_tol, o.tol, j.delta_rel,
            o.max_time,
        )
        payload["section_consistency"] = sc.to_dict()
    write_json(out / "floquet.json", payload)
    summary = {k: payload[k] for k in ("fixed_point", "period", "multipliers", "moduli", "stable")}
    summary["ranks"] = rep.sweep.ranks
    return summary, outputs


def cmd_rank_sweep(setup: Setup, cfg: RunConfig, out: Path):
    r = cfg.rank
    if r.matrix is not None:
        DP = np.asarray(r.matrix, dtype=float)
        if DP.ndim != 2 or DP.shape[0] != DP.shape[1]:
            raise ConfigError("config.rank.matrix must be square")
        source = "config"
    else:
        orbit = _orbit(setup, cfg)
        fn = return_fn(setup.system, setup.section, setup.stepper, cfg.orbit.max_time)
        DP = jacobian_fd(fn, orbit.fixed_point, cfg.jacobian.delta_rel, cfg.jacobian.scheme)
        source = "fd_jacobian"
    sweep = rank_sweep(DP, r.n_max or DP.shape[0] + 2, r.rtol)
    payload = sweep.to_dict()
    payload["source"] = source
    payload["matrix"] = DP.tolist()
    write_json(out / "rank_sweep.json", payload)
    return {k: payload[k] for k in ("ranks", "stabilization_index", "r", "margins")}, ["rank_sweep.json"]


def _perturbations(setup: Setup, cfg: RunConfig) -> np.ndarray:
    c = cfg.converge
    d = setup.dim
    rows = []
    if c.perturbations is not None:
        rows += [_vector(p, d, "config.converge.perturbations[]") for p in c.perturbations]
    if c.samples:
        rng = np.random.default_rng(c.seed)
        for _ in range(c.samples):
            v = rng.normal(size=d)
            v *= c.radius * rng.uniform() ** (1.0 / d) / np.linalg.norm(v)
            rows.append(v)
    if not rows:
        raise ConfigError("config.converge: no perturbations and samples = 0")
    return np.array(rows)


def cmd_converge(setup: Setup, cfg: RunConfig, out: Path):
    """Iterate the return map from perturbed starts and tabulate, per cycle,
    the distance to the fixed point and the part of it orthogonal to the
    stabilized range of DP.
    """
    orbit = _orbit(setup, cfg)
    u_star = orbit.fixed_point
    fn = return_fn(setup.system, setup.section, setup.stepper, cfg.orbit.max_time)
    DP = jacobian_fd(fn, u_star, cfg.jacobian.delta_rel, cfg.jacobian.scheme)
    sweep = rank_sweep(DP, cfg.rank.n_max or DP.shape[0] + 2, cfg.rank.rtol)
    B = sweep.basis
    perts = _perturbations(setup, cfg)
    n_cycles = cfg.converge.n_cycles

    def one_run(i: int):
        u = u_star + perts[i]
        traj = [u]
        for _ in range(n_cycles):
            u = fn(u)
            traj.append(u)
        return np.array(traj)

    runs = parallel_map(one_run, len(perts), threads())
    d = setup.dim
    max_orth_after = [0.0] * (n_cycles + 1)
    with (out / "converge.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["run", "cycle"] + [f"u{i + 1}" for i in range(d)] + ["dist_fixed", "dist_orth", "ratio"])
        for i, traj in enumerate(runs):
            prev = None
            for n, u in enumerate(traj):
                e = u - u_star
                dist = float(np.linalg.norm(e))
                orth = float(np.linalg.norm(e - B @ (B.T @ e)))
                max_orth_after[n] = max(max_orth_after[n], orth)
                ratio = "" if prev in (None, 0.0) else _fmt(dist / prev)
                w.writerow([i, n] + [_fmt(v) for v in u] + [_fmt(dist), _fmt(orth), ratio])
                prev = dist
    dists = np.array([[np.linalg.norm(u - u_star) for u in traj] for traj in runs])
    lo, hi = min(5, n_cycles), n_cycles
    rate = None
    if hi > lo and np.all(dists[:, lo] > 0):
        rate = [float((dists[i, hi] / dists[i, lo]) ** (1.0 / (hi - lo))) for i in range(len(runs))]
    result = {
        "fixed_point": u_star.tolist(),
        "multipliers": [[z.real, z.imag] for z in eigenvalues(DP)],
        "ranks": sweep.ranks,
        "r": sweep.r,
        "basis": B.tolist(),
        "runs": len(runs),
        "max_dist_orth_by_cycle": max_orth_after,
        "mean_contraction_rate": rate,
        "rate_window": [lo, hi],
    }
    return result, ["converge.csv"]


def cmd_props(setup: Setup, cfg: RunConfig, out: Path):
    p = cfg.props
    r1 = prop1_oracle(p.prop1_trials, p.max_dim, p.seed)
    r2 = prop2_oracle(p.prop2_trials, p.seed, literal=p.literal)
    payload = {"prop1": r1.to_dict(), "prop2": r2.to_dict()}
    write_json(out / "props.json", payload)
    result = {
        "prop1_violations": len(r1.violations),
        "prop2_violations": len(r2.violations),
    }
    if r1.violations or r2.violations:
        raise AnalysisFailure("oracle violations found", result)
    return result, ["props.json"]


HANDLERS = {
    "simulate": cmd_simulate,
    "find-orbit": cmd_find_orbit,
    "floquet": cmd_floquet,
    "rank-sweep": cmd_rank_sweep,
    "converge": cmd_converge,
    "props": cmd_props,
}


def build_parser() -> argparse.ArgumentParser:
    defaults = json.dumps(dataclasses.asdict(RunConfig()), indent=1)
    parser = argparse.ArgumentParser(
        prog="hybrid-floquet",
        description="Simulate hybrid systems and analyse their periodic orbits.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=(
            "Config defaults. null means model-dependent: hopper uses u0 = [2, 2], orbit tol 1e-10,\n"
            "the ground section at phi = pi and perturbation [0.05, 0.05]; floquet_example uses\n"
            "u0 = 0.5 per coordinate, tol 1e-12, t0 = 0 and perturbation 1 per coordinate.\n"
            "rank.n_max defaults to the section dimension + 2.\n"
            + defaults
            + "\n\nEnvironment: HF_THREADS caps worker processes (default: CPU count)."
            + "\nExit codes: 0 success, 2 config error, 3 analysis failure."
        ),
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON config file (or a manifest.json from an earlier run)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value by dotted path, e.g. params.a=0")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config, args.set)
        setup = Setup(cfg)
        cfg = setup.resolved()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    try:
        result, outputs = HANDLERS[args.command](setup, cfg, out)
        status, code = "ok", EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AnalysisFailure as exc:
        result, outputs, status, code = exc.result, [], str(exc), EXIT_ANALYSIS
        print(f"analysis failure: {exc}", file=sys.stderr)
    except NoConvergence as exc:
        best = None if exc.best is None else np.asarray(exc.best).tolist()
        result = {"error": type(exc).__name__, "message": str(exc), "best": best, "residual": exc.residual}
        outputs, status, code = [], "NoConvergence", EXIT_ANALYSIS
        print(f"analysis failure: {exc}", file=sys.stderr)
    except HybridError as exc:
        result = {"error": type(exc).__name__, "message": str(exc)}
        outputs, status, code = [], type(exc).__name__, EXIT_ANALYSIS
        print(f"analysis failure: {exc}", file=sys.stderr)
    result = dict(result)
    result["elapsed_s"] = time.perf_counter() - t0
    write_manifest(out, args.command, cfg, outputs + ["manifest.json"], result, status)
    log.info(json.dumps(_finite(json.loads(json.dumps(result, default=_json_default))), indent=1))
    return code


if __name__ == "__main__":
    sys.exit(main())
