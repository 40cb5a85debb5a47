import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybrid_floquet import (
    DomainDef,
    GuardDef,
    HybridSystemDef,
    Limits,
    MaxTransitionsError,
    StepperConfig,
    Termination,
    ZenoError,
    execute,
)
from hybrid_floquet.executor import raise_for_termination

from conftest import free_fall_system

H = 2.0**-10


def test_nilpotent_unit_arcs(ex1, cfg):
    _, sys_ = ex1
    ex = execute(sys_, "D", [0.0, 1.0, 1.0, 1.0, 1.0], 5.0, cfg)
    assert ex.termination == Termination.TimeLimit
    assert ex.transitions == 5
    full = [a for a in ex.arcs if a.dwell > 0]
    assert len(full) == 5
    assert all(abs(a.dwell - 1.0) < 1e-9 for a in full)


def test_nilpotent_z_block_vanishes_after_two_transitions(ex1, cfg):
    _, sys_ = ex1
    ex = execute(sys_, "D", [0.0, 0.3, -0.7, 0.9, -1.1], 2.5, cfg)
    for arc in ex.arcs[2:]:
        assert np.all(arc.entry_state[3:] == 0.0)


def test_hopper_alternates_with_unit_period(hopper, hopper_orbit, cfg):
    x0 = hopper_orbit.section.lift(hopper_orbit.fixed_point)
    ex = execute(hopper, "ground", x0, 3.0, cfg)
    assert ex.termination == Termination.TimeLimit
    doms = [a.domain for a in ex.arcs]
    assert doms[:6] == ["ground", "air"] * 3
    touchdowns = [a.t_exit for a in ex.arcs if a.exit_guard == "touchdown"]
    assert np.allclose(np.diff(touchdowns), 1.0, atol=1e-6)


def test_zero_horizon(hopper, cfg):
    ex = execute(hopper, "ground", [math.pi, 1.9, 1.8], 0.0, cfg)
    assert ex.termination == Termination.TimeLimit
    assert len(ex.arcs) == 1 and ex.arcs[0].dwell == 0.0
    assert len(ex.arcs[0].samples) == 1


def test_determinism(hopper, cfg):
    a = execute(hopper, "ground", [math.pi, 1.9, 1.8], 4.0, cfg)
    b = execute(hopper, "ground", [math.pi, 1.9, 1.8], 4.0, cfg)
    assert len(a.arcs) == len(b.arcs)
    for x, y in zip(a.arcs, b.arcs):
        assert x.domain == y.domain and x.t_exit == y.t_exit
        assert np.array_equal(x.exit_state, y.exit_state)
        assert all(np.array_equal(p[1], q[1]) for p, q in zip(x.samples, y.samples))


def _sample_map(ex):
    return {(arc.domain, t): x for arc in ex.arcs for t, x in arc.samples}


def test_semigroup_property(ex1):
    # dyadic step and event times land exactly on the grid
    _, sys_ = ex1
    cfg = StepperConfig(h=H)
    x0 = [0.0, 0.4, -0.2, 0.8, 0.6]
    direct = execute(sys_, "D", x0, 3.5, cfg)
    first = execute(sys_, "D", x0, 1.5, cfg)
    second = execute(sys_, first.final_domain, first.final_state, 2.0, cfg, t0=first.t_final)
    assert second.t_final == direct.t_final
    assert np.array_equal(second.final_state, direct.final_state)
    d = _sample_map(direct)
    shared = [k for k in _sample_map(second) if k in d]
    assert len(shared) > 100
    s = _sample_map(second)
    assert all(np.array_equal(s[k], d[k]) for k in shared)


def test_time_bookkeeping(hopper, cfg):
    ex = execute(hopper, "ground", [math.pi, 1.9, 1.8], 5.0, cfg)
    assert sum(a.dwell for a in ex.arcs) == pytest.approx(ex.t_final, abs=1e-12)
    for prev, nxt in zip(ex.arcs, ex.arcs[1:]):
        assert prev.t_exit == nxt.t_entry


def test_zeno_detection():
    sys_ = free_fall_system()
    ex = execute(sys_, "fall", [1.0, 0.0], 10.0, StepperConfig(), Limits(zeno_dwell=0.05, zeno_run=3))
    assert ex.termination == Termination.Zeno
    with pytest.raises(ZenoError):
        raise_for_termination(ex)


def test_max_transitions():
    ex = execute(free_fall_system(), "fall", [1.0, 0.0], 10.0, StepperConfig(), Limits(max_transitions=2))
    assert ex.termination == Termination.MaxTransitions
    assert ex.transitions == 2
    with pytest.raises(MaxTransitionsError):
        raise_for_termination(ex)


def test_no_impact_via_max_dwell():
    dom = DomainDef("up", 1, ("y",), lambda s: np.array([1.0]))
    sys_ = HybridSystemDef((dom,), (GuardDef("g", "up", "up", lambda s: 5.0 - s[0], lambda s: s),))
    ex = execute(sys_, "up", [0.0], 100.0, StepperConfig(), Limits(max_dwell=1.0))
    assert ex.termination == Termination.NoImpact


@pytest.mark.filterwarnings("ignore:overflow")
def test_tangency_and_nonfinite_terminations():
    sys_ = free_fall_system()
    assert execute(sys_, "fall", [0.0, -1.0], 1.0).termination == Termination.Tangency
    assert execute(sys_, "fall", [np.nan, 0.0], 1.0).termination == Termination.NonFiniteState
    blow = DomainDef("b", 1, ("y",), lambda s: s * s)
    sys2 = HybridSystemDef((blow,), ())
    assert execute(sys2, "b", [1.0], 2.0).termination == Termination.NonFiniteState


@given(st.floats(0.1, 3.0), st.floats(-2.0, 2.0), st.floats(0.0, 4.0))
def test_executions_respect_flow_sets(y0, v0, t_max):
    ex = execute(free_fall_system(), "fall", [y0, v0], t_max, StepperConfig(h=1e-2), Limits(zeno_dwell=1e-6))
    assert ex.t_final <= t_max + 1e-12
    for arc in ex.arcs:
        assert all(x[0] >= -1e-12 for _, x in arc.samples)
