import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybrid_floquet import (
    DomainDef,
    GuardDef,
    HopperParams,
    HybridSystemDef,
    NoImpact,
    NonFiniteState,
    StepperConfig,
    Tangency,
    make_hopper,
    sample_normalized,
    step,
    time_to_impact,
)
from hybrid_floquet.flow import AffineField, Monitor, advance, flow_for

from conftest import free_fall_system


def test_rk4_step_matches_exponential():
    out = step(lambda v: -v, np.array([1.0]), 0.1)
    assert abs(out[0] - math.exp(-0.1)) < 1e-7


@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=5), st.floats(-1.0, 1.0))
def test_zero_field_is_fixed(x, h):
    x = np.array(x)
    assert np.array_equal(step(lambda s: np.zeros_like(s), x, h), x)


def test_ground_rest_point_without_actuation():
    p = HopperParams(a=0.0)
    ground = make_hopper(p).domain("ground")
    y_rest = p.l0 - p.g * p.M / p.k
    x1 = step(ground.field, np.array([0.3, y_rest, 0.0]), 1e-3)
    assert x1[1] == pytest.approx(y_rest, abs=1e-15)
    assert x1[2] == pytest.approx(0.0, abs=1e-15)


def test_euler_and_bad_method():
    assert step(lambda v: -v, np.array([1.0]), 0.1, "Euler")[0] == pytest.approx(0.9)
    with pytest.raises(ValueError):
        step(lambda v: v, np.array([1.0]), 0.1, "Heun")


def test_nonfinite_state_raises():
    with pytest.raises(NonFiniteState):
        step(lambda v: v * np.inf, np.array([1.0]), 0.1)


def test_stepper_config_validation():
    with pytest.raises(ValueError):
        StepperConfig(h=0.0)
    with pytest.raises(ValueError):
        StepperConfig(method="RK45")


@given(st.integers(0, 10**6))
def test_affine_step_equals_generic_rk4(seed):
    rng = np.random.default_rng(seed)
    L, c, x = rng.normal(size=(4, 4)), rng.normal(size=4), rng.normal(size=4)
    h = float(rng.uniform(-0.01, 0.01))
    f = AffineField(L, c)
    for method in ("RK4", "Euler"):
        assert np.allclose(step(f, x, h, method), step(lambda s: L @ s + c, x, h, method), rtol=0, atol=1e-13)


def test_free_fall_impact_time(fall, cfg):
    res = time_to_impact(fall, "fall", [1.0, 0.0], cfg)
    assert res.guard_id == "ground"
    assert abs(res.eta - 1.0) <= 1e-9
    assert abs(res.exit_state[0]) <= cfg.event_tol_g


def test_unit_clock_impact(ex1, cfg):
    _, sys_ = ex1
    res = time_to_impact(sys_, "D", [0.0, 1.0, -1.0, 0.5, 2.0], cfg)
    assert res.eta == pytest.approx(1.0, abs=1e-12)


def test_aerial_dwell_matches_orbit(hopper, hopper_orbit, cfg):
    j = hopper_orbit.domain_sequence.index("air")
    res = time_to_impact(hopper, "air", hopper_orbit.entry_points[j], cfg)
    assert res.eta == pytest.approx(hopper_orbit.dwell_times[j], abs=1e-9)


def oscillator(w: float = 10.0) -> HybridSystemDef:
    # y'' = -w^2 y from (1, 0) reaches y = -0.5 at t = (2 pi / 3) / w
    dom = DomainDef("d", 2, ("y", "v"), lambda s: np.array([s[1], -w * w * s[0]]))
    return HybridSystemDef((dom,), (GuardDef("g", "d", "d", lambda s: s[0] + 0.5, lambda s: s),))


def test_eta_convergence_order_rk4():
    # free fall is quadratic, so RK4 is exact there; use a curved field
    exact = (2 * math.pi / 3) / 10.0
    errs = [abs(time_to_impact(oscillator(), "d", [1.0, 0.0], StepperConfig(h=h)).eta - exact)
            for h in (1e-2, 5e-3, 2.5e-3)]
    orders = [math.log2(errs[0] / errs[1]), math.log2(errs[1] / errs[2])]
    assert all(3.7 < p < 4.3 for p in orders), (errs, orders)


def test_eta_convergence_order_euler():
    exact = (2 * math.pi / 3) / 10.0
    errs = [abs(time_to_impact(oscillator(), "d", [1.0, 0.0], StepperConfig("Euler", h=h)).eta - exact)
            for h in (1e-3, 5e-4)]
    assert 0.7 < math.log2(errs[0] / errs[1]) < 1.3


def test_sample_normalized(fall, cfg):
    x0 = np.array([1.0, 0.0])
    impact = time_to_impact(fall, "fall", x0, cfg)
    first, mid, last = sample_normalized(fall, "fall", x0, cfg, [0.0, 0.5, 1.0])
    assert np.array_equal(first, x0)
    assert np.array_equal(last, impact.exit_state)
    assert mid[0] == pytest.approx(0.75, abs=1e-8)
    with pytest.raises(ValueError):
        sample_normalized(fall, "fall", x0, cfg, [1.5])


def test_no_impact_when_moving_away(fall, cfg):
    with pytest.raises(NoImpact):
        time_to_impact(fall, "fall", [1.0, 0.0], cfg, t_max=0.5)


def test_zero_rate_crossing_is_tangency(cfg):
    # x = (0.5 - t)^3 crosses zero with zero slope at t = 0.5
    dom = DomainDef("d", 3, ("x", "v", "w"), lambda s: np.array([s[1], s[2], -6.0]))
    sys_ = HybridSystemDef((dom,), (GuardDef("g", "d", "d", lambda s: s[0], lambda s: s),))
    with pytest.raises(Tangency):
        time_to_impact(sys_, "d", [0.125, -0.75, 3.0], cfg, t_max=2.0)


def test_state_on_guard_must_enter_flow_set(fall, cfg):
    with pytest.raises(Tangency):
        time_to_impact(fall, "fall", [0.0, -1.0], cfg)
    # leaving the guard upward is fine
    res = time_to_impact(fall, "fall", [0.0, 1.0], cfg)
    assert res.eta == pytest.approx(1.0, abs=1e-9)


@given(st.floats(0.05, 5.0), st.floats(-3.0, 3.0))
def test_event_residual_and_bracket(y0, v0):
    cfg = StepperConfig()
    sys_ = free_fall_system()
    res = time_to_impact(sys_, "fall", [y0, v0], cfg)
    assert abs(res.exit_state[0]) <= cfg.event_tol_g
    exact = (v0 + math.sqrt(v0 * v0 + 4 * y0)) / 2.0
    assert abs(res.eta - exact) <= 1e-9


def test_crossing_lies_in_its_step_bracket(cfg):
    dom = free_fall_system().domain("fall")
    out = advance(dom, np.array([1.0, 0.0]), cfg, 5.0, [Monitor(lambda s: s[0])], record=True)
    tau = out.crossing.tau
    last_grid = out.samples[-2][0]
    assert last_grid <= tau <= last_grid + cfg.h
    # every sample before the crossing is strictly inside the flow set
    assert all(x[0] > 0 for _, x in out.samples[:-1])


def test_flow_for_is_reversible(cfg):
    dom = make_hopper().domain("ground")
    x0 = np.array([1.0, 1.9, 0.3])
    x1 = flow_for(dom, x0, 0.2345, cfg)
    back = flow_for(dom, x1, -0.2345, cfg)
    assert np.allclose(back, x0, atol=1e-10)
