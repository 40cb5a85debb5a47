import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybrid_floquet import (
    FloquetExampleParams,
    HopperParams,
    execute,
    floquet_return_matrix,
    floquet_section,
    hopper_aerial_section,
    hopper_section,
    make_hopper,
    return_map,
)


def test_default_parameters():
    p = HopperParams()
    assert (p.m, p.M, p.k, p.b, p.l0, p.a, p.omega, p.g) == (1, 2, 10, 5, 2, 20, 2 * math.pi, 2)


def test_parameter_validation():
    with pytest.raises(ValueError):
        HopperParams(k=-1.0)
    with pytest.raises(ValueError):
        FloquetExampleParams(A=np.eye(2))
    with pytest.raises(ValueError):
        FloquetExampleParams(lambda_x=0.5)


def test_ground_rest_point_and_liftoff_force():
    p = HopperParams(a=0.0)
    sys_ = make_hopper(p)
    rest = np.array([0.0, 1.6, 0.0])
    assert np.allclose(sys_.domain("ground").field(rest)[1:], 0.0)
    assert sys_.guard("liftoff").event(rest) == pytest.approx(6.0)


def test_unsprung_air_is_free_fall():
    sys_ = make_hopper(HopperParams(k=1e-300, b=0.0, a=0.0))
    out = sys_.domain("air").field(np.array([0.1, 1.0, 0.3, 2.0, -0.4]))
    assert out[4] == pytest.approx(-2.0)
    assert out[2] == pytest.approx(-2.0)


@given(st.lists(st.floats(-10, 10), min_size=5, max_size=5))
def test_resets_exact(s):
    sys_ = make_hopper()
    s = np.array(s)
    td = sys_.guard("touchdown").reset(s)
    assert np.array_equal(td, s[[0, 3, 4]])
    lo = sys_.guard("liftoff").reset(td)
    assert np.array_equal(lo, np.array([s[0], 0.0, 0.0, s[3], s[4]]))


def test_section_charts():
    sec = hopper_section()
    x = sec.lift(np.array([1.96, 1.88]))
    assert np.array_equal(x, [math.pi, 1.96, 1.88])
    assert abs(sec.event(x)) < 1e-15
    assert np.array_equal(sec.coords(x), [1.96, 1.88])
    air = hopper_aerial_section(1.0)
    u = np.array([0.1, 0.2, 0.3, 0.4])
    assert np.array_equal(air.coords(air.lift(u)), u)


def test_liftoff_force_positive_on_ground_arcs(hopper, cfg):
    ex = execute(hopper, "ground", [math.pi, 1.96, 1.88], 5.0, cfg)
    ev = hopper.guard("liftoff").event
    for arc in ex.arcs:
        if arc.domain == "ground" and arc.exit_guard == "liftoff":
            assert all(ev(x) > 0 for _, x in arc.samples[:-1])


def test_section_hit_once_per_period(hopper, hopper_orbit, cfg):
    res = return_map(hopper, hopper_orbit.section, hopper_orbit.fixed_point, cfg)
    assert res.return_time == pytest.approx(1.0, abs=1e-9)


def test_nilpotent_closed_form_and_nilpotency():
    p = FloquetExampleParams(k=1, l=3, lambda_x=-0.5, lambda_z=-2.0)
    M = floquet_return_matrix(p)
    assert M.shape == (4, 4)
    assert np.array_equal(np.linalg.matrix_power(M[1:, 1:], 3), np.zeros((3, 3)))
    sec = floquet_section(p)
    assert np.array_equal(sec.coords(sec.lift([1.0, 2.0, 3.0, 4.0])), [1.0, 2.0, 3.0, 4.0])
