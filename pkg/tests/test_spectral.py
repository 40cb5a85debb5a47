import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hybrid_floquet import (
    ConstantRank,
    NonConstant,
    NoStabilization,
    RankMonotonicityError,
    eigenvalues,
    floquet_report,
    floquet_section,
    hopper_aerial_section,
    hopper_section,
    midair_phase,
    numerical_rank,
    rank_profile,
    rank_sweep,
    return_fn,
    section_consistency,
)
from hybrid_floquet.spectral import decision_margin, is_stable, match_spectra

from conftest import E1

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_eigenvalue_examples():
    assert eigenvalues([[0, 1], [0, 0]]) == [0j, 0j]
    vals = eigenvalues([[-0.25, 0.70], [-0.70, -0.25]])
    assert vals[0] == pytest.approx(-0.25 + 0.70j) and vals[1] == vals[0].conjugate()
    with pytest.raises(ValueError):
        eigenvalues(np.ones((2, 3)))


@given(arrays(float, st.tuples(st.integers(1, 6), st.just(0)).map(lambda t: (t[0], t[0])), elements=finite))
def test_eigenvalues_match_numpy_and_pair(A):
    vals = eigenvalues(A)
    ref = np.linalg.eigvals(A)
    assert len(vals) == A.shape[0]
    # multiset comparison via the characteristic polynomial coefficients
    assert np.allclose(np.poly(vals), np.poly(ref), atol=1e-6 * max(1.0, np.abs(A).max() ** A.shape[0]))
    nonreal = [z for z in vals if z.imag != 0]
    for z in nonreal:
        assert z.conjugate() in nonreal


def test_numerical_rank_examples():
    assert numerical_rank(np.zeros((3, 3)))[0] == 0
    assert numerical_rank([[0, 0], [1, 0]])[0] == 1
    r, s = numerical_rank(np.diag([3.0, 2.0, 1.0]))
    assert r == 3 and list(s) == [3.0, 2.0, 1.0]


def test_decision_margin():
    assert decision_margin([1.0, 1e-12], 1, 1e-6) == pytest.approx(1e6)
    assert decision_margin([1.0, 0.5], 2, 1e-6) == pytest.approx(5e5)


def test_sweep_identity():
    sw = rank_sweep(np.eye(3), 4)
    assert sw.ranks == [3, 3, 3, 3] and sw.stabilization_index == 1 and sw.r == 3


def test_sweep_nilpotent_closed_form(ex1):
    from hybrid_floquet import floquet_return_matrix
    p, _ = ex1
    sw = rank_sweep(floquet_return_matrix(p), 6)
    assert sw.ranks == [3, 2, 2, 2, 2, 2] and sw.r == 2 and sw.stabilization_index == 2


def test_sweep_errors():
    with pytest.raises(NoStabilization):
        rank_sweep(np.eye(4, k=1), 2)
    # non-normal involution: numerically rank 1, but its square is the identity
    A = np.array([[1.0, 1e7], [0.0, -1.0]])
    with pytest.raises(RankMonotonicityError):
        rank_sweep(A, 3)


def _nilpotent_plus_block(seed):
    rng = np.random.default_rng(seed)
    k, l = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    D = np.zeros((k + l, k + l))
    D[:k, :k] = np.diag(rng.uniform(0.3, 0.9, k) * rng.choice([-1, 1], k))
    D[k:, k:] = np.eye(l, k=1) * rng.uniform(0.5, 2.0)
    Q, _ = np.linalg.qr(rng.normal(size=(k + l, k + l)))
    return Q @ D @ Q.T, k, l


@given(st.integers(0, 10**6))
def test_sweep_properties(seed):
    DP, k, l = _nilpotent_plus_block(seed)
    sw = rank_sweep(DP, k + l + 2)
    assert all(a >= b for a, b in zip(sw.ranks, sw.ranks[1:]))
    assert sw.r == k
    B = sw.basis
    assert np.allclose(B.T @ B, np.eye(k), atol=1e-12)
    resid = DP @ B - B @ (B.T @ DP @ B)
    assert np.linalg.norm(resid) <= sw.rtol * np.linalg.norm(DP)


def test_rank_profile_detects_nonconstant():
    f = lambda v: np.array([v[0] ** 2, v[0]])
    res = rank_profile(f, np.zeros(2), 2, 0.1, 20)
    assert isinstance(res, NonConstant)
    assert res.ranks[0] == 0 and 1 in res.ranks
    assert "ranks" in res.details


@given(st.integers(0, 10**6), st.integers(1, 3))
def test_rank_profile_linear_is_constant(seed, m):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(3, 3))
    res = rank_profile(lambda v: A @ v, rng.normal(size=3), m, 1.0, 5, seed=seed)
    assert isinstance(res, ConstantRank)


def test_rank_profile_hopper(hopper, hopper_orbit, cfg):
    res = rank_profile(return_fn(hopper, hopper_orbit.section, cfg), hopper_orbit.fixed_point, 1, 0.01, 4)
    assert isinstance(res, ConstantRank) and res.r == 2


def test_stability_rule():
    assert is_stable([0.5, 1e-6 + 0j, 2e-5])
    assert not is_stable([1.01, 0.1])
    assert is_stable([])


def test_match_spectra():
    assert match_spectra([1 + 1j, 0.5], [0.5, 1 + 1j]) == 0.0
    assert match_spectra([1], [1, 2]) == math.inf
    assert match_spectra([0.2 + 0.1j], [0.25 + 0.1j]) == pytest.approx(0.05)


def test_floquet_report_nilpotent(ex1, cfg):
    p, sys_ = ex1
    rep = floquet_report(sys_, floquet_section(p), [0.5] * 4, cfg, tol=1e-12)
    assert rep.stable and rep.sweep.r == 2
    nz = rep.nonzero_multipliers
    assert len(nz) == 2 and all(abs(z - E1) <= 1e-6 for z in nz)
    d = rep.to_dict()
    assert d["rank_sweep"]["ranks"][:2] == [3, 2]


def test_single_section_consistency(hopper, hopper_orbit, cfg):
    sc = section_consistency(hopper, [hopper_orbit.section], hopper_orbit, cfg)
    assert sc.max_mismatch == 0.0


def test_nilpotent_time_sections_agree(ex1, cfg):
    from hybrid_floquet import periodic_orbit
    p, sys_ = ex1
    orbit = periodic_orbit(sys_, floquet_section(p), np.zeros(4), cfg)
    sc = section_consistency(sys_, [floquet_section(p), floquet_section(p, 0.5)], orbit, cfg)
    assert sc.max_mismatch <= 1e-9
    assert [len(n) for n in sc.nonzero] == [2, 2]


def test_hopper_aerial_section_consistency(hopper, hopper_orbit, cfg):
    air = hopper_aerial_section(midair_phase(hopper_orbit))
    sc = section_consistency(hopper, [hopper_orbit.section, air], hopper_orbit, cfg)
    assert sc.max_mismatch <= 1e-2
    assert len(sc.spectra[1]) == 4 and len(sc.nonzero[1]) == 2
    assert sorted(abs(z) for z in sc.spectra[1])[:2][-1] < 1e-3
