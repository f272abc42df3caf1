import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad, simpson
from scipy.linalg import expm

from obsgraph import bohr
from obsgraph.errors import InvalidInputError
from obsgraph.graphs import ObservationSet
from obsgraph.observability import gramian
from obsgraph.spectral import eigendecompose, group_eigenspaces


@pytest.mark.parametrize("p, R, observable, g", [(2, [0], False, 2), (4, [0, 1], True, 1), (6, [0, 2, 4], False, 2), (1, [0], True, 1)])
def test_arithmetic_criterion(p, R, observable, g):
    v = bohr.arithmetic_criterion(p, R)
    assert v.observable is observable and v.g == g


@pytest.mark.parametrize("p, R", [(3, []), (3, [3]), (0, [0])])
def test_invalid_bohr_sets(p, R):
    with pytest.raises(InvalidInputError):
        bohr.arithmetic_criterion(p, R)


def test_fiber_matrix_p2():
    x = 0.7
    f = bohr.fiber_matrix(2, x)
    expected = np.array([[2, -1 - np.exp(1j * x)], [-1 - np.exp(-1j * x), 2]])
    np.testing.assert_allclose(f.matrix, expected, atol=1e-15)
    np.testing.assert_allclose(np.sort(bohr.fiber_matrix(2, 0.0).mu), [0, 4], atol=1e-15)


def test_scalar_fiber():
    f = bohr.fiber_matrix(1, 1.2)
    assert f.matrix[0, 0] == pytest.approx(2 - 2 * math.cos(1.2))
    assert f.closed_form_residual() < 1e-14


def test_closed_form_spectrum_random_fibers():
    rng = np.random.default_rng(11)
    for _ in range(100):
        p = int(rng.integers(1, 13))
        f = bohr.fiber_matrix(p, rng.uniform(-np.pi, np.pi))
        assert f.closed_form_residual() <= 1e-10
        assert f.spectrum_mismatch() <= 1e-9
        assert f.mu.sum() == pytest.approx(np.trace(f.matrix).real)
        if p > 1:
            assert f.mu.sum() == pytest.approx(2 * p)
        np.testing.assert_allclose(f.U.conj().T @ f.U, p * np.eye(p), atol=1e-10)
        if p > 1:
            assert np.min(np.diff(np.sort(f.mu))) > 1e-9


def test_degenerate_fibers_examples():
    rep = bohr.degenerate_kernel_test(2, [0], -math.pi)
    assert not rep.injective and rep.agree
    assert rep.kernel_kappas() == [pytest.approx(math.pi / 2)]
    for x in (0.0, -math.pi):
        r = bohr.degenerate_kernel_test(4, [0, 1], x)
        assert r.injective and r.agree
    r = bohr.degenerate_kernel_test(6, [0, 2, 4], -math.pi)
    assert r.agree and r.kernel_kappas() == [pytest.approx(math.pi / 2)]
    assert [e.m % 2 for e in r.eigenspaces] == [1] * len(r.eigenspaces)
    with pytest.raises(InvalidInputError):
        bohr.degenerate_kernel_test(4, [0], 0.3)


def test_fiber_gramian_full_residues_is_T_identity():
    W = bohr.fiber_gramian(5, range(5), 0.4, 2.0)
    np.testing.assert_allclose(W.matrix, 2.0 * np.eye(5), atol=1e-12)


def test_fiber_gramian_zero_at_degenerate_fiber():
    assert abs(bohr.fiber_gramian(2, [0], -math.pi, 1.0).lambda_min) <= 1e-10


def test_fiber_gramian_generic_fiber_regression_and_quadrature():
    W = bohr.fiber_gramian(2, [0], math.pi / 2, 1.0)
    assert W.lambda_min == pytest.approx(0.1507720006816958, rel=1e-10)
    # independent oracle: Simpson over t of e^{-itΦ} 1_R e^{itΦ}
    Phi = bohr.fiber_matrix(2, math.pi / 2).matrix
    ts = np.linspace(0, 1, 1025)
    P = np.diag([1.0, 0.0])
    vals = np.stack([expm(-1j * t * Phi) @ P @ expm(1j * t * Phi) for t in ts])
    Wq = simpson(vals, x=ts, axis=0)
    np.testing.assert_allclose(W.matrix, Wq, atol=1e-10)


@given(st.integers(1, 8), st.floats(-math.pi, math.pi), st.floats(0.1, 10), st.integers(0, 2**16))
def test_trace_and_conjugation_invariance(p, x, T, seed):
    rng = np.random.default_rng(seed)
    R = sorted(set(rng.integers(0, p, size=rng.integers(1, p + 1)).tolist()))
    W = bohr.fiber_gramian(p, R, x, T)
    assert np.trace(W.matrix).real == pytest.approx(T * len(R), abs=1e-9)
    assert np.linalg.eigvalsh(W.matrix)[0] >= -1e-9
    # same Gramian through the generic finite-dimensional route, on Φ(x)* instead of Φ(x)
    dec = eigendecompose(bohr.fiber_matrix(p, x).matrix.conj())
    mask = np.zeros(p, dtype=bool)
    mask[R] = True
    G = gramian(dec, group_eigenspaces(dec), ObservationSet(mask), T)
    assert np.linalg.eigvalsh(G.matrix)[0] == pytest.approx(W.lambda_min, abs=1e-9)


def test_fiber_grid_contains_degenerate_fibers():
    for n in (64, 65, 256, 512):
        x = bohr.fiber_grid(n)
        assert -math.pi in x and 0.0 in x
        assert x.min() >= -math.pi and x.max() < math.pi
    with pytest.raises(InvalidInputError):
        bohr.fiber_grid(32)


def test_sweep_examples():
    v = bohr.m_T_sweep(4, [0, 1], 1.0, 512)
    assert v.observable and v.numeric_observable and v.m_T > 0 and math.isfinite(v.C_obs)
    for T in (0.5, 3.0):
        v = bohr.m_T_sweep(2, [0], T)
        assert not v.numeric_observable and v.failing_fiber == -math.pi and abs(v.m_T) <= 1e-10
        Wv = bohr.fiber_gramian(2, [0], -math.pi, T).matrix @ v.failing_vector
        assert np.linalg.norm(Wv) <= 1e-10
    assert bohr.m_T_sweep(1, [0], 2.5).m_T == pytest.approx(2.5)


def test_sweep_json_keys():
    assert set(bohr.m_T_sweep(3, [0], 1.0).to_dict()) == {"observable", "g", "m_T", "C_obs", "failing_fiber"}


@pytest.mark.parametrize("p, R, M, observable", [(2, [0], 4, False), (4, [0, 1], 8, True), (3, [0], 5, False), (3, [0, 1], 8, True)])
def test_cycle_oracle(p, R, M, observable):
    rep = bohr.fiber_cycle_oracle(p, R, M)
    assert rep.agree
    assert rep.cycle_observable is observable
    if observable:
        assert rep.relative_gap <= 1e-6


def test_cycle_oracle_requires_four_cells():
    with pytest.raises(InvalidInputError):
        bohr.fiber_cycle_oracle(2, [0], 3)


def reduced_ratio(p, delta, t):
    """Same quantity after shifting each term: ``(2/p)∫ sin²(2t sin y) χ(y)² dy / ∫ χ²``."""
    chi2 = lambda y: math.exp(-2 / (1 - (y / delta) ** 2)) if abs(y) < delta else 0.0
    num = quad(lambda y: math.sin(2 * t * math.sin(y)) ** 2 * chi2(y), -delta, delta, epsabs=0, epsrel=1e-12, limit=200)[0]
    den = quad(chi2, -delta, delta, epsabs=0, epsrel=1e-12, limit=200)[0]
    return 2 / p * num / den


@pytest.mark.parametrize("p, delta, t", [(2, math.pi / 200, 1.0), (4, math.pi / 400, 10.0), (2, math.pi / 400, 0.1)])
def test_counterexample_ratio_against_reduced_integral(p, delta, t):
    res = bohr.counterexample_ratio(p, delta, t)
    assert res.holds
    assert res.bound == pytest.approx(8 * t**2 * delta**2 / p)
    assert res.ratio == pytest.approx(reduced_ratio(p, delta, t), rel=1e-8)
    assert res.quad_error <= 1e-10 * res.bound


def test_counterexample_at_time_zero():
    res = bohr.counterexample_ratio(2, math.pi / 200, 0.0)
    assert res.ratio == 0.0 and res.bound == 0.0 and res.holds


@pytest.mark.parametrize("p, delta, nodes", [(3, 0.001, 4096), (2, math.pi / 100, 4096), (2, 0.0, 4096), (2, 0.001, 2048), (2, 0.001, 5000)])
def test_counterexample_rejects_bad_input(p, delta, nodes):
    with pytest.raises(InvalidInputError):
        bohr.counterexample_ratio(p, delta, 1.0, quad_nodes=nodes)


def test_mixed_density_exact_fraction():
    s = bohr.mixed_density_construct(0.4)
    assert (s.p, s.m, s.theta) == (5, 2, 0.0)
    n = np.arange(-50, 50)
    np.testing.assert_array_equal(s.contains(n), np.isin(n % 5, [0, 1]))
    assert bohr.arithmetic_criterion(s.p, s.base.R).observable


@pytest.mark.parametrize("q", [0.7, 0.3, 0.55, 0.95])
def test_mixed_density_hits_target(q):
    s = bohr.mixed_density_construct(q)
    assert s.base.g == 1
    n = np.arange(-10_000, 10_000)
    base = np.isin(n % s.p, s.base.R)
    assert np.all(s.contains(n)[base])
    lo, hi = s.empirical_density(100_000)
    assert abs(lo - q) <= 0.02 and abs(hi - q) <= 0.02


def test_mixed_density_q07_parameters():
    s = bohr.mixed_density_construct(0.7)
    assert (s.p, s.m) == (3, 2)
    assert s.theta == pytest.approx(0.1)


def test_mixed_density_rejects_bad_q():
    with pytest.raises(InvalidInputError):
        bohr.mixed_density_construct(1.0)
