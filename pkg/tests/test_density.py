import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from obsgraph import density
from obsgraph.errors import InvalidInputError


def exact_frac(n, alpha):
    x = Fraction(n) * Fraction(alpha)
    return float(x - math.floor(x))


def test_frac_mul_matches_exact_rational_arithmetic():
    alpha = math.sqrt(2)
    n = np.array([-10**7, -123457, -1, 0, 1, 2, 99991, 3 * 10**6 + 7, 10**7])
    got = density.frac_mul(n, alpha)
    want = np.array([exact_frac(int(k), alpha) for k in n])
    assert np.abs(got - want).max() <= 1e-15


def test_frac_mul_range_check():
    with pytest.raises(InvalidInputError):
        density.frac_mul([2**26], 0.5)


@pytest.mark.parametrize(
    "oracle, L, expected",
    [
        (density.periodic(2, [0]), 5, Fraction(5, 11)),
        (density.periodic(1, [0]), 7, Fraction(1)),
        (density.periodic(4, [0, 1]), 2, Fraction(2, 5)),
    ],
)
def test_thickness_examples(oracle, L, expected):
    (c,) = density.thickness_profile(oracle, [L])
    assert c.exact
    assert Fraction(c.min_count, 2 * L + 1) == expected


def test_evens_thickness_borderline():
    prof = density.thickness_profile(density.periodic(2, [0]), range(1, 1001))
    for c in prof:
        assert c.min_count == c.L
        assert c.gamma_L < 0.5
        assert c.gamma_L >= 0.5 - 1 / (2 * c.L + 1)


def test_beurling_examples():
    est = density.beurling_estimate(density.periodic(2, [0]), [1000])
    assert abs(est.d_minus - 0.5) <= 1e-3 and abs(est.d_plus - 0.5) <= 1e-3
    rot = density.beurling_estimate(density.rotation(math.sqrt(2), 0.3), [100_000])
    assert abs(rot.d_minus - 0.3) <= 0.02 and abs(rot.d_plus - 0.3) <= 0.02
    assert not rot.exact
    empty = density.beurling_estimate(density.explicit([]), [10, 100])
    assert empty.lower_profile == (0.0, 0.0) and empty.upper_profile == (0.0, 0.0)


def test_beurling_requires_increasing_radii():
    with pytest.raises(InvalidInputError):
        density.beurling_estimate(density.periodic(2, [0]), [100, 10])


@pytest.mark.parametrize("p, R", [(2, [0]), (3, [0, 1]), (5, [1, 2, 4]), (7, [0]), (6, [0, 1, 2, 3, 4])])
def test_periodic_density_profiles(p, R):
    radii = [10, 100, 1000, 10_000]
    est = density.beurling_estimate(density.periodic(p, R), radii)
    q = len(R) / p
    for Rr, lo, hi in est.rows():
        assert 0 <= lo <= hi <= 1 + 1 / (2 * Rr)
        assert abs(lo - q) <= p / (2 * Rr) and abs(hi - q) <= p / (2 * Rr)
    prof = density.thickness_profile(density.periodic(p, R), range(1, 200))
    # thick sets have at least that lower density
    assert all(c.gamma_L <= est.d_minus + p / (2 * radii[-1]) for c in prof)
    # and sets of density q are q'-thick for every q' < q
    for qp in (q - 0.1, q - 0.01):
        assert any(c.gamma_L >= qp for c in prof)


@given(st.integers(1, 9), st.data())
def test_window_counts_against_brute_force(p, data):
    R = data.draw(st.sets(st.integers(0, p - 1), min_size=1))
    E = density.periodic(p, R)
    centers = np.array(data.draw(st.lists(st.integers(-1000, 1000), min_size=1, max_size=20)))
    radius = data.draw(st.integers(0, 30))
    got = density.window_counts(E, centers, radius)
    want = [sum((n % p) in R for n in range(c - radius, c + radius + 1)) for c in centers]
    np.testing.assert_array_equal(got, want)


def test_rotation_set_membership():
    E = density.rotation(math.sqrt(2), 0.3)
    n = np.arange(-40, 40)
    f = np.array([exact_frac(int(k), math.sqrt(2)) for k in n])
    np.testing.assert_array_equal(E.contains(n), (n % 2 == 0) & (np.abs(f - 0.5) < 0.3))


def test_weyl_probe_examples():
    arc = (np.pi - 0.6 * np.pi, np.pi + 0.6 * np.pi)
    probe = density.weyl_probe(math.sqrt(2), arc, M_values=(1_000, 10_000, 100_000))
    assert probe.deviations[-1] <= 0.01
    assert probe.deviations[0] >= probe.deviations[-1]
    full = density.weyl_probe(math.sqrt(2), (0.0, 2 * np.pi))
    assert full.deviations == (0.0, 0.0, 0.0)


def test_weyl_probe_doubling_trend_golden_ratio():
    phi = (1 + math.sqrt(5)) / 2
    Ms = (1_000, 2_000, 4_000, 8_000, 16_000, 32_000, 64_000)
    devs = density.weyl_probe(phi, (0.0, 2.0), M_values=Ms).deviations
    # bounded discrepancy gives roughly 1/M decay; allow local wobble
    assert devs[-1] < devs[0]
    assert all(b <= 1.5 * a for a, b in zip(devs, devs[1:]))


def test_rotation_requires_valid_gamma():
    with pytest.raises(InvalidInputError):
        density.rotation(math.sqrt(2), 0.7)


def test_union_period():
    U = density.union(density.periodic(4, [0]), density.periodic(6, [1]))
    assert U.period == 12
    (c,) = density.thickness_profile(U, [5])
    assert c.exact
