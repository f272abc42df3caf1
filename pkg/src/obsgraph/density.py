"""Thickness and Beurling density of subsets of ℤ given by membership oracles."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "SetOracle",
    "ThicknessCertificate",
    "DensityEstimate",
    "WeylProbe",
    "frac_mul",
    "periodic",
    "rotation",
    "explicit",
    "union",
    "window_counts",
    "thickness_profile",
    "beurling_estimate",
    "weyl_probe",
]

DEFAULT_SCAN_RANGE = 10**6
DEFAULT_RANDOM_CENTERS = 10_000
_SPLITTER = 134217729.0  # 2**27 + 1


def frac_mul(n, alpha: float) -> np.ndarray:
    """Fractional part of ``n·alpha`` for integer ``n`` with ``|n| < 2**26``.

    ``alpha`` is split into a 26-bit head and a tail so ``n·head`` is exact
    in double precision and the rounding error stays near 1e-16.
    """
    n = np.asarray(n, dtype=np.int64)
    if n.size and np.abs(n).max() >= 2**26:
        raise InvalidInputError("frac_mul supports |n| < 2**26")
    c = _SPLITTER * alpha
    hi = c - (c - alpha)
    lo = alpha - hi
    x = n.astype(np.float64) * hi
    x -= np.floor(x)
    x += n.astype(np.float64) * lo
    return x - np.floor(x)


@dataclass(frozen=True)
class SetOracle:
    """Deterministic membership predicate on ℤ.

    ``period`` is set for periodic sets, which makes window scans exact.
    """

    kind: str
    membership: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    period: int | None = None
    params: dict = field(default_factory=dict)

    def contains(self, n) -> np.ndarray:
        return np.asarray(self.membership(np.asarray(n, dtype=np.int64)), dtype=bool)


def periodic(p: int, residues) -> SetOracle:
    """``E = ⋃_{s∈R} (pℤ + s)``."""
    if p < 1:
        raise InvalidInputError("modulus must be positive")
    res = np.array(sorted({int(r) % p for r in residues}), dtype=np.int64)
    return SetOracle(
        kind="periodic",
        membership=lambda n: np.isin(n % p, res),
        period=p,
        params={"p": p, "R": res.tolist()},
    )


def rotation(alpha: float, gamma: float, base: int = 2) -> SetOracle:
    """``E_γ = {n ∈ base·ℤ : {nα} ∈ (1/2 - γ, 1/2 + γ)}``."""
    if not 0 < gamma <= 0.5:
        raise InvalidInputError("gamma must lie in (0, 1/2]")

    def member(n):
        f = frac_mul(n, alpha)
        return (n % base == 0) & (np.abs(f - 0.5) < gamma)

    return SetOracle(kind="rotation", membership=member, params={"alpha": alpha, "gamma": gamma, "base": base})


def explicit(indices) -> SetOracle:
    pts = np.unique(np.asarray(list(indices), dtype=np.int64))
    return SetOracle(kind="explicit-window", membership=lambda n: np.isin(n, pts), params={"size": int(pts.size)})


def union(*oracles: SetOracle, label: str = "composite") -> SetOracle:
    periods = [o.period for o in oracles]
    period = math.lcm(*periods) if periods and all(periods) else None

    def member(n):
        out = np.zeros(np.shape(n), dtype=bool)
        for o in oracles:
            out |= o.contains(n)
        return out

    return SetOracle(kind=label, membership=member, period=period)


def window_counts(E: SetOracle, centers, radius: int) -> np.ndarray:
    """``|E ∩ [c - radius, c + radius]|`` for each integer center ``c``."""
    centers = np.asarray(centers, dtype=np.int64)
    radius = int(radius)
    lo = int(centers.min()) - radius
    hi = int(centers.max()) + radius
    if hi - lo <= 50_000_000:
        member = E.contains(np.arange(lo, hi + 1))
        S = np.concatenate([[0], np.cumsum(member, dtype=np.int64)])
        return S[centers + radius - lo + 1] - S[centers - radius - lo]
    return np.array([E.contains(np.arange(c - radius, c + radius + 1)).sum() for c in centers])


def _centers(E, scan, seed):
    """Scan centers and whether they make the certificate exact."""
    if scan is not None:
        return np.asarray(scan, dtype=np.int64), False
    if E.period is not None:
        return np.arange(E.period, dtype=np.int64), True
    rng = np.random.default_rng(seed)
    return rng.integers(-DEFAULT_SCAN_RANGE, DEFAULT_SCAN_RANGE, DEFAULT_RANDOM_CENTERS), False


@dataclass(frozen=True)
class ThicknessCertificate:
    L: int
    min_count: int
    gamma_L: float
    exact: bool
    n_centers: int
    max_count: int | None = None

    @property
    def window(self) -> int:
        return 2 * self.L + 1


def thickness_profile(E: SetOracle, L_values, scan=None, seed: int = 0) -> list[ThicknessCertificate]:
    """Minimum fraction of ``E`` in the windows ``[x - L, x + L]`` over the scanned centers.

    Periodic sets scan one full period of centers, which is exhaustive. Other
    sets scan 10⁴ centers from a seeded generator (a statistical certificate).
    """
    centers, exact = _centers(E, scan, seed)
    out = []
    for L in L_values:
        L = int(L)
        if L < 0:
            raise InvalidInputError("L must be nonnegative")
        counts = window_counts(E, centers, L)
        cmin = int(counts.min())
        out.append(
            ThicknessCertificate(
                L=L, min_count=cmin, gamma_L=cmin / (2 * L + 1), exact=exact,
                n_centers=int(centers.size), max_count=int(counts.max()),
            )
        )
    return out


@dataclass(frozen=True)
class DensityEstimate:
    R_values: tuple[int, ...]
    lower_profile: tuple[float, ...]
    upper_profile: tuple[float, ...]
    exact: bool

    @property
    def d_minus(self) -> float:
        return self.lower_profile[-1]

    @property
    def d_plus(self) -> float:
        return self.upper_profile[-1]

    def rows(self):
        return list(zip(self.R_values, self.lower_profile, self.upper_profile))


def beurling_estimate(E: SetOracle, R_values, scan=None, seed: int = 0) -> DensityEstimate:
    """Profiles ``inf_x`` and ``sup_x`` of ``|E ∩ [x - R, x + R]| / 2R``.

    The largest radius supplies the reported ``d_minus`` and ``d_plus``.
    """
    R_values = [int(r) for r in R_values]
    if any(r <= 0 for r in R_values) or any(b <= a for a, b in zip(R_values, R_values[1:])):
        raise InvalidInputError("R_values must be positive and strictly increasing")
    centers, exact = _centers(E, scan, seed)
    lower, upper = [], []
    for R in R_values:
        counts = window_counts(E, centers, R)
        lower.append(int(counts.min()) / (2 * R))
        upper.append(int(counts.max()) / (2 * R))
    return DensityEstimate(tuple(R_values), tuple(lower), tuple(upper), exact)


@dataclass(frozen=True)
class WeylProbe:
    M_values: tuple[int, ...]
    deviations: tuple[float, ...]
    mean: float


def weyl_probe(
    alpha: float,
    arc=(0.0, 2 * np.pi),
    M_values=(1_000, 10_000, 100_000),
    n_samples: int = 200,
    seed: int = 0,
    s_range: int = DEFAULT_SCAN_RANGE,
) -> WeylProbe:
    """Worst deviation of Birkhoff averages of an arc indicator along ``n ↦ 2π{nα}``.

    For each ``M`` returns ``max_s |M⁻¹ Σ_{n=s}^{s+M-1} 1_arc(2π{nα}) - |arc|/2π|``
    over ``n_samples`` seeded starting points ``s``.
    """
    a, b = float(arc[0]), float(arc[1])
    length = b - a
    if not 0 <= length <= 2 * np.pi:
        raise InvalidInputError("arc must have length in [0, 2π]")
    mean = length / (2 * np.pi)
    rng = np.random.default_rng(seed)
    starts = rng.integers(-s_range, s_range, n_samples)
    M_values = [int(M) for M in M_values]
    lo, hi = int(starts.min()), int(starts.max()) + max(M_values)
    n = np.arange(lo, hi)
    if length >= 2 * np.pi:
        hit = np.ones(n.size, dtype=bool)
    else:
        theta = 2 * np.pi * frac_mul(n, alpha)
        hit = np.mod(theta - a, 2 * np.pi) < length
    S = np.concatenate([[0], np.cumsum(hit, dtype=np.int64)])
    devs = []
    for M in M_values:
        sums = S[starts - lo + M] - S[starts - lo]
        devs.append(float(np.abs(sums / M - mean).max()))
    return WeylProbe(tuple(M_values), tuple(devs), mean)
