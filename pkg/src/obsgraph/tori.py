"""Discrete tori ``(ℤ/Nℤ)^d``: characters, sine zero sets and product eigenfunctions.

Zero tests never rely on floating-point sines of large arguments: every
phase ``2π a/N`` is reduced modulo ``N`` in integers first, so the exact
zeros of ``sin(2π a/N)`` come out as ``sin(0)`` or ``sin(π)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInputError
from .graphs import GraphSpec, ObservationSet, laplacian, torus
from .observability import gramian, observability_constant, restriction_kernel, restriction_test
from .spectral import eigendecompose, group_eigenspaces

__all__ = [
    "TorusSpectrum",
    "ZeroCountReport",
    "TorusConstruction",
    "DonohoStarkReport",
    "smallest_odd_prime",
    "torus_points",
    "torus_spectrum",
    "zero_count",
    "zero_count_table",
    "sine_values",
    "product_eigenfunction",
    "product_frequency",
    "product_construction",
    "density_sequence",
    "donoho_stark_check",
]

SUPPORT_TOL = 1e-10
RESIDUAL_TOL = 1e-9
BRUTE_FORCE_LIMIT = 10**6
FINITE_OBS_LIMIT = 2000


def _check_torus(N: int, d: int):
    if N < 3:
        raise InvalidInputError("N must be at least 3")
    if d < 1:
        raise InvalidInputError("d must be at least 1")


def torus_points(N: int, d: int) -> np.ndarray:
    """All points of ``(ℤ/Nℤ)^d`` as rows, in row-major vertex order."""
    return np.stack(np.unravel_index(np.arange(N**d), (N,) * d), axis=1)


def sparse_laplacian(graph: GraphSpec) -> sp.csr_matrix:
    e = np.asarray(graph.edges, dtype=np.int64).reshape(-1, 2)
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    A = sp.csr_matrix((np.ones(rows.size), (rows, cols)), shape=(graph.n, graph.n))
    return A - sp.diags(np.asarray(A.sum(axis=1)).ravel())


def eigenvalue(N: int, k) -> float:
    """``μ(k) = 2Σ_j cos(2πk_j/N) - 2d``."""
    k = np.atleast_1d(np.asarray(k))
    return float(2 * np.cos(2 * np.pi * (k % N) / N).sum() - 2 * k.size)


def character(N: int, k, X=None) -> np.ndarray:
    """``φ_k(x) = exp(2πi⟨k,x⟩/N)`` on every torus point."""
    k = np.atleast_1d(np.asarray(k, dtype=np.int64))
    if X is None:
        X = torus_points(N, k.size)
    return np.exp(2j * np.pi * ((X @ k) % N) / N)


def sine_values(N: int, k, X=None) -> np.ndarray:
    """``sin(2π⟨k,x⟩/N)`` evaluated as ``sin(π·(2⟨k,x⟩ mod 2N)/N)``."""
    k = np.atleast_1d(np.asarray(k, dtype=np.int64))
    if X is None:
        X = torus_points(N, k.size)
    return np.sin(np.pi * ((2 * (X @ k)) % (2 * N)) / N)


@dataclass(frozen=True, eq=False)
class TorusSpectrum:
    N: int
    d: int
    frequencies: np.ndarray
    eigenvalues: np.ndarray
    max_residual: float
    sampled: tuple[int, ...]

    def character(self, k) -> np.ndarray:
        return character(self.N, k)


def torus_spectrum(N: int, d: int, n_check: int = 20, seed: int = 0) -> TorusSpectrum:
    """All ``N^d`` character eigenvalues, with a residual check on ``n_check`` random characters."""
    _check_torus(N, d)
    K = torus_points(N, d)
    mu = 2 * np.cos(2 * np.pi * K / N).sum(axis=1) - 2 * d
    L = sparse_laplacian(torus(N, d))
    rng = np.random.default_rng(seed)
    picks = rng.choice(K.shape[0], size=min(n_check, K.shape[0]), replace=False)
    resid = 0.0
    for i in picks:
        phi = character(N, K[i], K)
        resid = max(resid, float(np.abs(L @ phi - mu[i] * phi).max()))
    if resid > RESIDUAL_TOL:
        raise AssertionError(f"character residual {resid:.3e} exceeds {RESIDUAL_TOL}")
    return TorusSpectrum(N, d, K, mu, resid, tuple(int(i) for i in sorted(picks)))


# --------------------------------------------------------------------------
# zero sets of ψ_k^sin


@dataclass(frozen=True)
class ZeroCountReport:
    N: int
    d: int
    k: tuple[int, ...]
    d0: int
    image_size: int
    sine_zeros_in_image: int
    closed_form: int
    brute_force: int | None
    notice: str | None = None

    @property
    def match(self) -> bool | None:
        return None if self.brute_force is None else self.closed_form == self.brute_force


def _closed_form(N, d, d0):
    # ψ^sin vanishes where 2⟨k,x⟩ ≡ 0 (mod N); image of x ↦ ⟨k,x⟩ is d0·ℤ_N
    zeros = [0] + ([N // 2] if N % 2 == 0 else [])
    hits = sum(1 for a in zeros if a % d0 == 0)
    return hits, hits * d0 * N ** (d - 1)


def zero_count(N: int, d: int, k) -> ZeroCountReport:
    """Number of zeros of ``x ↦ sin(2π⟨k,x⟩/N)`` by closed form and (when feasible) enumeration."""
    _check_torus(N, d)
    k = tuple(int(v) % N for v in np.atleast_1d(k))
    if len(k) != d:
        raise InvalidInputError(f"frequency has {len(k)} entries, expected {d}")
    d0 = math.gcd(N, *k)
    hits, closed = _closed_form(N, d, d0)
    brute = notice = None
    if N**d <= BRUTE_FORCE_LIMIT:
        s = sine_values(N, k)
        brute = int(np.count_nonzero(np.abs(s) <= SUPPORT_TOL))
    else:
        notice = f"brute force skipped: N^d = {N**d} > {BRUTE_FORCE_LIMIT}"
    return ZeroCountReport(N, d, k, d0, N // d0, hits, closed, brute, notice)


def zero_count_table(N: int, d: int, block: int = 4096) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed-form and enumerated zero counts for every frequency ``k`` at once.

    Returns ``(K, closed, brute)`` with one row of ``K`` per frequency.
    """
    _check_torus(N, d)
    if N**d > 4096:
        raise InvalidInputError("zero_count_table enumerates at most 4096 points")
    X = torus_points(N, d)
    K = X.copy()
    d0 = np.gcd.reduce(np.concatenate([K, np.full((K.shape[0], 1), N)], axis=1), axis=1)
    closed = np.array([_closed_form(N, d, int(g))[1] for g in d0])
    brute = np.empty(K.shape[0], dtype=np.int64)
    for s in range(0, K.shape[0], block):
        a = (2 * (K[s : s + block] @ X.T)) % (2 * N)
        brute[s : s + block] = np.count_nonzero(np.abs(np.sin(np.pi * a / N)) <= SUPPORT_TOL, axis=1)
    return K, closed, brute


# --------------------------------------------------------------------------
# product eigenfunctions and their zero sets


def smallest_odd_prime(N: int) -> int | None:
    m = N
    while m % 2 == 0:
        m //= 2
    f = 3
    while f * f <= m:
        if m % f == 0:
            return f
        f += 2
    return m if m > 1 else None


def product_frequency(N: int) -> int:
    """``N/4`` when ``4 | N``, otherwise ``N/p`` for the smallest odd prime ``p | N``."""
    if N == 2 or N < 2:
        raise InvalidInputError("N = 2 admits no product construction")
    if N % 4 == 0:
        return N // 4
    p = smallest_odd_prime(N)
    if p is None:
        raise InvalidInputError(f"N = {N} has no odd prime factor and is not divisible by 4")
    return N // p


def closed_form_size(N: int, d: int) -> int:
    if N % 4 == 0:
        return N**d - (N // 2) ** d
    p = smallest_odd_prime(N)
    return N**d - (N - N // p) ** d


@dataclass(eq=False)
class TorusConstruction:
    N: int
    d: int
    r: tuple[int, ...]
    mu: float
    E: ObservationSet = field(repr=False)
    E_size: int
    expected_size: int
    psi: np.ndarray | None = field(default=None, repr=False)
    support_size: int | None = None
    psi_vanishes_on_E: bool | None = None
    residual: float | None = None
    method: str | None = None
    verified_unobservable: bool | None = None
    details: dict = field(default_factory=dict)

    @property
    def ratio(self) -> float:
        return self.E_size / self.N**self.d

    @property
    def exact_ratio(self) -> Fraction:
        return Fraction(self.E_size, self.N**self.d)

    @property
    def spectral_support(self) -> list[tuple[int, ...]]:
        """``V_r`` frequencies ``s∘r`` for ``s ∈ {±1}^d`` (mod N)."""
        return sorted({tuple((s * ri) % self.N for s, ri in zip(sg, self.r)) for sg in product((1, -1), repeat=self.d)})

    def to_dict(self) -> dict:
        return {
            "E_size": int(self.E_size),
            "ratio": float(self.ratio),
            "mu": float(self.mu),
            "verified_unobservable": self.verified_unobservable,
            "method": self.method,
        }


def _zero_mask(N, d, r):
    """``E_prod = ⋃_j {x : sin(2π r x_j/N) = 0}`` by integer enumeration.

    ``sin(2π r x/N) = 0`` iff ``N | 2rx`` iff ``x`` is a multiple of ``N/gcd(2r, N)``.
    """
    q = N // math.gcd(2 * r, N)
    nonzero1 = (np.arange(N, dtype=np.int32) % np.int32(q)) != 0
    nonzero = nonzero1
    for _ in range(d - 1):
        nonzero = np.multiply.outer(nonzero, nonzero1)
    return ~nonzero.ravel()


def product_eigenfunction(N, d, r) -> np.ndarray:
    """``Ψ_r(x) = Π_j sin(2π r x_j/N)`` in row-major order."""
    s = np.sin(np.pi * ((2 * r * np.arange(N)) % (2 * N)) / N)
    psi = s
    for _ in range(d - 1):
        psi = np.multiply.outer(psi, s)
    return psi.ravel()


def product_construction(N: int, d: int, certify: str | None = "auto") -> TorusConstruction:
    """Zero set of ``Ψ_r(x) = Π_j sin(2π r x_j/N)`` as a large unobservable set.

    ``certify`` selects how unobservability is confirmed:
    ``"witness"`` checks that ``Ψ_r`` is an eigenvector vanishing on ``E``;
    ``"finite-obs"`` also runs the restriction test and the Gramian on the
    torus graph (and checks ``Ψ_r`` lies in the detected kernel);
    ``"auto"`` uses finite-obs when ``N^d ≤ 2000``; ``None`` only enumerates
    ``E`` (``Ψ_r`` is not evaluated).
    """
    _check_torus(N, d)
    if certify not in ("auto", "witness", "finite-obs", None):
        raise InvalidInputError(f"unknown certification mode {certify!r}")
    r = product_frequency(N)
    mask = _zero_mask(N, d, r)
    c = TorusConstruction(
        N=N, d=d, r=(r,) * d, mu=eigenvalue(N, [r] * d), E=ObservationSet(mask),
        E_size=int(np.count_nonzero(mask)), expected_size=closed_form_size(N, d),
    )
    if certify is None:
        return c
    psi = product_eigenfunction(N, d, r)
    scale = float(np.abs(psi).max())
    vanishes = bool(np.all(np.abs(psi[mask]) <= SUPPORT_TOL * scale))
    c.psi = psi
    c.support_size = int(np.count_nonzero(np.abs(psi) > SUPPORT_TOL * scale))
    c.psi_vanishes_on_E = vanishes
    if certify == "auto":
        certify = "finite-obs" if N**d <= FINITE_OBS_LIMIT else "witness"
    graph = torus(N, d)
    c.residual = float(np.linalg.norm(sparse_laplacian(graph) @ psi - c.mu * psi) / np.linalg.norm(psi))
    witness_ok = vanishes and c.residual <= RESIDUAL_TOL
    if certify == "witness":
        c.method = "witness"
        c.verified_unobservable = witness_ok
        return c
    dec = eigendecompose(laplacian(graph))
    groups = group_eigenspaces(dec)
    E = c.E
    rt = restriction_test(groups, dec, E)
    block = int(np.argmin(np.abs(groups.representatives - c.mu)))
    K = restriction_kernel(groups, dec, E, block)
    u = psi / np.linalg.norm(psi)
    in_kernel = K.shape[1] > 0 and float(np.linalg.norm(u - K @ (K.conj().T @ u))) <= 1e-8
    gr = observability_constant(gramian(dec, groups, E, 1.0), refine=False)
    c.method = "gramian"
    c.verified_unobservable = witness_ok and not rt.observable and in_kernel and not gr.observable
    c.details = {
        "restriction_observable": rt.observable,
        "psi_in_kernel": in_kernel,
        "kernel_dim": int(K.shape[1]),
        "gramian_mu_min": gr.mu_min,
        "gramian_observable": gr.observable,
    }
    return c


def density_sequence(d: int, N_list) -> list[TorusConstruction]:
    """Product constructions for each ``N`` (all divisible by 4); ratios are ``1 - 2^-d``."""
    out = []
    for N in N_list:
        if N % 4:
            raise InvalidInputError(f"N = {N} is not divisible by 4")
        out.append(product_construction(int(N), d, certify="auto"))
    return out


# --------------------------------------------------------------------------
# uncertainty bound on V_r


@dataclass
class DonohoStarkReport:
    N: int
    d: int
    r: tuple[int, ...]
    trials: int
    bound: float
    supports: np.ndarray = field(repr=False)
    support_products: np.ndarray = field(repr=False)
    psi_r_support: int | None

    @property
    def min_support(self) -> int:
        return int(self.supports.min())

    @property
    def passed(self) -> bool:
        ok = self.min_support >= self.bound and bool(np.all(self.support_products >= self.N**self.d))
        if self.psi_r_support is not None:
            ok = ok and self.psi_r_support == (self.N // 2) ** self.d
        return ok


def _support(v) -> int:
    return int(np.count_nonzero(np.abs(v) > SUPPORT_TOL * np.abs(v).max()))


def donoho_stark_check(N: int, d: int, r, trials: int = 100, seed: int = 0) -> DonohoStarkReport:
    """Support sizes of random ``ψ ∈ V_r = span{φ_{s∘r} : s ∈ {±1}^d}`` against ``N^d/2^d``.

    Even trials use Gaussian coefficients; odd trials draw entries from
    ``{0, ±1, ±i}`` to provoke cancellations. Each ``ψ`` also satisfies
    ``|supp ψ|·|supp ψ̂| ≥ N^d`` via the FFT.
    """
    _check_torus(N, d)
    r = tuple(int(v) % N for v in np.atleast_1d(r))
    if len(r) != d:
        raise InvalidInputError(f"r has {len(r)} entries, expected {d}")
    if any(v == 0 or 2 * v == N for v in r):
        raise InvalidInputError("r_j must avoid 0 and N/2")
    X = torus_points(N, d)
    signs = list(product((1, -1), repeat=d))
    Phi = np.stack([character(N, [s * v for s, v in zip(sg, r)], X) for sg in signs], axis=1)
    rng = np.random.default_rng(seed)
    units = np.array([0, 1, -1, 1j, -1j])
    supports = np.empty(trials, dtype=np.int64)
    products = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        while True:
            if t % 2 == 0:
                c = rng.standard_normal(len(signs)) + 1j * rng.standard_normal(len(signs))
            else:
                c = units[rng.integers(0, units.size, len(signs))]
            if np.any(c != 0):
                break
        psi = Phi @ c
        supports[t] = _support(psi)
        products[t] = supports[t] * _support(np.fft.fftn(psi.reshape((N,) * d)))
    psi_r_support = None
    if N % 4 == 0 and all(v == N // 4 for v in r):
        psi_r_support = _support(product_eigenfunction(N, d, N // 4))
    return DonohoStarkReport(N, d, r, trials, N**d / 2**d, supports, products, psi_r_support)
