"""Periodic subsets ``E = ⋃_{s∈R} (pℤ + s)`` of ℤ through the p×p fiber reduction.

Blocking ℤ into cells of length ``p`` and Fourier transforming in the cell
index turns the flow into a family of p×p systems ``∂_t v = iΦ(x)v`` indexed
by ``x ∈ [-π, π)``. ``E`` is observable iff the fiber Gramians ``W_T(x)`` are
uniformly positive, which happens iff ``gcd(p, R - R) = 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from . import density
from .errors import ContractViolationError, InvalidInputError
from .graphs import ObservationSet, cycle, laplacian
from .observability import (
    DEFAULT_TAU_RANK,
    gramian,
    observability_constant,
    oscillatory_integral,
    tau_obs,
)
from .spectral import eigendecompose, group_eigenspaces

__all__ = [
    "BohrSet",
    "BohrVerdict",
    "FiberSystem",
    "FiberGramian",
    "DegenerateFiberReport",
    "CycleOracleReport",
    "CounterexampleResult",
    "MixedDensitySet",
    "arithmetic_criterion",
    "fiber_matrix",
    "fiber_grid",
    "degenerate_kernel_test",
    "fiber_gramian",
    "fiber_lambda_min",
    "m_T_sweep",
    "fiber_cycle_oracle",
    "counterexample_ratio",
    "mixed_density_construct",
]

DEFAULT_FIBER_GRID = 512
MIN_FIBER_GRID = 64


@dataclass(frozen=True)
class BohrSet:
    p: int
    R: tuple[int, ...]

    def __post_init__(self):
        if int(self.p) < 1:
            raise InvalidInputError("p must be a positive integer")
        if len(self.R) == 0:
            raise InvalidInputError("residue set R must be nonempty")
        if any(not 0 <= r < self.p for r in self.R):
            raise InvalidInputError(f"residues must lie in 0..{self.p - 1}")
        object.__setattr__(self, "R", tuple(sorted(set(int(r) for r in self.R))))

    @classmethod
    def of(cls, p: int, R) -> "BohrSet":
        return cls(int(p), tuple(int(r) for r in R))

    @property
    def differences(self) -> tuple[int, ...]:
        """``D(R) = {r1 - r0 mod p}``."""
        return tuple(sorted({(b - a) % self.p for a in self.R for b in self.R}))

    @property
    def g(self) -> int:
        return math.gcd(self.p, *self.differences)

    @property
    def mask(self) -> np.ndarray:
        m = np.zeros(self.p, dtype=bool)
        m[list(self.R)] = True
        return m

    def oracle(self) -> density.SetOracle:
        return density.periodic(self.p, self.R)


@dataclass
class BohrVerdict:
    observable: bool
    g: int
    m_T: float | None = None
    T: float | None = None
    numeric_observable: bool | None = None
    failing_fiber: float | None = None
    failing_vector: np.ndarray | None = None
    threshold: float | None = None
    grid_size: int | None = None

    @property
    def C_obs(self) -> float | None:
        if self.m_T is None or not self.numeric_observable:
            return None
        return 1.0 / self.m_T

    @property
    def agree(self) -> bool | None:
        return None if self.numeric_observable is None else self.numeric_observable == self.observable

    def to_dict(self) -> dict:
        return {
            "observable": bool(self.observable),
            "g": int(self.g),
            "m_T": self.m_T,
            "C_obs": self.C_obs,
            "failing_fiber": self.failing_fiber,
        }


def arithmetic_criterion(p: int, R) -> BohrVerdict:
    """Observable iff the differences of ``R`` generate ``ℤ/pℤ``."""
    b = BohrSet.of(p, R)
    return BohrVerdict(observable=b.g == 1, g=b.g)


# --------------------------------------------------------------------------
# fibers


def _phases(p: int, x):
    """``η_s(x) = (2πs - x)/p`` for each fiber in ``x``, shape ``x.shape + (p,)``."""
    x = np.asarray(x, dtype=float)
    return (2 * np.pi * np.arange(p) - x[..., None]) / p


@dataclass(frozen=True, eq=False)
class FiberSystem:
    """``Φ(x)`` with its closed-form spectrum ``μ_s = 2 - 2cos η_s`` and eigenvectors ``U_s = (e^{irη_s})_r``."""

    p: int
    x: float
    matrix: np.ndarray
    eta: np.ndarray
    mu: np.ndarray
    U: np.ndarray

    def closed_form_residual(self) -> float:
        return float(np.abs(self.matrix @ self.U - self.U * self.mu).max())

    def spectrum_mismatch(self) -> float:
        """Distance between the closed-form and LAPACK spectra."""
        return float(np.abs(np.sort(self.mu) - np.linalg.eigvalsh(self.matrix)).max())


def fiber_matrix(p: int, x: float) -> FiberSystem:
    """``Φ(x) = 2·Id - S(x)`` where ``S`` is the cyclic shift with corner phases ``e^{±ix}``."""
    if p < 1:
        raise InvalidInputError("p must be positive")
    x = float(x)
    if p == 1:
        Phi = np.array([[2.0 - 2.0 * math.cos(x) + 0j]])
    else:
        Phi = 2.0 * np.eye(p, dtype=complex)
        idx = np.arange(p - 1)
        Phi[idx, idx + 1] -= 1.0
        Phi[idx + 1, idx] -= 1.0
        Phi[0, p - 1] -= np.exp(1j * x)
        Phi[p - 1, 0] -= np.exp(-1j * x)
    eta = _phases(p, x)
    mu = 2.0 - 2.0 * np.cos(eta)
    U = np.exp(1j * np.outer(np.arange(p), eta))
    return FiberSystem(p=p, x=x, matrix=Phi, eta=eta, mu=mu, U=U)


def fiber_grid(n: int = DEFAULT_FIBER_GRID) -> np.ndarray:
    """Uniform grid on ``[-π, π)`` containing ``-π`` and ``0`` exactly."""
    if n < MIN_FIBER_GRID:
        raise InvalidInputError(f"grid size must be at least {MIN_FIBER_GRID}")
    x = -np.pi + 2 * np.pi * np.arange(n) / n
    x[0] = -np.pi
    k = int(np.argmin(np.abs(x)))
    if abs(x[k]) < np.pi / n:
        x[k] = 0.0
    else:
        x = np.sort(np.append(x, 0.0))
    return x


# --------------------------------------------------------------------------
# degenerate fibers


@dataclass(frozen=True)
class FiberEigenspace:
    kappa: float
    m: int
    dim: int
    arithmetic_injective: bool
    numeric_injective: bool
    margin: float


@dataclass(frozen=True)
class DegenerateFiberReport:
    x: float
    eigenspaces: tuple[FiberEigenspace, ...]

    @property
    def injective(self) -> bool:
        return all(e.arithmetic_injective for e in self.eigenspaces)

    @property
    def agree(self) -> bool:
        return all(e.arithmetic_injective == e.numeric_injective for e in self.eigenspaces)

    def kernel_kappas(self) -> list[float]:
        return [e.kappa for e in self.eigenspaces if not e.arithmetic_injective]


def degenerate_kernel_test(p: int, R, x: float, tau_rank: float = DEFAULT_TAU_RANK) -> DegenerateFiberReport:
    """Check injectivity of ``1_R`` on each eigenspace of ``Φ(x)`` for ``x ∈ {0, -π}``.

    Eigenspaces have the form ``span{U_κ, U_-κ}`` with ``κ = mπ/p`` (``m``
    even at ``x = 0``, odd at ``x = -π``). The arithmetic answer is
    "some ``d ∈ R - R`` has ``p ∤ md``"; the numerical answer is a rank test
    on the LAPACK eigenbasis restricted to ``R``. Both are reported.
    """
    if x not in (0.0, -math.pi):
        raise InvalidInputError("degenerate fibers are x = 0 and x = -π")
    b = BohrSet.of(p, R)
    parity = 0 if x == 0.0 else 1
    fs = fiber_matrix(p, x)
    dec = eigendecompose(fs.matrix)
    groups = group_eigenspaces(dec)
    out = []
    for block, mu in zip(groups.blocks, groups.representatives):
        kappa = float(np.arccos(np.clip(1.0 - mu / 2.0, -1.0, 1.0)))
        m = int(round(kappa * p / np.pi))
        if m % 2 != parity or abs(m * np.pi / p - kappa) > 1e-6:
            raise ContractViolationError(f"fiber eigenvalue {mu} does not match κ = mπ/p with m of parity {parity}")
        if block.size > 2:
            raise ContractViolationError(f"fiber eigenspace of dimension {block.size}")
        if block.size == 1:
            arith = True
        else:
            arith = any((m * d) % p for d in b.differences)
        BR = dec.eigenvectors[:, block][b.mask]
        margin = float(np.linalg.eigvalsh(BR.conj().T @ BR)[0])
        out.append(
            FiberEigenspace(
                kappa=kappa, m=m, dim=int(block.size),
                arithmetic_injective=arith, numeric_injective=margin > tau_rank, margin=margin,
            )
        )
    return DegenerateFiberReport(x=x, eigenspaces=tuple(out))


# --------------------------------------------------------------------------
# fiber Gramians


@dataclass(frozen=True, eq=False)
class FiberGramian:
    x: float
    T: float
    matrix: np.ndarray
    lambda_min: float


def _inner_gramians(b: BohrSet, xs, T: float):
    """``P̂ ∘ I(μ_k - μ_j)`` in the normalized ``U_s`` basis for every fiber in ``xs``.

    ``W_T(x) = Û (P̂ ∘ I) Ûᴴ`` with ``Û = U/√p`` unitary, so both share eigenvalues.
    """
    p = b.p
    eta = _phases(p, xs)
    mu = 2.0 - 2.0 * np.cos(eta)
    r = np.array(b.R)
    # Û[:, r, s] = e^{i r η_s}/√p restricted to rows in R
    UR = np.exp(1j * r[None, :, None] * eta[:, None, :]) / np.sqrt(p)
    Phat = UR.conj().transpose(0, 2, 1) @ UR
    delta = mu[:, None, :] - mu[:, :, None]
    I = oscillatory_integral(delta, T)
    I[np.abs(delta) <= 1e-14] = T
    K = Phat * I
    return 0.5 * (K + K.conj().transpose(0, 2, 1)), eta


def fiber_gramian(p: int, R, x: float, T: float) -> FiberGramian:
    """``W_T(x) = ∫_0^T e^{-itΦ(x)} 1_R e^{itΦ(x)} dt`` via the closed-form eigenbasis."""
    if not T > 0:
        raise InvalidInputError("T must be positive")
    b = BohrSet.of(p, R)
    K, eta = _inner_gramians(b, np.array([float(x)]), T)
    U = np.exp(1j * np.outer(np.arange(p), eta[0])) / np.sqrt(p)
    W = U @ K[0] @ U.conj().T
    W = 0.5 * (W + W.conj().T)
    return FiberGramian(x=float(x), T=float(T), matrix=W, lambda_min=float(np.linalg.eigvalsh(K[0])[0]))


def fiber_lambda_min(p: int, R, xs, T: float) -> np.ndarray:
    """``λ_min(W_T(x))`` for every ``x`` in ``xs`` (batched)."""
    if not T > 0:
        raise InvalidInputError("T must be positive")
    K, _ = _inner_gramians(BohrSet.of(p, R), np.asarray(xs, dtype=float), T)
    return np.linalg.eigvalsh(K)[:, 0]


def m_T_sweep(p: int, R, T: float, grid_size: int = DEFAULT_FIBER_GRID, threshold: float | None = None) -> BohrVerdict:
    """``m_T = min_x λ_min(W_T(x))`` over a grid containing both degenerate fibers.

    The verdict carries the arithmetic answer in ``observable`` and the grid
    answer (``m_T > 1e-8·T``) in ``numeric_observable``. Ties for the minimum
    go to the lowest grid index.
    """
    b = BohrSet.of(p, R)
    xs = fiber_grid(grid_size)
    thr = tau_obs(T) if threshold is None else threshold
    K, eta = _inner_gramians(b, xs, T)
    w, Q = np.linalg.eigh(K)
    lam = w[:, 0]
    k = int(np.argmin(lam))
    m_T = float(lam[k])
    numeric = m_T > thr
    failing = vec = None
    if not numeric:
        failing = float(xs[k])
        U = np.exp(1j * np.outer(np.arange(p), eta[k])) / np.sqrt(p)
        vec = U @ Q[k][:, 0]
    return BohrVerdict(
        observable=b.g == 1, g=b.g, m_T=m_T, T=float(T), numeric_observable=numeric,
        failing_fiber=failing, failing_vector=vec, threshold=thr, grid_size=int(xs.size),
    )


# --------------------------------------------------------------------------
# cross-check against a finite cycle


@dataclass
class CycleOracleReport:
    p: int
    R: tuple[int, ...]
    M: int
    T: float
    cycle_observable: bool
    cycle_mu_min: float
    fiber_observable: bool
    fiber_mu_min: float
    fibers: np.ndarray = field(repr=False)

    @property
    def verdicts_agree(self) -> bool:
        return self.cycle_observable == self.fiber_observable

    @property
    def relative_gap(self) -> float:
        return abs(self.cycle_mu_min - self.fiber_mu_min) / max(abs(self.fiber_mu_min), 1e-300)

    @property
    def agree(self) -> bool:
        if not self.verdicts_agree:
            return False
        return not self.cycle_observable or self.relative_gap <= 1e-6


def fiber_cycle_oracle(p: int, R, M: int, T: float = 1.0) -> CycleOracleReport:
    """Compare the Gramian of ``cycle(pM)`` observed on ``R mod p`` with the fiber minimum.

    ``pM``-periodic sequences decompose over the fibers ``x_j = 2πj/M``
    (wrapped into ``[-π, π)``), and the cycle Gramian is unitarily the direct
    sum of the ``W_T(x_j)``.
    """
    if M < 4:
        raise InvalidInputError("M must be at least 4")
    b = BohrSet.of(p, R)
    n = p * M
    A = laplacian(cycle(n))
    E = ObservationSet(np.isin(np.arange(n) % p, b.R))
    dec = eigendecompose(A)
    G = gramian(dec, group_eigenspaces(dec), E, T)
    rep = observability_constant(G, refine=False)
    xs = np.mod(2 * np.pi * np.arange(M) / M + np.pi, 2 * np.pi) - np.pi
    lam = fiber_lambda_min(p, b.R, xs, T)
    fmin = float(lam.min())
    return CycleOracleReport(
        p=p, R=b.R, M=M, T=float(T),
        cycle_observable=rep.observable, cycle_mu_min=float(rep.mu_min),
        fiber_observable=fmin > tau_obs(T), fiber_mu_min=fmin, fibers=xs,
    )


# --------------------------------------------------------------------------
# quantitative counterexample for residues of a single class


@dataclass(frozen=True)
class CounterexampleResult:
    p: int
    delta: float
    t: float
    ratio: float
    bound: float
    nodes: int
    quad_error: float

    @property
    def holds(self) -> bool:
        return self.ratio <= self.bound * (1 + 1e-6)

    def to_dict(self):
        return {
            "p": self.p, "delta": self.delta, "t": self.t, "ratio": self.ratio,
            "bound": self.bound, "nodes": self.nodes, "quad_error": self.quad_error,
            "holds": self.holds,
        }


def _bump(y, delta):
    """``exp(-1/(1 - (y/δ)²))`` on ``|y| < δ``, periodized over ``[-π, π)``."""
    y = np.mod(np.asarray(y) + np.pi, 2 * np.pi) - np.pi
    s = (y / delta) ** 2
    out = np.zeros_like(y)
    inside = s < 1
    out[inside] = np.exp(-1.0 / (1.0 - s[inside]))
    return out


def _ratio(p, delta, t, n):
    x = np.linspace(-np.pi, np.pi, n + 1)
    total = np.zeros_like(x)
    for r in range(p):
        y = x - 2 * np.pi * r / p
        amp = (1 - np.exp(-4j * t * np.cos(y))) * _bump(y - np.pi / 2, delta)
        total += np.abs(amp) ** 2
    num = simpson(total, x=x) / p**2
    norm2 = simpson(_bump(x, delta) ** 2, x=x)
    return num / (2 * norm2)


def counterexample_ratio(
    p: int,
    delta: float,
    t: float,
    quad_nodes: int = 4096,
    enforce_support: bool = True,
) -> CounterexampleResult:
    """Fraction of ``ℓ²`` mass a bump-concentrated state puts on ``pℤ + s`` by time ``t``.

    The ratio is evaluated by composite Simpson quadrature and compared with
    ``8t²δ²/p``. The node count is raised (in powers of two) until the bump
    support spans at least 256 subintervals; one further doubling estimates
    the quadrature error. ``enforce_support`` checks ``δ ≤ π/(100p)``; the
    bound itself does not depend on that condition.
    """
    if p < 2 or p % 2:
        raise InvalidInputError("p must be even")
    limit = np.pi / (100 * p) if enforce_support else np.pi
    if not 0 < delta <= limit * (1 + 1e-12):
        raise InvalidInputError(f"delta must lie in (0, {limit:.6g}]")
    if quad_nodes < 4096 or quad_nodes & (quad_nodes - 1):
        raise InvalidInputError("quad_nodes must be a power of two >= 4096")
    n = quad_nodes
    while 2 * delta / (2 * np.pi / n) < 256:
        n *= 2
    coarse = _ratio(p, delta, t, n)
    fine = _ratio(p, delta, t, 2 * n)
    return CounterexampleResult(
        p=p, delta=float(delta), t=float(t), ratio=float(fine),
        bound=8 * t**2 * delta**2 / p, nodes=2 * n, quad_error=float(abs(fine - coarse)),
    )


# --------------------------------------------------------------------------
# observable sets of any prescribed density


@dataclass(frozen=True)
class MixedDensitySet:
    q: float
    alpha: float
    base: BohrSet
    theta: float
    oracle: density.SetOracle

    @property
    def p(self) -> int:
        return self.base.p

    @property
    def m(self) -> int:
        return len(self.base.R)

    def contains(self, n) -> np.ndarray:
        return self.oracle.contains(n)

    def empirical_density(self, radius: int = 100_000, seed: int = 0) -> tuple[float, float]:
        est = density.beurling_estimate(self.oracle, [radius], seed=seed)
        return est.d_minus, est.d_plus


def mixed_density_construct(q: float, alpha: float = math.sqrt(2)) -> MixedDensitySet:
    """Observable subset of ℤ with density ``q``.

    Take ``p = ⌈2/q⌉``, ``m = ⌊qp⌋`` and the base set ``R = {0..m-1}`` (which
    has ``g = 1``). Each remaining residue class ``c`` keeps ``n`` when
    ``{((n - c)/p)·α} < θ`` with ``θ = (q - m/p)/(1 - m/p)``, adding density
    ``θ(1 - m/p)`` without disturbing the observable base.
    """
    if not 0 < q < 1:
        raise InvalidInputError("q must lie in (0, 1)")
    p = math.ceil(2 / q - 1e-12)
    m = math.floor(q * p + 1e-9)
    base = BohrSet.of(p, range(m))
    theta = max(0.0, (q - m / p) / (1 - m / p))
    if theta < 1e-12:
        theta = 0.0

    def member(n):
        c = n % p
        keep = c < m
        if theta > 0:
            k = (n - c) // p
            keep |= density.frac_mul(k, alpha) < theta
        return keep

    oracle = density.SetOracle(
        kind="composite", membership=member, period=p if theta == 0 else None,
        params={"q": q, "p": p, "m": m, "theta": theta, "alpha": alpha},
    )
    return MixedDensitySet(q=float(q), alpha=float(alpha), base=base, theta=theta, oracle=oracle)
