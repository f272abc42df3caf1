"""Observability certificates for ``∂_t u = iΔu`` on finite graphs.

Three independent routes decide whether a vertex set ``E`` is observable:

* the Gramian ``G_jk = <ψ_k|_E, ψ_j|_E> ∫_0^T e^{it(λ_k-λ_j)} dt`` is positive
  definite (its smallest eigenvalue gives ``C_obs = 1/μ_min``);
* no eigenvector of the Laplacian vanishes identically on ``E`` (checked per
  eigenspace, so the answer does not depend on the eigenbasis);
* the Hautus/resolvent quantity ``min_λ λ_min(M(A-λ)² + m·1_E)`` is positive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .errors import InvalidInputError
from .graphs import ObservationSet
from .spectral import EigenspaceGrouping, SpectralDecomposition

__all__ = [
    "DEFAULT_TAU_RANK",
    "REFINE_MAX_N",
    "Gramian",
    "ObservabilityReport",
    "ExteriorAverage",
    "HautusCertificate",
    "oscillatory_integral",
    "restriction_test",
    "restriction_kernel",
    "gramian",
    "observability_constant",
    "extended_precision_mu_min",
    "refinement_digits",
    "exterior_average_norm",
    "complementarity_check",
    "hautus_sweep",
]

DEFAULT_TAU_RANK = 1e-10
REFINE_MAX_N = 48
REFINE_DPS = 50
REFINE_MARGIN = 10


def tau_obs(T: float) -> float:
    return 1e-8 * T


def oscillatory_integral(delta, T: float) -> np.ndarray:
    """``∫_0^T e^{itδ} dt`` evaluated without cancellation near ``δ = 0``."""
    delta = np.asarray(delta, dtype=float)
    return T * np.exp(0.5j * T * delta) * np.sinc(T * delta / (2 * np.pi))


def _canonical(u: np.ndarray) -> np.ndarray:
    """Unit vector with its largest-modulus entry rotated onto the positive reals."""
    u = u / np.linalg.norm(u)
    k = int(np.argmax(np.abs(u) - 1e-12 * np.arange(u.size)))
    u = u * (abs(u[k]) / u[k])
    if np.iscomplexobj(u) and np.abs(u.imag).max() < 1e-12:
        u = u.real.copy()
    return u


def _witness_json(w):
    if w is None:
        return None
    w = np.asarray(w, dtype=complex)
    return [[float(z.real), float(z.imag)] for z in w]


@dataclass
class ObservabilityReport:
    observable: bool
    method: str
    T: float | None = None
    mu_min: float | None = None
    C_obs: float | None = None
    witness: np.ndarray | None = None
    witness_eigenvalue: float | None = None
    refined: bool = False
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "observable": bool(self.observable),
            "mu_min": None if self.mu_min is None else float(self.mu_min),
            "C_obs": None if self.C_obs is None else float(self.C_obs),
            "T": None if self.T is None else float(self.T),
            "witness": _witness_json(self.witness),
            "method": self.method,
        }


# --------------------------------------------------------------------------
# eigenvector restriction test


def _block_restriction(dec, block, mask):
    B = dec.eigenvectors[:, block]
    BE = B[mask]
    w, Y = np.linalg.eigh(BE.conj().T @ BE)
    return B, w, Y


def restriction_test(
    groups: EigenspaceGrouping,
    dec: SpectralDecomposition,
    E: ObservationSet,
    tau_rank: float = DEFAULT_TAU_RANK,
) -> ObservabilityReport:
    """Decide observability by checking every eigenspace restricted to ``E``.

    For each block with orthonormal basis ``B`` the Gram matrix
    ``(B|_E)^H (B|_E)`` must have all eigenvalues above ``tau_rank``. On
    failure the witness is ``B v`` for the bottom eigenvector ``v`` of the
    lowest-index failing block.
    """
    if tau_rank <= 0:
        raise InvalidInputError("tau_rank must be positive")
    margins = []
    failing = []
    witness = witness_lambda = None
    for m, block in enumerate(groups.blocks):
        B, w, Y = _block_restriction(dec, block, E.mask)
        margins.append(float(w[0]))
        if w[0] <= tau_rank:
            failing.append(m)
            if witness is None:
                witness = _canonical(B @ Y[:, 0])
                witness_lambda = float(groups.representatives[m])
    return ObservabilityReport(
        observable=not failing,
        method="restriction",
        witness=witness,
        witness_eigenvalue=witness_lambda,
        details={
            "min_margin": min(margins) if margins else None,
            "block_margins": margins,
            "failing_blocks": failing,
            "tau_rank": tau_rank,
        },
    )


def restriction_kernel(
    groups: EigenspaceGrouping,
    dec: SpectralDecomposition,
    E: ObservationSet,
    block: int,
    tau_rank: float = DEFAULT_TAU_RANK,
) -> np.ndarray:
    """Orthonormal basis (columns) of the eigenvectors in ``block`` vanishing on ``E``."""
    B, w, Y = _block_restriction(dec, groups.blocks[block], E.mask)
    return B @ Y[:, w <= tau_rank]


# --------------------------------------------------------------------------
# Gramian


@dataclass(frozen=True, eq=False)
class Gramian:
    T: float
    matrix: np.ndarray
    E: ObservationSet
    dec: SpectralDecomposition
    groups: EigenspaceGrouping

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def gramian(
    dec: SpectralDecomposition,
    groups: EigenspaceGrouping,
    E: ObservationSet,
    T: float,
) -> Gramian:
    """Gramian of the flow observed on ``E`` over ``[0, T]``, in the eigenbasis.

    ``c^H G c = ∫_0^T ||u(t)|_E||² dt`` for ``u(0) = Σ c_k ψ_k``. Pairs of
    eigenvalues in the same block use the exact value ``T``.
    """
    if not T > 0:
        raise InvalidInputError(f"T must be positive, got {T}")
    if E.n != dec.n:
        raise InvalidInputError(f"set has n={E.n}, operator has n={dec.n}")
    lam = dec.eigenvalues
    BE = dec.eigenvectors[E.mask]
    P = BE.conj().T @ BE
    I = oscillatory_integral(lam[None, :] - lam[:, None], T)
    labels = groups.labels
    I[labels[:, None] == labels[None, :]] = T
    G = P * I
    G = 0.5 * (G + G.conj().T)
    return Gramian(T=float(T), matrix=G, E=E, dec=dec, groups=groups)


def extended_precision_mu_min(A, mask, T: float, dps: int = REFINE_DPS) -> float:
    """Smallest Gramian eigenvalue recomputed from ``A`` in ``dps``-digit arithmetic.

    Used when the double-precision value falls below the default threshold:
    a genuine zero mode stays at the ``10^-dps`` level while a small but real
    eigenvalue reproduces its double-precision value.
    """
    A = np.asarray(A)
    rows = np.flatnonzero(mask)
    n = A.shape[0]
    with mpmath.workdps(dps):
        if np.iscomplexobj(A) and np.abs(A.imag).max() > 0:
            Am = mpmath.matrix([[mpmath.mpc(z.real, z.imag) for z in row] for row in A])
            lam, Q = mpmath.eighe(Am)
        else:
            lam, Q = mpmath.eigsy(mpmath.matrix(np.real(A).tolist()))
        lam = [lam[k] for k in range(n)]
        radius = max(abs(v) for v in lam) if lam else 0
        tau = mpmath.mpf(10) ** (-(dps // 2)) * (1 + radius)
        Tm = mpmath.mpf(T)
        QE = mpmath.matrix(len(rows), n)
        for a, x in enumerate(rows):
            for k in range(n):
                QE[a, k] = Q[int(x), k]
        P = QE.H * QE if len(rows) else mpmath.zeros(n, n)
        G = mpmath.matrix(n, n)
        for j in range(n):
            for k in range(n):
                d = lam[k] - lam[j]
                I = Tm if abs(d) <= tau else (mpmath.expj(Tm * d) - 1) / (1j * d)
                G[j, k] = P[j, k] * I
        ev = mpmath.eighe(G, eigvals_only=True)
        return float(min(mpmath.re(v) for v in ev))


def refinement_digits(n: int, T: float) -> int:
    """Working precision able to resolve ``μ_min`` down to the short-time scale
    ``T^(2n-1)·((n-1)!/(2n-2)!)²/(2n-1)`` of a path watched from one end.

    That is the smallest positive value seen among graphs on ``n`` vertices,
    where ``n - 1`` derivatives of the flow are needed to reach every vertex.
    """
    scale = ((2 * n - 1) * max(0.0, -math.log10(T))
             + 2 * (math.lgamma(2 * n - 1) - math.lgamma(n)) / math.log(10) + math.log10(2 * n - 1))
    return max(2 * REFINE_DPS, int(math.ceil(scale)) + REFINE_MARGIN + 20)


def _refined_mu_min(G: Gramian, dps: int):
    """``(μ_min, digits, noise floor)`` from up to two extended-precision evaluations.

    A value more than ``10^REFINE_MARGIN`` above the noise floor ``10^-digits·T``
    is accepted as genuinely positive; otherwise the computation is repeated
    at :func:`refinement_digits` precision.
    """
    levels = [dps]
    cap = refinement_digits(G.dec.n, G.T)
    if cap > dps:
        levels.append(cap)
    for digits in levels:
        mu = extended_precision_mu_min(G.dec.matrix, G.E.mask, G.T, dps=digits)
        floor = 10.0 ** (-(digits - REFINE_MARGIN)) * G.T
        if mu > floor:
            break
    return mu, digits, floor


def observability_constant(
    G: Gramian,
    tau: float | None = None,
    refine: bool = True,
    dps: int = REFINE_DPS,
) -> ObservabilityReport:
    """Classify a Gramian and report ``C_obs = 1/μ_min``.

    The default threshold is ``1e-8·T``. When ``μ_min`` falls at or below it
    and the graph has at most ``REFINE_MAX_N`` vertices (and ``refine`` is
    set), ``μ_min`` is recomputed in extended precision and compared against
    that computation's noise floor instead; short horizons legitimately
    produce tiny but nonzero values that a fixed double-precision threshold
    would misread.
    """
    T = G.T
    thr = tau_obs(T) if tau is None else tau
    w, Q = np.linalg.eigh(G.matrix)
    mu = float(w[0])
    refined = False
    details = {"mu_max": float(w[-1])}
    if mu <= thr and refine and tau is None and G.dec.n <= REFINE_MAX_N:
        mu, digits, thr = _refined_mu_min(G, dps)
        refined = True
        details["digits"] = digits
    details["tau_obs"] = thr
    observable = mu > thr
    witness = None if observable else _canonical(G.dec.reconstruct(Q[:, 0]))
    return ObservabilityReport(
        observable=observable,
        method="gramian",
        T=T,
        mu_min=mu,
        C_obs=1.0 / mu if observable else None,
        witness=witness,
        refined=refined,
        details=details,
    )


# --------------------------------------------------------------------------
# exterior average and the conservation identity


@dataclass
class ExteriorAverage:
    """``||S_{E^c}(T)||`` and the constant it implies for ``E``."""

    norm: float
    T: float
    gap: float
    strict_gap: bool
    C_obs: float | None

    def to_dict(self):
        return {
            "norm": self.norm,
            "T": self.T,
            "gap": self.gap,
            "strict_gap": self.strict_gap,
            "C_obs": self.C_obs,
            "note": None if self.strict_gap else "no strict gap at this size",
        }


def exterior_average_norm(
    dec: SpectralDecomposition,
    groups: EigenspaceGrouping,
    Ec: ObservationSet,
    T: float,
) -> ExteriorAverage:
    """Operator norm of ``∫_0^T e^{-itΔ} 1_{E^c} e^{itΔ} dt`` (largest Gramian eigenvalue of ``E^c``).

    When the norm stays below ``T`` the complement ``E`` is observable with
    ``C_obs = 1/(T - norm)``.
    """
    lam_max = float(gramian(dec, groups, Ec, T).eigenvalues()[-1])
    gap = T - lam_max
    strict = gap > tau_obs(T)
    return ExteriorAverage(
        norm=lam_max, T=float(T), gap=gap, strict_gap=strict, C_obs=1.0 / gap if strict else None
    )


def complementarity_check(
    dec: SpectralDecomposition,
    groups: EigenspaceGrouping,
    E: ObservationSet,
    T: float,
) -> float:
    """``max |G_E + G_{E^c} - T·Id|``; zero up to rounding by ℓ² conservation."""
    G1 = gramian(dec, groups, E, T).matrix
    G2 = gramian(dec, groups, E.complement(), T).matrix
    return float(np.abs(G1 + G2 - T * np.eye(dec.n)).max())


# --------------------------------------------------------------------------
# Hautus / resolvent sweep


@dataclass
class HautusCertificate:
    lambda_grid: np.ndarray
    q: np.ndarray
    q_min: float
    lambda_at_min: float
    M: float
    m: float
    tau: float

    @property
    def observable(self) -> bool:
        return self.q_min > self.tau

    @property
    def resolvent_constants(self) -> tuple[float, float] | None:
        """``(M', m')`` with ``||x||² <= M'||(A-λ)x||² + m'||1_E x||²`` for all real λ."""
        if not self.observable:
            return None
        return self.M / self.q_min, self.m / self.q_min

    @property
    def threshold_time(self) -> float | None:
        """Times ``T > π·sqrt(M')`` admit an observability inequality (up to ε)."""
        rc = self.resolvent_constants
        return None if rc is None else float(np.pi * np.sqrt(rc[0]))

    def to_dict(self):
        rc = self.resolvent_constants
        return {
            "observable": self.observable,
            "M": self.M,
            "m": self.m,
            "q_min": self.q_min,
            "lambda_at_min": self.lambda_at_min,
            "resolvent_constants": None if rc is None else list(rc),
            "threshold_time": self.threshold_time,
            "grid_size": int(self.lambda_grid.size),
        }


def hautus_sweep(
    A,
    E: ObservationSet,
    M: float = 1.0,
    m: float = 1.0,
    grid=None,
    n_grid: int = 401,
    include_eigenvalues: bool = True,
    tau: float | None = None,
) -> HautusCertificate:
    """Evaluate ``q(λ) = λ_min(M(A-λ)² + m·diag(1_E))`` over a real grid.

    The default grid spans ``[λ_min(A)-1, λ_max(A)+1]``; with
    ``include_eigenvalues`` the eigenvalues of ``A`` are added so that
    ``q_min > 0`` is equivalent to the restriction test.
    """
    if not (M > 0 and m > 0):
        raise InvalidInputError("M and m must be positive")
    A = np.asarray(A)
    n = A.shape[0]
    lam = np.linalg.eigvalsh(A)
    lo, hi = lam[0] - 1.0, lam[-1] + 1.0
    if grid is None:
        grid = np.linspace(lo, hi, n_grid)
    grid = np.asarray(grid, dtype=float)
    if grid.min() > lo + 1e-12 or grid.max() < hi - 1e-12:
        raise InvalidInputError(f"grid must cover [{lo:.6g}, {hi:.6g}]")
    if include_eigenvalues:
        grid = np.union1d(grid, lam)
    P = np.diag(E.mask.astype(float))
    eye = np.eye(n)
    q = np.empty(grid.size)
    chunk = max(1, 2_000_000 // max(1, n * n))
    for s in range(0, grid.size, chunk):
        D = A[None, :, :] - grid[s : s + chunk, None, None] * eye
        H = M * (D.conj().transpose(0, 2, 1) @ D) + m * P
        q[s : s + chunk] = np.linalg.eigvalsh(H)[:, 0]
    k = int(np.argmin(q))
    return HautusCertificate(
        lambda_grid=grid,
        q=q,
        q_min=float(q[k]),
        lambda_at_min=float(grid[k]),
        M=float(M),
        m=float(m),
        tau=m * DEFAULT_TAU_RANK if tau is None else tau,
    )
