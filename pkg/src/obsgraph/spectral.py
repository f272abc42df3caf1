"""Dense Hermitian eigendecomposition, eigenspace grouping and the flow e^{itA}."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError

__all__ = [
    "SpectralDecomposition",
    "EigenspaceGrouping",
    "eigendecompose",
    "default_group_tol",
    "group_eigenspaces",
    "evolve",
]

HERMITIAN_TOL = 1e-12


def _frozen(a):
    a = np.array(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Ascending eigenvalues with orthonormal eigenvectors stored as columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residual_bound: float
    matrix: np.ndarray

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(self.eigenvalues).max()) if self.n else 0.0

    def coefficients(self, u) -> np.ndarray:
        """Eigenbasis coefficients ``c_k = <ψ_k, u>``."""
        return self.eigenvectors.conj().T @ np.asarray(u)

    def reconstruct(self, c) -> np.ndarray:
        return self.eigenvectors @ np.asarray(c)


def eigendecompose(A) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix via LAPACK ``eigh``.

    Raises ContractViolationError when ``A`` is not Hermitian to within
    1e-12 entrywise.
    """
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ContractViolationError(f"expected a square matrix, got shape {A.shape}")
    asym = np.abs(A - A.conj().T).max() if A.size else 0.0
    if asym > HERMITIAN_TOL:
        raise ContractViolationError(f"matrix is not Hermitian (max |A - A^H| = {asym:.3e})")
    lam, V = np.linalg.eigh(A)
    resid = np.linalg.norm(A @ V - V * lam, axis=0).max() if A.size else 0.0
    return SpectralDecomposition(
        eigenvalues=_frozen(lam),
        eigenvectors=_frozen(V),
        residual_bound=float(resid),
        matrix=_frozen(A),
    )


@dataclass(frozen=True, eq=False)
class EigenspaceGrouping:
    """Partition of eigenvalue indices into numerically degenerate blocks."""

    blocks: tuple[np.ndarray, ...]
    representatives: np.ndarray
    tau: float

    @property
    def labels(self) -> np.ndarray:
        """Block index of every eigenvalue."""
        out = np.empty(sum(b.size for b in self.blocks), dtype=np.int64)
        for m, b in enumerate(self.blocks):
            out[b] = m
        return out

    @property
    def multiplicities(self) -> list[int]:
        return [int(b.size) for b in self.blocks]

    def __len__(self):
        return len(self.blocks)


def default_group_tol(dec: SpectralDecomposition) -> float:
    return 1e-8 * (1.0 + dec.spectral_radius)


def group_eigenspaces(dec: SpectralDecomposition, tau: float | None = None) -> EigenspaceGrouping:
    """Split the sorted spectrum wherever consecutive eigenvalues differ by more than ``tau``."""
    if tau is None:
        tau = default_group_tol(dec)
    if tau <= 0:
        raise ValueError("tau must be positive")
    lam = dec.eigenvalues
    cuts = np.flatnonzero(np.diff(lam) > tau) + 1
    blocks = tuple(_frozen(b) for b in np.split(np.arange(lam.size), cuts))
    reps = _frozen([lam[b].mean() for b in blocks])
    return EigenspaceGrouping(blocks=blocks, representatives=reps, tau=float(tau))


def evolve(dec: SpectralDecomposition, u0, t) -> np.ndarray:
    """Solve ``∂_t u = iAu`` spectrally: ``u(t) = Σ_k c_k e^{itλ_k} ψ_k``.

    A scalar ``t`` returns one state; an array of times returns one row per time.
    """
    u0 = np.asarray(u0)
    if u0.shape != (dec.n,):
        raise ValueError(f"state has shape {u0.shape}, expected ({dec.n},)")
    c = dec.coefficients(u0)
    t = np.asarray(t, dtype=float)
    phases = np.exp(1j * np.multiply.outer(t, dec.eigenvalues))
    return (phases * c) @ dec.eigenvectors.T
