"""Dense complex linear algebra used throughout the package.

Thin wrappers around LAPACK (through numpy) that add input validation,
tolerance handling and a fixed phase convention on eigen/singular vectors
so results are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL_RANK = 1e-10
HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class HermitianEigenResult:
    """Eigenvalues in ascending order with matching orthonormal columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __iter__(self):
        yield self.eigenvalues
        yield self.eigenvectors


def as_matrix(a, name="matrix") -> np.ndarray:
    """Return `a` as a finite 2-D complex array."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def _phase_factors(v: np.ndarray) -> np.ndarray:
    mags = np.abs(v)
    phases = np.ones(v.shape[1], dtype=complex)
    for k in range(v.shape[1]):
        col = mags[:, k]
        top = col.max()
        if top == 0.0:
            continue
        i = int(np.flatnonzero(col >= top * (1.0 - 1e-9))[0])
        phases[k] = np.conj(v[i, k]) / col[i]
    return phases


def fix_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive.

    Near-ties (within a relative 1e-9) resolve to the lowest index, which
    keeps the choice stable against rounding noise.
    """
    v = np.asarray(vectors, dtype=complex)
    if v.ndim == 1:
        return fix_phase(v[:, None])[:, 0]
    return v * _phase_factors(v)[None, :]


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    scale = max(1.0, np.linalg.norm(a))
    return np.linalg.norm(a - a.conj().T) <= tol * scale


def eigh(a, tol: float = HERMITIAN_TOL) -> HermitianEigenResult:
    """Eigendecomposition of a Hermitian matrix.

    Parameters
    ----------
    a : array_like
        Square Hermitian matrix. Asymmetry up to `tol` (relative Frobenius)
        is symmetrized away; anything larger raises ``ValueError``.

    Returns
    -------
    HermitianEigenResult
        Ascending eigenvalues and phase-fixed orthonormal eigenvectors.
    """
    m = as_matrix(a)
    if m.shape[0] != m.shape[1]:
        raise ValueError(f"eigh needs a square matrix, got {m.shape}")
    if not is_hermitian(m, tol):
        raise ValueError("matrix is not Hermitian within tolerance")
    m = 0.5 * (m + m.conj().T)
    w, v = np.linalg.eigh(m)
    return HermitianEigenResult(w, fix_phase(v))


def svd(a):
    """Thin SVD ``a = U @ diag(s) @ V^dagger`` with descending `s`.

    Returns ``(U, s, V)``; note `V` itself, not its adjoint. Column pairs of
    U and V are rotated jointly so that U's columns follow the phase
    convention of :func:`fix_phase`.
    """
    m = as_matrix(a)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    # rotating u_k and v_k by the same phase leaves u_k v_k^dagger unchanged
    phases = _phase_factors(u)[None, :]
    return u * phases, s, vh.conj().T * phases


def numerical_rank(singular_values, tol_rank: float = DEFAULT_TOL_RANK) -> int:
    """Count of entries above ``tol_rank * max``; zero for an all-zero list."""
    s = np.asarray(singular_values, dtype=float)
    if s.size == 0:
        return 0
    top = s.max()
    if top <= 0.0:
        return 0
    return int(np.count_nonzero(s > tol_rank * top))


def max_eigenvalue(a) -> float:
    return float(eigh(a).eigenvalues[-1])


def psd_sqrt(a) -> np.ndarray:
    """Square root of a positive semidefinite matrix (negative noise clipped)."""
    w, v = eigh(a)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
