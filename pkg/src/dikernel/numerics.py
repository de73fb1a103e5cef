"""Dense linear algebra used by the feature maps, objectives and predictors.

All routines work in float64 and treat their inputs as immutable.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import ContractError, PSDError, RankDeficiencyError

SYMMETRY_TOL = 1e-10
PSD_TOL = 1e-8


@dataclass(frozen=True)
class EigFactors:
    """Eigenpairs of a symmetric matrix, eigenvalues sorted non-increasing."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.T


def default_rel_tol(shape) -> float:
    return 1e-12 * max(shape)


def _check_symmetric(M: np.ndarray) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if M.size and np.max(np.abs(M - M.T)) > SYMMETRY_TOL * scale:
        raise ContractError("matrix is not symmetric within tolerance")
    return 0.5 * (M + M.T)


def sym_eig(M: np.ndarray) -> EigFactors:
    """Eigendecomposition of a symmetric matrix, largest eigenvalue first."""
    M = _check_symmetric(M)
    values, vectors = np.linalg.eigh(M)
    return EigFactors(values[::-1].copy(), vectors[:, ::-1].copy())


def pinv_psd(M: np.ndarray, rel_tol: float | None = None) -> np.ndarray:
    """Moore-Penrose inverse of a symmetric PSD matrix.

    Eigenvalues at or below ``rel_tol * lambda_max`` are treated as zero.
    Raises :class:`PSDError` when an eigenvalue is more negative than
    ``PSD_TOL`` relative to the spectral radius.
    """
    f = sym_eig(M)
    return _pinv_from_factors(f, default_rel_tol(f.vectors.shape) if rel_tol is None else rel_tol)


def _pinv_from_factors(f: EigFactors, rel_tol: float) -> np.ndarray:
    n = f.vectors.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    scale = float(np.max(np.abs(f.values)))
    if scale == 0.0:
        return np.zeros((n, n))
    if f.values[-1] < -PSD_TOL * scale:
        raise PSDError(f"matrix has negative eigenvalue {f.values[-1]:.3e} (scale {scale:.3e})")
    keep = f.values > rel_tol * max(f.values[0], 0.0)
    U = f.vectors[:, keep]
    return (U / f.values[keep]) @ U.T


def solve_ridge(M: np.ndarray, rho: float, B: np.ndarray, rel_tol: float | None = None) -> np.ndarray:
    """Return ``(M + rho I)^{-1} B`` for symmetric PSD ``M``.

    With ``rho == 0`` the pseudoinverse of ``M`` is used instead; a system
    whose every eigenvalue falls under the rank tolerance raises
    :class:`RankDeficiencyError`.
    """
    if rho < 0 or not np.isfinite(rho):
        raise ContractError(f"rho must be finite and non-negative, got {rho}")
    M = _check_symmetric(M)
    B = np.asarray(B, dtype=np.float64)
    if B.shape[0] != M.shape[0]:
        raise ContractError(f"incompatible shapes {M.shape} and {B.shape}")
    if rho > 0:
        A = M + rho * np.eye(M.shape[0])
        try:
            return scipy.linalg.solve(A, B, assume_a="pos")
        except np.linalg.LinAlgError:
            # round-off can make a nearly singular M indefinite
            return scipy.linalg.solve(A, B, assume_a="sym")
    f = sym_eig(M)
    tol = default_rel_tol(M.shape) if rel_tol is None else rel_tol
    if f.values.size == 0 or f.values[0] <= 0.0 or not np.any(f.values > tol * f.values[0]):
        raise RankDeficiencyError("rho = 0 and no eigenvalue survives the rank tolerance")
    return _pinv_from_factors(f, tol) @ B


def center_cols(M: np.ndarray) -> np.ndarray:
    """Subtract each row's mean, i.e. ``M @ C`` without forming ``C``."""
    M = np.asarray(M, dtype=np.float64)
    return M - M.mean(axis=1, keepdims=True)


def center_rows(M: np.ndarray) -> np.ndarray:
    """Subtract each column's mean, i.e. ``C @ M``."""
    M = np.asarray(M, dtype=np.float64)
    return M - M.mean(axis=0, keepdims=True)
