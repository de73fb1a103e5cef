"""Kernel evaluation and input derivatives.

Data matrices hold one sample per column (``d x N``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError

FAMILIES = ("gaussian", "linear")


@dataclass(frozen=True)
class KernelConfig:
    """Kernel family and parameters.

    ``gaussian`` is ``exp(-gamma * |x - y|^2)``; ``linear`` is ``x . y`` and
    ignores ``gamma``. The linear family exists to check objective identities
    against plain feature-space formulas.
    """

    family: str = "gaussian"
    gamma: float = 1.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ContractError(f"unknown kernel family {self.family!r}")
        if not (np.isfinite(self.gamma) and self.gamma > 0):
            raise ContractError(f"gamma must be finite and positive, got {self.gamma}")


def _pair(X1, X2):
    X1 = np.asarray(X1, dtype=np.float64)
    X2 = np.asarray(X2, dtype=np.float64)
    if X1.ndim != 2 or X2.ndim != 2 or X1.shape[0] != X2.shape[0]:
        raise ContractError(f"feature dimensions differ: {X1.shape} vs {X2.shape}")
    return X1, X2


def sq_dists(X1: np.ndarray, X2: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances between columns, clamped at 0."""
    X1, X2 = _pair(X1, X2)
    D = (X1 * X1).sum(0)[:, None] + (X2 * X2).sum(0)[None, :] - 2.0 * (X1.T @ X2)
    np.maximum(D, 0.0, out=D)
    return D


def kernel_matrix(X1: np.ndarray, X2: np.ndarray, cfg: KernelConfig) -> np.ndarray:
    """The ``N1 x N2`` matrix of kernel values between columns of X1 and X2."""
    X1, X2 = _pair(X1, X2)
    if cfg.family == "linear":
        return X1.T @ X2
    D = sq_dists(X1, X2)
    D *= -cfg.gamma
    return np.exp(D, out=D)


class KernelGrad:
    """Derivatives of ``k(x1_i, x2_j)`` with respect to ``x2_j``.

    The full ``N1 x N2 x d`` tensor is never needed by the objectives: they
    only contract it against a weight matrix ``E`` (``N1 x N2``), which
    :meth:`contract` does in ``O(d N1 N2)`` time and ``O(N1 N2)`` memory.
    """

    def __init__(self, X1, X2, cfg: KernelConfig, K: np.ndarray | None = None):
        self.X1, self.X2 = _pair(X1, X2)
        self.cfg = cfg
        if cfg.family == "gaussian" and K is None:
            K = kernel_matrix(self.X1, self.X2, cfg)
        self.K = K

    def contract(self, E: np.ndarray) -> np.ndarray:
        """Return the ``d x N2`` matrix ``sum_i E[i, j] * dk(x1_i, x2_j)/dx2_j``."""
        E = np.asarray(E, dtype=np.float64)
        if E.shape != (self.X1.shape[1], self.X2.shape[1]):
            raise ContractError(f"weight shape {E.shape} does not match kernel shape")
        if self.cfg.family == "linear":
            return self.X1 @ E
        H = E * self.K
        return 2.0 * self.cfg.gamma * (self.X1 @ H - self.X2 * H.sum(axis=0))

    def dense(self) -> np.ndarray:
        """Materialize the ``N1 x N2 x d`` derivative tensor (tests and small inputs only)."""
        X1, X2 = self.X1, self.X2
        if self.cfg.family == "linear":
            return np.broadcast_to(X1.T[:, None, :], (X1.shape[1], X2.shape[1], X1.shape[0])).copy()
        diff = X1.T[:, None, :] - X2.T[None, :, :]
        return 2.0 * self.cfg.gamma * self.K[:, :, None] * diff


def kernel_grad_wrt_x2(X1, X2, cfg: KernelConfig) -> KernelGrad:
    return KernelGrad(X1, X2, cfg)
