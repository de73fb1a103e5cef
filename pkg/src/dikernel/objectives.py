"""Discriminant Information objectives and their parameter gradients.

All values are computed in the residual form

    DI = |Ybar|_F^2 - min_W ( |Phibar^T W - Ybar|_F^2 + rho |W|_F^2 ),

whose minimizer ``W = (Sbar + rho I)^{-1} Phibar Y`` is the same one the trace
expression uses. The minimized error is a sum of non-negative terms, so the
upper bound ``DI <= |Ybar|_F^2`` holds exactly in floating point.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError, GradientUndefinedError
from .feature_maps import FourierMap, NystromMap, rf_features, rf_phases
from .kernels import KernelConfig, KernelGrad, kernel_matrix
from .numerics import center_cols, center_rows, pinv_psd, solve_ridge

ENCODINGS = ("raw", "one_hot", "one_hot_unit_norm")


@dataclass(frozen=True)
class DIConfig:
    rho: float = 1e-4

    def __post_init__(self):
        if not (np.isfinite(self.rho) and self.rho >= 0):
            raise ContractError(f"rho must be finite and non-negative, got {self.rho}")


@dataclass(frozen=True, eq=False)
class Targets:
    """Target matrix ``Y`` (``N x L``) plus how it was encoded."""

    Y: np.ndarray
    encoding: str = "raw"

    def __post_init__(self):
        Y = np.array(self.Y, dtype=np.float64)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.ndim != 2:
            raise ContractError(f"targets must be N x L, got shape {Y.shape}")
        if self.encoding not in ENCODINGS:
            raise ContractError(f"unknown target encoding {self.encoding!r}")
        Y.setflags(write=False)
        object.__setattr__(self, "Y", Y)

    @property
    def L(self) -> int:
        return self.Y.shape[1]

    def __len__(self) -> int:
        return self.Y.shape[0]


def target_matrix(Y) -> np.ndarray:
    if isinstance(Y, Targets):
        return Y.Y
    Y = np.asarray(Y, dtype=np.float64)
    return Y[:, None] if Y.ndim == 1 else Y


def _check_cols(A: np.ndarray, Y: np.ndarray, min_n: int = 1):
    if A.ndim != 2 or A.shape[1] != Y.shape[0]:
        raise ContractError(f"{A.shape[1] if A.ndim == 2 else A.shape} samples vs {Y.shape[0]} target rows")
    if Y.shape[0] < min_n:
        raise ContractError(f"need at least {min_n} samples, got {Y.shape[0]}")


def _di_solution(Phi: np.ndarray, Y: np.ndarray, rho: float):
    """Return ``(di, ybar_sq, Z, R, Phi_c)`` for features Phi and targets Y."""
    Phi_c = center_cols(Phi)
    Yc = center_rows(Y)
    P = Phi_c @ Yc
    S = Phi_c @ Phi_c.T
    Z = solve_ridge(S, rho, P) if rho > 0 else pinv_psd(S) @ P
    R = Yc - Phi_c.T @ Z
    ybar_sq = float(np.sum(Yc * Yc))
    err = float(np.sum(R * R)) + rho * float(np.sum(Z * Z))
    return ybar_sq - err, ybar_sq, Z, R, Phi_c


def di(Phi, Y, cfg: DIConfig = DIConfig()) -> float:
    """Discriminant Information ``tr((Sbar + rho I)^{-1} S_B)`` of features ``Phi`` (``J x N``)."""
    Phi = np.asarray(Phi, dtype=np.float64)
    Y = target_matrix(Y)
    _check_cols(Phi, Y)
    return _di_solution(Phi, Y, cfg.rho)[0]


def mrlse(Phi, Y, cfg: DIConfig = DIConfig()) -> float:
    """Minimum regularized least-squares error of ridge regression on ``Phi``."""
    Phi = np.asarray(Phi, dtype=np.float64)
    Y = target_matrix(Y)
    _check_cols(Phi, Y)
    value, ybar_sq, *_ = _di_solution(Phi, Y, cfg.rho)
    return ybar_sq - value


def di_and_grad(Phi, Y, cfg: DIConfig = DIConfig()):
    """DI together with its gradient with respect to the feature matrix.

    For ``Z = (Sbar + rho I)^{-1} Phibar Y`` and residual ``R = Ybar - Phibar^T Z``
    the gradient is ``2 Z R^T``; ``R`` already has zero column means, so
    the centering projector drops out.
    """
    Phi = np.asarray(Phi, dtype=np.float64)
    Y = target_matrix(Y)
    _check_cols(Phi, Y)
    value, _, Z, R, _ = _di_solution(Phi, Y, cfg.rho)
    return value, 2.0 * Z @ R.T


def rf_di(Xb, Y, fmap: FourierMap, cfg: DIConfig = DIConfig()) -> float:
    Y = target_matrix(Y)
    if Y.shape[0] < 2:
        raise ContractError("RFDI needs a batch of at least 2 samples")
    return di(rf_features(Xb, fmap), Y, cfg)


def rf_di_and_grad(Xb, Y, fmap: FourierMap, cfg: DIConfig = DIConfig()):
    """RFDI value and its gradient ``(dW_f, db_f)``."""
    Xb = np.asarray(Xb, dtype=np.float64)
    Y = target_matrix(Y)
    if Y.shape[0] < 2:
        raise ContractError("RFDI needs a batch of at least 2 samples")
    A = rf_phases(Xb, fmap)
    s = np.sqrt(2.0 / fmap.J)
    value, dPhi = di_and_grad(s * np.cos(A), Y, cfg)
    dW, db = rf_param_grad(Xb, A, s, dPhi)
    return value, (dW, db)


def rf_param_grad(Xb, A, s, dPhi):
    """Chain a feature-space gradient through ``s cos(W_f^T X + b_f)``."""
    dA = dPhi * np.sin(A)
    dA *= -s
    return Xb @ dA.T, dA.sum(axis=1)


def grad_rf_di(Xb, Y, fmap: FourierMap, cfg: DIConfig = DIConfig()):
    return rf_di_and_grad(Xb, Y, fmap, cfg)[1]


def _nys_solution(Xb, Y, nmap: NystromMap, cfg: DIConfig, kcfg: KernelConfig):
    # Solving M = Gbar^T Gbar + rho B directly loses accuracy when B is badly
    # conditioned. In the whitened basis T of B, T^T M T = Sbar + rho I, so the
    # ridge system is solved there and mapped back with Z = T Z_w.
    G = kernel_matrix(Xb, nmap.X_r, kcfg)
    B = kernel_matrix(nmap.X_r, nmap.X_r, kcfg)
    Tt = nmap.whitening(kcfg)
    value, _, Zw, R, _ = _di_solution(Tt @ G.T, Y, cfg.rho)
    return value, G, B, Tt.T @ Zw, R


def _check_batch(Xb, Y, nmap):
    Xb = np.asarray(Xb, dtype=np.float64)
    Y = target_matrix(Y)
    _check_cols(Xb, Y, min_n=2)
    if Xb.shape[0] != nmap.d:
        raise ContractError(f"data has {Xb.shape[0]} features, map expects {nmap.d}")
    return Xb, Y


def nys_di(Xb, Y, nmap: NystromMap, cfg: DIConfig = DIConfig(), kcfg: KernelConfig = KernelConfig()) -> float:
    """Kernel DI of a batch restricted to the span of the representative points.

    Equals ``tr((Gbar^T Gbar + rho B)^+ Gbar^T Y Y^T Gbar)`` with
    ``G = k(Xb, X_r)`` and ``B = k(X_r, X_r)``.
    """
    Xb, Y = _check_batch(Xb, Y, nmap)
    return _nys_solution(Xb, Y, nmap, cfg, kcfg)[0]


def nys_di_and_grad(Xb, Y, nmap: NystromMap, cfg: DIConfig = DIConfig(), kcfg: KernelConfig = KernelConfig()):
    """NysDI and its gradient with respect to ``X_r``.

    With ``Z = M^+ Gbar^T Y`` (``M = Gbar^T Gbar + rho B``) and ``R = Ybar - Gbar Z`` the partials are
    ``2 R Z^T`` for ``G`` and ``-rho Z Z^T`` for ``B``; ``B`` depends on
    ``X_r`` through both kernel arguments.
    """
    Xb, Y = _check_batch(Xb, Y, nmap)
    value, G, B, Z, R = _nys_solution(Xb, Y, nmap, cfg, kcfg)
    E_G = 2.0 * R @ Z.T
    E_B = -cfg.rho * Z @ Z.T
    grad = KernelGrad(Xb, nmap.X_r, kcfg, K=G).contract(E_G)
    if cfg.rho > 0:
        kb = KernelGrad(nmap.X_r, nmap.X_r, kcfg, K=B)
        grad += kb.contract(E_B) + kb.contract(E_B.T)
    if not np.all(np.isfinite(grad)):
        raise GradientUndefinedError("NysDI gradient is not finite; jitter the representative points")
    return value, grad


def grad_nys_di(Xb, Y, nmap: NystromMap, cfg: DIConfig = DIConfig(), kcfg: KernelConfig = KernelConfig()):
    return nys_di_and_grad(Xb, Y, nmap, cfg, kcfg)[1]


def kdca_oracle(K, Y, cfg: DIConfig = DIConfig()) -> float:
    """Optimal kernel DCA objective ``tr((Kbar^2 + rho Kbar)^+ K_B)`` from a full kernel matrix.

    ``K_B = Kbar Y Y^T Kbar``. Cost is cubic in N; intended for small checks.
    """
    K = np.asarray(K, dtype=np.float64)
    Y = target_matrix(Y)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != Y.shape[0]:
        raise ContractError(f"kernel shape {K.shape} does not match {Y.shape[0]} targets")
    Kc = center_rows(center_cols(K))
    Kc = 0.5 * (Kc + Kc.T)
    KY = Kc @ Y
    if cfg.rho > 0:
        # same value as the trace form, without squaring the condition number of Kbar
        return float(np.sum(KY * solve_ridge(Kc, cfg.rho, Y)))
    return float(np.sum((pinv_psd(Kc @ Kc) @ KY) * KY))
