"""Closed-form kernel ridge regression on explicit features, plus metrics."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import ContractError
from .numerics import center_cols, center_rows, pinv_psd, solve_ridge
from .objectives import DIConfig, target_matrix


@dataclass(frozen=True, eq=False)
class KRRModel:
    W: np.ndarray
    b: np.ndarray
    rho_used: float


def krr_fit(Phi, Y, cfg: DIConfig = DIConfig()) -> KRRModel:
    """Minimize ``|Phi^T W + 1 b^T - Y|_F^2 + rho |W|_F^2`` in closed form.

    With ``rho == 0`` and rank-deficient scatter the minimum-norm solution is
    returned and a ``RuntimeWarning`` is issued.
    """
    Phi = np.asarray(Phi, dtype=np.float64)
    Y = target_matrix(Y)
    if Phi.ndim != 2 or Phi.shape[1] != Y.shape[0] or Y.shape[0] < 1:
        raise ContractError(f"features {Phi.shape} do not match targets {Y.shape}")
    Phi_c = center_cols(Phi)
    P = Phi_c @ center_rows(Y)
    S = Phi_c @ Phi_c.T
    if cfg.rho > 0:
        W = solve_ridge(S, cfg.rho, P)
    else:
        rank = np.linalg.matrix_rank(S, hermitian=True) if S.size else 0
        if rank < S.shape[0]:
            warnings.warn("singular feature scatter with rho = 0; using the pseudoinverse",
                          RuntimeWarning, stacklevel=2)
        W = pinv_psd(S) @ P
    b = Y.mean(axis=0) - W.T @ Phi.mean(axis=1)
    return KRRModel(W, b, cfg.rho)


def krr_predict(model: KRRModel, Phi) -> np.ndarray:
    """Scores ``Phi^T W + 1 b^T`` (``M x L``)."""
    Phi = np.asarray(Phi, dtype=np.float64)
    if Phi.ndim != 2 or Phi.shape[0] != model.W.shape[0]:
        raise ContractError(f"features of shape {Phi.shape}, model expects {model.W.shape[0]} rows")
    return Phi.T @ model.W + model.b


def krr_objective(W, b, Phi, Y, rho: float) -> float:
    """Regularized training loss of a linear head (the ridge objective)."""
    E = np.asarray(Phi).T @ W + b - target_matrix(Y)
    return float(np.sum(E * E) + rho * np.sum(np.asarray(W) ** 2))


def classify(scores) -> np.ndarray:
    """Row-wise argmax; ties go to the lowest class index."""
    return np.argmax(np.asarray(scores), axis=1)


def mse(pred, truth) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ContractError(f"shape mismatch {pred.shape} vs {truth.shape}")
    return float(np.mean((pred - truth) ** 2))


def accuracy(labels, truth_labels) -> float:
    labels = np.asarray(labels)
    truth_labels = np.asarray(truth_labels)
    if labels.shape != truth_labels.shape:
        raise ContractError(f"shape mismatch {labels.shape} vs {truth_labels.shape}")
    return float(np.mean(labels == truth_labels))
