"""Comparison objectives: alternating ridge least squares (LS) and softmax cross-entropy (CE).

Both baselines act on *unwhitened* map outputs: random Fourier features
``phi(X)`` for Fourier maps and the kernel columns ``k(X, X_r)`` for
Nystrom maps. For Nystrom maps the ridge penalty is ``rho tr(A^T B A)``,
which is the RKHS norm of the predictor and makes the LS head equivalent
to ridge regression on whitened Nystrom features.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .exceptions import ContractError
from .feature_maps import FourierMap, NystromMap, rf_phases
from .kernels import KernelConfig, KernelGrad, kernel_matrix
from .numerics import pinv_psd
from .objectives import DIConfig, rf_param_grad, target_matrix
from .training import TrainConfig, effective_batch_size, run_schedule, wrap_phases


@dataclass(frozen=True, eq=False)
class LinearHead:
    """Linear predictor ``F W + 1 b^T`` on the unwhitened map outputs ``F``."""

    W: np.ndarray
    b: np.ndarray


def map_outputs(X, fmap, kcfg: KernelConfig | None = None) -> np.ndarray:
    """Unwhitened outputs, one row per sample (``N x p``)."""
    if isinstance(fmap, NystromMap):
        return kernel_matrix(X, fmap.X_r, kcfg)
    return (np.sqrt(2.0 / fmap.J) * np.cos(rf_phases(X, fmap))).T


def head_scores(head: LinearHead, X, fmap, kcfg: KernelConfig | None = None) -> np.ndarray:
    return map_outputs(X, fmap, kcfg) @ head.W + head.b


def _penalty(fmap, kcfg):
    if isinstance(fmap, NystromMap):
        return kernel_matrix(fmap.X_r, fmap.X_r, kcfg)
    return np.eye(fmap.J)


def fit_head(X, Y, fmap, dicfg: DIConfig = DIConfig(), kcfg: KernelConfig | None = None,
             chunk: int = 4096) -> LinearHead:
    """Closed-form ridge head on all of ``X``, accumulating statistics chunk by chunk."""
    X = np.asarray(X, dtype=np.float64)
    Y = target_matrix(Y)
    N = X.shape[1]
    FtF = FtY = f_sum = None
    for s in range(0, N, chunk):
        F = map_outputs(X[:, s:s + chunk], fmap, kcfg)
        Yc = Y[s:s + chunk]
        if FtF is None:
            FtF, FtY, f_sum = F.T @ F, F.T @ Yc, F.sum(axis=0)
        else:
            FtF += F.T @ F
            FtY += F.T @ Yc
            f_sum += F.sum(axis=0)
    f_mean = f_sum / N
    y_mean = Y.mean(axis=0)
    M = FtF - N * np.outer(f_mean, f_mean) + dicfg.rho * _penalty(fmap, kcfg)
    M = 0.5 * (M + M.T)
    W = pinv_psd(M) @ (FtY - N * np.outer(f_mean, y_mean))
    return LinearHead(W, y_mean - W.T @ f_mean)


def _map_grad(Xb, fmap, kcfg, dF, E_B=None):
    """Chain ``dF`` (``N_b x p``, gradient w.r.t. the map outputs) to map parameters."""
    if isinstance(fmap, NystromMap):
        G = kernel_matrix(Xb, fmap.X_r, kcfg)
        g = KernelGrad(Xb, fmap.X_r, kcfg, K=G).contract(dF)
        if E_B is not None:
            kb = KernelGrad(fmap.X_r, fmap.X_r, kcfg)
            g += kb.contract(E_B) + kb.contract(E_B.T)
        return (g,)
    A = rf_phases(Xb, fmap)
    return rf_param_grad(Xb, A, np.sqrt(2.0 / fmap.J), dF.T)


def ls_loss_and_grad(Xb, Yb, fmap, head: LinearHead, dicfg: DIConfig = DIConfig(),
                     kcfg: KernelConfig | None = None):
    """Batch ridge loss and gradients ``(map_grads, (dW, db))``."""
    Xb = np.asarray(Xb, dtype=np.float64)
    Yb = target_matrix(Yb)
    F = map_outputs(Xb, fmap, kcfg)
    E = F @ head.W + head.b - Yb
    P = _penalty(fmap, kcfg)
    loss = float(np.sum(E * E)) + dicfg.rho * float(np.sum(head.W * (P @ head.W)))
    E_B = dicfg.rho * head.W @ head.W.T if isinstance(fmap, NystromMap) else None
    head_grad = (2.0 * (F.T @ E + dicfg.rho * P @ head.W), 2.0 * E.sum(axis=0))
    return loss, _map_grad(Xb, fmap, kcfg, 2.0 * E @ head.W.T, E_B), head_grad


def ce_loss_and_grad(Xb, labels, fmap, head: LinearHead, kcfg: KernelConfig | None = None):
    """Mean softmax cross-entropy and gradients ``(map_grads, (dW, db))``."""
    Xb = np.asarray(Xb, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    F = map_outputs(Xb, fmap, kcfg)
    logits = F @ head.W + head.b
    loss, D = softmax_ce(logits, labels)
    return loss, _map_grad(Xb, fmap, kcfg, D @ head.W.T), (F.T @ D, D.sum(axis=0))


def softmax_ce(logits, labels):
    """Mean cross-entropy of ``logits`` (``N x L``) and its gradient w.r.t. the logits."""
    logits = np.asarray(logits, dtype=np.float64)
    n = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(lse - z[np.arange(n), labels]))
    D = np.exp(z - lse[:, None])
    D[np.arange(n), labels] -= 1.0
    return loss, D / n


def _rebuild(fmap, params):
    if isinstance(fmap, NystromMap):
        return fmap.with_points(params[0])
    return FourierMap(params[0], params[1])


def _map_params(fmap):
    if isinstance(fmap, NystromMap):
        return (np.array(fmap.X_r),)
    return (np.array(fmap.W_f), np.array(fmap.b_f))


def _dim(fmap):
    return fmap.n if isinstance(fmap, NystromMap) else fmap.J


def train_ls(data: Dataset, fmap, cfg: TrainConfig = TrainConfig(), dicfg: DIConfig = DIConfig(),
             kcfg: KernelConfig | None = None):
    """Alternate a closed-form head refit on each batch with one Adam step on the map.

    The map step descends the batch ridge loss with the refit head held
    fixed. The report tracks the epoch mean of the minimized batch loss
    (smaller is better); the returned head is fit on all data for the
    final map.

    Because the head is optimal for the batch, the map gradient equals the
    gradient of the minimized loss, which is the negative batch DI gradient
    for both map families. The trajectory therefore follows DI training up
    to rounding.
    """
    def step(Xb, Yb, params):
        m = _rebuild(fmap, params)
        head = fit_head(Xb, Yb, m, dicfg, kcfg)
        loss, g_map, _ = ls_loss_and_grad(Xb, Yb, m, head, dicfg, kcfg)
        return loss, g_map

    k = len(_map_params(fmap))
    project = wrap_phases if k == 2 else None
    bs = effective_batch_size(_dim(fmap), cfg, data.N)
    params, report = run_schedule(data, _map_params(fmap), step, cfg, bs, maximize=False, project=project)
    new_map = fmap if cfg.max_epochs == 0 else _rebuild(fmap, params)
    return new_map, fit_head(data.X, data.Y, new_map, dicfg, kcfg), report


def train_ce(data: Dataset, fmap, cfg: TrainConfig = TrainConfig(), kcfg: KernelConfig | None = None):
    """Joint Adam descent of softmax cross-entropy over the head and the map.

    The head starts at zero.
    """
    if data.labels is None:
        raise ContractError("cross-entropy training needs class labels")
    k = len(_map_params(fmap))
    L = data.class_count
    p = _dim(fmap)

    def step(Xb, Yb, params):
        labels = np.argmax(Yb, axis=1)
        loss, g_map, g_head = ce_loss_and_grad(Xb, labels, _rebuild(fmap, params[:k]),
                                               LinearHead(*params[k:]), kcfg)
        return loss, tuple(g_map) + tuple(g_head)

    project = wrap_phases if k == 2 else None
    params0 = _map_params(fmap) + (np.zeros((p, L)), np.zeros(L))
    bs = effective_batch_size(p, cfg, data.N)
    params, report = run_schedule(data, params0, step, cfg, bs, maximize=False, project=project)
    new_map = fmap if cfg.max_epochs == 0 else _rebuild(fmap, params[:k])
    return new_map, LinearHead(*params[k:]), report
