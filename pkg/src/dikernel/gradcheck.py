"""Finite-difference verification of the analytic gradients."""
from __future__ import annotations

import numpy as np

from .baselines import LinearHead, ce_loss_and_grad, ls_loss_and_grad
from .feature_maps import FourierMap, NystromMap, init_fourier, init_nystrom
from .kernels import KernelConfig
from .objectives import DIConfig, nys_di, nys_di_and_grad, rf_di, rf_di_and_grad

OBJECTIVES = ("nys_di", "rf_di", "ls_nystrom", "ls_fourier", "ce_nystrom", "ce_fourier")


def central_difference(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    x = np.array(x, dtype=np.float64)
    g = np.empty_like(x)
    for i in np.ndindex(x.shape):
        old = x[i]
        x[i] = old + h
        fp = f(x)
        x[i] = old - h
        fm = f(x)
        x[i] = old
        g[i] = (fp - fm) / (2.0 * h)
    return g


def relative_error(analytic, numeric) -> float:
    """``max |a - f| / max |f|`` over all coordinates of all parameter blocks."""
    a = np.concatenate([np.ravel(x) for x in analytic])
    f = np.concatenate([np.ravel(x) for x in numeric])
    scale = np.max(np.abs(f))
    return float(np.max(np.abs(a - f)) / scale) if scale > 0 else float(np.max(np.abs(a)))


def small_instance(seed=0, d=5, n_batch=20, dim=4, n_classes=3):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(d, n_batch))
    labels = np.arange(n_batch) % n_classes
    rng.shuffle(labels)
    return X, np.eye(n_classes)[labels], labels


def check(objective: str, seed=0, rho: float = 1e-2, gamma: float = 1.0, h: float = 1e-5,
          d: int = 5, n_batch: int = 20, dim: int = 4, corrupt: float = 0.0):
    """Return ``(analytic_blocks, numeric_blocks)`` for one objective on a random instance.

    ``corrupt`` scales the analytic gradient by ``1 + corrupt``; it exists so
    the harness itself can be tested.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"unknown objective {objective!r}; choose from {OBJECTIVES}")
    X, Y, labels = small_instance(seed, d, n_batch, dim)
    kc = KernelConfig(gamma=gamma)
    cfg = DIConfig(rho)
    rng = np.random.default_rng(seed + 1)
    nmap = init_nystrom(X, dim, seed)
    fmap = init_fourier(kc, d, dim, seed)
    head = LinearHead(rng.normal(size=(dim, Y.shape[1])), rng.normal(size=Y.shape[1]))

    def rf_blocks(value):
        fw = central_difference(lambda W: value(FourierMap(W, fmap.b_f)), fmap.W_f, h)
        fb = central_difference(lambda b: value(FourierMap(fmap.W_f, np.mod(b, 2 * np.pi))), fmap.b_f, h)
        return [fw, fb]

    if objective == "nys_di":
        analytic = [nys_di_and_grad(X, Y, nmap, cfg, kc)[1]]
        numeric = [central_difference(lambda Z: nys_di(X, Y, NystromMap(Z), cfg, kc), nmap.X_r, h)]
    elif objective == "rf_di":
        analytic = list(rf_di_and_grad(X, Y, fmap, cfg)[1])
        numeric = rf_blocks(lambda m: rf_di(X, Y, m, cfg))
    elif objective == "ls_nystrom":
        analytic = list(ls_loss_and_grad(X, Y, nmap, head, cfg, kc)[1])
        numeric = [central_difference(lambda Z: ls_loss_and_grad(X, Y, NystromMap(Z), head, cfg, kc)[0],
                                      nmap.X_r, h)]
    elif objective == "ls_fourier":
        analytic = list(ls_loss_and_grad(X, Y, fmap, head, cfg)[1])
        numeric = rf_blocks(lambda m: ls_loss_and_grad(X, Y, m, head, cfg)[0])
    else:
        m = nmap if objective == "ce_nystrom" else fmap
        _, g_map, g_head = ce_loss_and_grad(X, labels, m, head, kc)
        analytic = list(g_map) + list(g_head)
        if objective == "ce_nystrom":
            numeric = [central_difference(
                lambda Z: ce_loss_and_grad(X, labels, NystromMap(Z), head, kc)[0], nmap.X_r, h)]
        else:
            numeric = rf_blocks(lambda mm: ce_loss_and_grad(X, labels, mm, head)[0])
        numeric += [
            central_difference(lambda W: ce_loss_and_grad(X, labels, m, LinearHead(W, head.b), kc)[0], head.W, h),
            central_difference(lambda b: ce_loss_and_grad(X, labels, m, LinearHead(head.W, b), kc)[0], head.b, h),
        ]
    if corrupt:
        analytic = [a * (1.0 + corrupt) for a in analytic]
    return analytic, numeric
