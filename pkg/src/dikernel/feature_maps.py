"""Explicit Nystrom and random Fourier feature maps."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractError, DegenerateMapError
from .kernels import KernelConfig, kernel_matrix
from .numerics import EigFactors, default_rel_tol, sym_eig

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class NystromMap:
    """Nystrom map parametrized by representative points ``X_r`` (``d x n``).

    The eigendecomposition of ``B = k(X_r, X_r)`` is cached per kernel
    configuration. Training never mutates ``X_r`` in place; it builds a new
    map, so the cache cannot go stale.
    """

    X_r: np.ndarray
    rank_tol: float | None = None
    _cache: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        X_r = np.array(self.X_r, dtype=np.float64)
        if X_r.ndim != 2 or X_r.shape[1] < 1:
            raise ContractError(f"X_r must be d x n with n >= 1, got shape {X_r.shape}")
        X_r.setflags(write=False)
        object.__setattr__(self, "X_r", X_r)

    @property
    def d(self) -> int:
        return self.X_r.shape[0]

    @property
    def n(self) -> int:
        return self.X_r.shape[1]

    def factors(self, cfg: KernelConfig) -> EigFactors:
        if cfg not in self._cache:
            self._cache[cfg] = sym_eig(kernel_matrix(self.X_r, self.X_r, cfg))
        return self._cache[cfg]

    def whitening(self, cfg: KernelConfig) -> np.ndarray:
        """``Sigma^{-1/2} U^T`` restricted to the numerical rank of ``B``."""
        f = self.factors(cfg)
        tol = default_rel_tol((self.n,)) if self.rank_tol is None else self.rank_tol
        keep = f.values > tol * max(f.values[0], 0.0)
        if not keep.any():
            raise DegenerateMapError("kernel matrix of the representative points has rank 0")
        return f.vectors[:, keep].T / np.sqrt(f.values[keep])[:, None]

    def with_points(self, X_r: np.ndarray) -> "NystromMap":
        return NystromMap(X_r, self.rank_tol)


@dataclass(frozen=True, eq=False)
class FourierMap:
    """Random Fourier map ``sqrt(2/J) cos(W_f^T X + b_f)``."""

    W_f: np.ndarray
    b_f: np.ndarray

    def __post_init__(self):
        W = np.array(self.W_f, dtype=np.float64)
        b = np.array(self.b_f, dtype=np.float64).reshape(-1)
        if W.ndim != 2 or W.shape[1] < 1 or b.shape != (W.shape[1],):
            raise ContractError(f"W_f must be d x J and b_f length J, got {W.shape} and {b.shape}")
        if np.any(b < 0) or np.any(b > TWO_PI):
            raise ContractError("phases b_f must lie in [0, 2 pi]")
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "W_f", W)
        object.__setattr__(self, "b_f", b)

    @property
    def d(self) -> int:
        return self.W_f.shape[0]

    @property
    def J(self) -> int:
        return self.W_f.shape[1]


def nystrom_features(X: np.ndarray, nmap: NystromMap, cfg: KernelConfig) -> np.ndarray:
    """Whitened Nystrom features, ``J' x N`` with ``J'`` the numerical rank of ``B``."""
    G = kernel_matrix(X, nmap.X_r, cfg)
    return nmap.whitening(cfg) @ G.T


def rf_phases(X: np.ndarray, fmap: FourierMap) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != fmap.d:
        raise ContractError(f"data has shape {X.shape}, map expects {fmap.d} features")
    return fmap.W_f.T @ X + fmap.b_f[:, None]


def rf_features(X: np.ndarray, fmap: FourierMap) -> np.ndarray:
    return np.sqrt(2.0 / fmap.J) * np.cos(rf_phases(X, fmap))


def features(X: np.ndarray, fmap, kcfg: KernelConfig | None = None) -> np.ndarray:
    """Evaluate either map kind; Nystrom maps need the kernel configuration."""
    if isinstance(fmap, NystromMap):
        if kcfg is None:
            raise ContractError("Nystrom features need a kernel configuration")
        return nystrom_features(X, fmap, kcfg)
    return rf_features(X, fmap)


def init_nystrom(X, n: int, seed) -> NystromMap:
    """Pick ``n`` distinct training columns uniformly at random.

    ``X`` may be a ``Dataset`` or a ``d x N`` array.
    """
    X = np.asarray(getattr(X, "X", X), dtype=np.float64)
    N = X.shape[1]
    if not 1 <= n <= N:
        raise ContractError(f"cannot draw {n} representative points from {N} samples")
    idx = np.random.default_rng(seed).choice(N, size=n, replace=False)
    return NystromMap(X[:, idx])


def init_fourier(cfg: KernelConfig, d: int, J: int, seed) -> FourierMap:
    """Sample frequencies from the Gaussian kernel's spectral density, N(0, 2 gamma)."""
    if J < 1:
        raise ContractError(f"J must be positive, got {J}")
    if cfg.family != "gaussian":
        raise ContractError("random Fourier features need a shift-invariant kernel")
    rng = np.random.default_rng(seed)
    W = rng.normal(0.0, np.sqrt(2.0 * cfg.gamma), size=(d, J))
    b = rng.uniform(0.0, TWO_PI, size=J)
    return FourierMap(W, b)
