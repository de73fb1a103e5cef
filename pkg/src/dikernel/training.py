"""Mini-batch Adam ascent of NysDI / RFDI with a saturation-driven schedule."""
from __future__ import annotations

import time
import tracemalloc
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, batch_iter
from .exceptions import ConfigError, ContractError, NumericalError
from .feature_maps import TWO_PI, FourierMap, NystromMap
from .kernels import KernelConfig
from .objectives import DIConfig, nys_di_and_grad, rf_di_and_grad

LARGE_J = 500


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 1000
    lr0: float = 1e-3
    lr_decay: float = 0.1
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    saturation_rel_tol: float = 1e-3
    max_epochs: int = 100
    max_decays: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 2:
            raise ConfigError(f"batch_size must be >= 2, got {self.batch_size}")
        if not 0 < self.lr_decay < 1:
            raise ConfigError(f"lr_decay must be in (0, 1), got {self.lr_decay}")
        if self.lr0 <= 0:
            raise ConfigError(f"lr0 must be positive, got {self.lr0}")
        if self.max_epochs < 0 or self.max_decays < 0:
            raise ConfigError("max_epochs and max_decays must be non-negative")


@dataclass(frozen=True)
class AdamState:
    m: tuple
    v: tuple
    t: int = 0

    @classmethod
    def zeros(cls, params) -> "AdamState":
        return cls(tuple(np.zeros_like(p) for p in params), tuple(np.zeros_like(p) for p in params), 0)


def adam_step(params, grads, state: AdamState, lr: float, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8):
    """One Adam update that moves ``params`` *up* the gradient.

    Returns new parameter and state tuples; inputs are not modified.
    """
    if len(params) != len(grads) or any(np.shape(p) != np.shape(g) for p, g in zip(params, grads)):
        raise ContractError("parameter and gradient shapes differ")
    t = state.t + 1
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        g = -np.asarray(g)  # descend on the negated objective
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        new_p.append(p - lr * (m / bc1) / (np.sqrt(v / bc2) + eps))
        new_m.append(m)
        new_v.append(v)
    return tuple(new_p), AdamState(tuple(new_m), tuple(new_v), t)


def epoch_mean_update(mu_prev: float, b: int, value: float) -> float:
    """Running mean after the ``b``-th batch value."""
    if b < 1:
        raise ContractError("batch counter starts at 1")
    return (b - 1) / b * mu_prev + value / b


def effective_batch_size(J: int, cfg: TrainConfig, N: int | None = None) -> int:
    """Batch size for a ``J``-dimensional map: twice ``J`` once ``J`` exceeds 500."""
    if J < 1:
        raise ContractError(f"J must be positive, got {J}")
    bs = max(cfg.batch_size, 2 * J) if J > LARGE_J else cfg.batch_size
    if bs <= J:
        raise ConfigError(f"batch size {bs} must exceed the feature dimensionality {J}")
    if N is not None and bs > N:
        raise ConfigError(f"batch size {bs} exceeds the {N} training samples")
    return bs


@dataclass
class TrainReport:
    """Per-epoch mean objective ``mu`` and learning rate, plus how training ended."""

    initial_mu: float = float("nan")
    mu: list = field(default_factory=list)
    lr: list = field(default_factory=list)
    lr_changes: list = field(default_factory=list)
    stop_reason: str = ""
    wall_time: float = 0.0
    maximize: bool = True

    @property
    def epochs(self) -> int:
        return len(self.mu)

    @property
    def final_mu(self) -> float:
        return self.mu[-1] if self.mu else self.initial_mu

    def to_records(self) -> list[str]:
        """``epoch,mu,lr`` lines; epoch ``-1`` is the evaluation at initialization."""
        lines = ["epoch,mu,lr"]
        lr0 = self.lr[0] if self.lr else float("nan")
        lines.append(f"-1,{self.initial_mu!r},{lr0!r}")
        lines += [f"{e},{m!r},{lr!r}" for e, (m, lr) in enumerate(zip(self.mu, self.lr))]
        return lines

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("\n".join(self.to_records()) + "\n")


def _finite(value, where):
    if not np.isfinite(value):
        raise NumericalError(f"non-finite objective ({value}) at {where}")


def run_schedule(data: Dataset, params: tuple, step, cfg: TrainConfig, batch_size: int,
                 maximize: bool = True, project=None):
    """Generic mini-batch Adam loop shared by DI training and the baselines.

    ``step(Xb, Yb, params) -> (value, grads)``. For ``maximize=False`` the
    gradients are negated before the (ascending) Adam step. ``project``
    maps parameters back onto their domain after every step.

    Saturation means the epoch mean improved on the best value so far by
    less than ``saturation_rel_tol`` (relative). The learning rate is then
    multiplied by ``lr_decay``; a saturation after ``max_decays`` decays
    ends training.
    """
    t0 = time.perf_counter()
    sign = 1.0 if maximize else -1.0
    report = TrainReport(maximize=maximize)
    mu = 0.0
    for b, (Xb, Yb) in enumerate(batch_iter(data, batch_size, cfg.seed, 0), 1):
        mu = epoch_mean_update(mu, b, step(Xb, Yb, params)[0])
    _finite(mu, "initialization")
    report.initial_mu = mu
    best = mu
    lr = cfg.lr0
    decays = 0
    state = AdamState.zeros(params)
    report.stop_reason = "max_epochs"
    for epoch in range(cfg.max_epochs):
        mu = 0.0
        for b, (Xb, Yb) in enumerate(batch_iter(data, batch_size, cfg.seed, epoch), 1):
            value, grads = step(Xb, Yb, params)
            _finite(value, f"epoch {epoch}, batch {b}")
            if not maximize:
                grads = tuple(-g for g in grads)
            params, state = adam_step(params, grads, state, lr, cfg.adam_beta1,
                                      cfg.adam_beta2, cfg.adam_eps)
            if project:
                params = project(params)
            mu = epoch_mean_update(mu, b, value)
        report.mu.append(mu)
        report.lr.append(lr)
        gain = sign * (mu - best) / max(abs(best), 1e-300)
        if sign * (mu - best) > 0:
            best = mu
        if gain >= cfg.saturation_rel_tol:
            continue
        if decays >= cfg.max_decays:
            report.stop_reason = "saturated after learning-rate decay"
            break
        report.lr_changes.append((epoch, lr, lr * cfg.lr_decay))
        lr *= cfg.lr_decay
        decays += 1
    report.wall_time = time.perf_counter() - t0
    return params, report


def nystrom_step(dicfg: DIConfig, kcfg: KernelConfig, rank_tol=None):
    def step(Xb, Yb, params):
        value, grad = nys_di_and_grad(Xb, Yb, NystromMap(params[0], rank_tol), dicfg, kcfg)
        return value, (grad,)
    return step


def fourier_step(dicfg: DIConfig):
    def step(Xb, Yb, params):
        value, grads = rf_di_and_grad(Xb, Yb, FourierMap(*params), dicfg)
        return value, grads
    return step


def wrap_phases(params):
    W, b = params[0], params[1]
    return (W, np.mod(b, TWO_PI)) + tuple(params[2:])


def train_nystrom(data: Dataset, nmap: NystromMap, cfg: TrainConfig = TrainConfig(),
                  dicfg: DIConfig = DIConfig(), kcfg: KernelConfig = KernelConfig()):
    """Optimize the representative points by ascending NysDI on mini-batches."""
    bs = effective_batch_size(nmap.n, cfg, data.N)
    (X_r,), report = run_schedule(data, (np.array(nmap.X_r),), nystrom_step(dicfg, kcfg, nmap.rank_tol),
                                  cfg, bs)
    return (nmap if cfg.max_epochs == 0 else nmap.with_points(X_r)), report


def train_fourier(data: Dataset, fmap: FourierMap, cfg: TrainConfig = TrainConfig(),
                  dicfg: DIConfig = DIConfig()):
    """Optimize ``(W_f, b_f)`` jointly by ascending RFDI on mini-batches.

    Phases are wrapped into ``[0, 2 pi)`` after every step; the features are
    periodic in them, so the objective is unaffected.
    """
    bs = effective_batch_size(fmap.J, cfg, data.N)
    (W, b), report = run_schedule(data, (np.array(fmap.W_f), np.array(fmap.b_f)), fourier_step(dicfg),
                                  cfg, bs, project=wrap_phases)
    return (fmap if cfg.max_epochs == 0 else FourierMap(W, b)), report


def step_peak_floats(step, params, Xb, Yb, lr: float = 1e-3) -> float:
    """Peak memory allocated by one gradient-and-update step, in float64 units.

    Uses ``tracemalloc``, which numpy reports its buffers to; inputs that
    already exist (data batch, parameters) are not counted.
    """
    state = AdamState.zeros(params)
    tracemalloc.start()
    try:
        tracemalloc.reset_peak()
        base = tracemalloc.get_traced_memory()[0]
        _, grads = step(Xb, Yb, params)
        out = adam_step(params, grads, state, lr)
        peak = tracemalloc.get_traced_memory()[1]
        del out, grads
    finally:
        tracemalloc.stop()
    return (peak - base) / 8.0
