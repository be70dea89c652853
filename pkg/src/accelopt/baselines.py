"""First-order reference methods: SVRG on finite sums and proximal GD."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from .errors import InvalidConfigError
from .oracle import ObjectiveOracle
from .problems import SparseDataset, logistic_eval, _sigmoid


@dataclass(frozen=True)
class SvrgConfig:
    learning_rate: float
    epochs: int
    epoch_length: int = 0    # 0 means the default 2n
    rng_seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise InvalidConfigError("learning_rate must be positive")
        if self.epochs < 0 or self.epoch_length < 0:
            raise InvalidConfigError("epochs and epoch_length must be >= 0")


def run_svrg(dataset: SparseDataset, cfg: SvrgConfig,
             x0: np.ndarray) -> Tuple[np.ndarray, List[float]]:
    """Variance-reduced stochastic gradient on the logistic finite sum.

    Snapshot = last iterate of the previous epoch. Deterministic given
    the seed. Raises if the objective diverges an order of magnitude
    above its starting value.
    """
    X, y = dataset.to_csr()
    n = dataset.n
    value, full_gradient, _ = logistic_eval(dataset)
    m = cfg.epoch_length if cfg.epoch_length > 0 else 2 * n
    eta = cfg.learning_rate
    rng = np.random.default_rng(cfg.rng_seed)
    x = np.array(x0, dtype=float)
    f0 = value(x)
    trace = [f0]

    def row_grad(j, w):
        a = np.asarray(X.getrow(j).todense()).ravel()
        margin = y[j] * float(a @ w)
        return -y[j] * _sigmoid(np.array([-margin]))[0] * a

    for _ in range(cfg.epochs):
        snapshot = x.copy()
        mu = full_gradient(snapshot)
        for j in rng.integers(0, n, size=m):
            g = row_grad(j, x) - row_grad(j, snapshot) + mu
            x = x - eta * g
        f_x = value(x)
        trace.append(f_x)
        if f_x > 10.0 * max(f0, 1e-12):
            raise InvalidConfigError(
                f"SVRG diverged (f = {f_x:.3e}); reduce the learning rate")
    return x, trace


def run_gd(oracle: ObjectiveOracle, step: float, iters: int,
           x0: np.ndarray) -> Tuple[np.ndarray, List[float]]:
    """(Proximal) gradient descent; plain GD when l == 0."""
    if step <= 0:
        raise InvalidConfigError("step must be positive")
    x = np.array(x0, dtype=float)
    comp = oracle.composite_part
    trace = [oracle.value(x)]
    for _ in range(iters):
        y = x - step * oracle.gradient(x)
        x = comp.prox(y, step) if comp is not None else y
        trace.append(oracle.value(x))
    return x, trace
