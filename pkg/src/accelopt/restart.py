"""Epoch-wise restart wrapper for uniformly convex objectives.

Any inner solver exposing run_m(y, m) -> new iterate can be wrapped; the
epoch lengths follow a closed-form schedule derived from the inner
solver's sublinear rate and the function's uniform-convexity pair, which
converts the rate to linear (and superlinear past a switch epoch when the
rate exponent on the distance beats the convexity order).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from .engine import EngineConfig, CoefficientStrategy, heuristic_total_weight_constant
from .errors import InvalidConfigError


@dataclass(frozen=True)
class RestartConfig:
    """Uniform-convexity pair (s, sigma), inner-rate constants, and budget.

    The inner solver is assumed to satisfy
    f(run_m(y, m)) - f* <= c_A * ||y - x*||^v / m^r, and ||x0 - x*|| <= R.
    """
    s: float
    sigma: float
    v: float
    r: float
    c_A: float
    R: float
    K: int

    def __post_init__(self):
        if self.s < 2:
            raise InvalidConfigError("uniform-convexity order s must be >= 2")
        if min(self.sigma, self.v, self.r, self.c_A, self.R) <= 0:
            raise InvalidConfigError("sigma, v, r, c_A, R must be positive")
        if self.K < 0:
            raise InvalidConfigError("epoch count K must be nonnegative")

    @property
    def m0(self) -> int:
        base = (2.0 ** self.s * self.s * self.c_A * self.R ** (self.v - self.s)
                / self.sigma)
        return max(1, math.ceil(base ** (1.0 / self.r)))

    @property
    def k0(self) -> float:
        if self.s >= self.v:
            return math.inf
        val = (1.0 / self.s + (self.v / self.s) * math.log2(self.R)
               + (1.0 / (self.v - self.s)) * math.log2(self.s * self.c_A
                                                       / self.sigma))
        return float(math.ceil(val))


class InnerSolverHandle:
    """Adapter around run_m(y, m) -> iterate; deterministic given (y, m)."""

    def __init__(self, run_m: Callable[[np.ndarray, int], np.ndarray]):
        self.run_m = run_m


def solver_handle_from_engine(oracle, cfg: EngineConfig) -> InnerSolverHandle:
    """Wrap the accelerated engine as a restartable inner solver."""
    from .engine import AcceleratedSolver
    import dataclasses

    def run_m(y, m):
        inner_cfg = dataclasses.replace(cfg, max_iter=m, stop_gap=None)
        return AcceleratedSolver(oracle, inner_cfg).run(y).solution

    return InnerSolverHandle(run_m)


def epoch_schedule(cfg: RestartConfig) -> List[int]:
    """Per-epoch inner iteration counts m_k for k = 0 .. K-1."""
    out = []
    decay = (cfg.v - cfg.s) / cfg.r
    for k in range(cfg.K):
        if k <= cfg.k0 - 1:
            out.append(max(1, math.ceil(cfg.m0 * 2.0 ** (-decay * k))))
        else:
            out.append(1)
    return out


def run_restarted(inner: InnerSolverHandle, cfg: RestartConfig,
                  x0: np.ndarray,
                  f: Callable[[np.ndarray], float] = None
                  ) -> Tuple[np.ndarray, List[Tuple[int, int, float]]]:
    """Execute the epoch schedule from x0.

    Returns the final iterate and an epoch trace of (k, m_k, f(y_k))
    rows; f values are recorded only when a callable f is given.
    """
    y = np.array(x0, dtype=float)
    schedule = epoch_schedule(cfg)
    epoch_trace: List[Tuple[int, int, float]] = []
    for k, m_k in enumerate(schedule):
        y = np.asarray(inner.run_m(y, m_k), dtype=float)
        epoch_trace.append((k + 1, m_k, f(y) if f is not None else math.nan))
    return y, epoch_trace


def uaf_rate_constants(cfg: EngineConfig) -> Tuple[float, float, float]:
    """Inner-rate triple (c_A, r, v) of the accelerated engine with the
    power-of-norm proxy, for feeding RestartConfig."""
    p_nu = cfg.p + cfg.nu
    q = cfg.q
    r = ((q + 1.0) * p_nu - q) / q
    v = p_nu
    if math.isclose(q, p_nu, rel_tol=0, abs_tol=1e-12):
        c_A = p_nu ** p_nu * cfg.L / (cfg.theta1 * cfg.c_q * cfg.gamma)
    else:
        c0 = heuristic_total_weight_constant(cfg)
        c_A = c0 ** (-(p_nu - q) / q) * p_nu ** r * cfg.L
    return c_A, r, v
