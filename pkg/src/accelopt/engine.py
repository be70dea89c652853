"""Accelerated high-order solver: coefficient scheduling, extrapolation,
tensor-step dispatch, dual-averaging updates, and certificate telemetry.

The loop alternates three ingredients: a schedule producing the weight
pair (a_i, A_i) and coupling coefficient lambda_i, a regularized model
minimization at the extrapolated point, and a dual-averaging update of
the mirror iterate z from the running gradient aggregate. The scalar
omega_i = L * lambda_i * ||x_i - xhat||^(p+nu-q) is logged every
iteration; keeping it within (theta1, theta2] certifies the
h(x*; x0) / A_k optimality gap.

Three schedules ship:

  * "exact"      for q = p + nu, where lambda is free of x_i and a_i
                 solves a scalar equation;
  * "heuristic"  for q < p + nu, assigning A_i its rate-optimal closed
                 form (needs an estimate of h(x*; x0));
  * "bisection"  for q < p + nu, searching lambda until omega lands in
                 [theta1, theta2], one tensor step per probe.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import (BracketingError, CapabilityError, InvalidConfigError,
                     ScalarSolveError)
from .oracle import ObjectiveOracle, SimpleConvexTerm, Vector
from .subsolver import StepSpec, StepResult, solve_step
from .taylor import build_taylor


class CoefficientStrategy(Enum):
    EXACT = "exact"
    HEURISTIC = "heuristic"
    BISECTION = "bisection"


class IndicatorPolicy(Enum):
    WARN = "warn"
    BISECT_FALLBACK = "bisect"


def power_norm_convexity_constant(q: float) -> float:
    """Uniform-convexity constant of (1/q)||.||_2^q, real q >= 2."""
    return 2.0 ** (2.0 - q)


@dataclass
class ProxyFunction:
    """Anchored power-of-norm proxy h(x; x0) = (1/q)||x - x0||_2^q."""
    anchor: np.ndarray
    order: float

    def __post_init__(self):
        if self.order < 2:
            raise InvalidConfigError("proxy order must be >= 2")
        self.anchor = np.array(self.anchor, dtype=float)

    @property
    def gamma(self) -> float:
        return power_norm_convexity_constant(self.order)

    @property
    def beta(self) -> float:
        return power_norm_convexity_constant(self.order)

    def value(self, x: Vector) -> float:
        return float(np.linalg.norm(np.asarray(x) - self.anchor)
                     ** self.order) / self.order


@dataclass
class EngineConfig:
    """Problem smoothness triple plus framework design parameters."""
    p: int
    nu: float
    L: float
    q: float
    alpha: float = 1.0
    theta1: float = 1.0
    theta2: float = 1.0
    gamma: Optional[float] = None
    beta: Optional[float] = None
    strategy: CoefficientStrategy = CoefficientStrategy.EXACT
    h_star_estimate: Optional[float] = None
    max_iter: int = 100
    stop_gap: Optional[float] = None
    f_ref: Optional[float] = None
    indicator_policy: IndicatorPolicy = IndicatorPolicy.WARN
    bracket_growth: float = 2.0
    krylov_tol: float = 1e-10
    max_krylov_dim: int = 200
    inner_tol: float = 1e-10

    def __post_init__(self):
        if self.p < 1:
            raise InvalidConfigError("p must be a positive integer")
        if not 0.0 <= self.nu <= 1.0:
            raise InvalidConfigError("nu must lie in [0, 1]")
        if self.p + self.nu < 2:
            raise InvalidConfigError("p + nu must be >= 2")
        if self.L <= 0:
            raise InvalidConfigError("L must be positive")
        if not 2.0 <= self.q <= self.p + self.nu:
            raise InvalidConfigError("q must lie in [2, p + nu]")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidConfigError("alpha must lie in [0, 1]")
        if not 0.0 < self.theta1 <= self.theta2:
            raise InvalidConfigError("need 0 < theta1 <= theta2")
        if self.theta2 > 1.0:
            raise InvalidConfigError("theta2 must be <= 1")
        if self.gamma is None:
            self.gamma = power_norm_convexity_constant(self.q)
        if self.beta is None:
            self.beta = power_norm_convexity_constant(self.q)
        if self.gamma <= 0 or self.beta <= 0:
            raise InvalidConfigError("gamma and beta must be positive")
        exact = math.isclose(self.q, self.p + self.nu, rel_tol=0, abs_tol=1e-12)
        if self.strategy is CoefficientStrategy.EXACT and not exact:
            raise InvalidConfigError("the exact schedule requires q = p + nu")
        if self.strategy is not CoefficientStrategy.EXACT:
            if exact:
                raise InvalidConfigError(
                    f"the {self.strategy.value} schedule requires q < p + nu")
            if self.theta2 >= 1.0:
                raise InvalidConfigError("q < p + nu requires theta2 < 1")
        if (self.strategy is CoefficientStrategy.HEURISTIC
                and self.h_star_estimate is None):
            raise InvalidConfigError(
                "the heuristic schedule needs h_star_estimate")
        if self.h_star_estimate is not None and self.h_star_estimate <= 0:
            raise InvalidConfigError("h_star_estimate must be positive")

    @property
    def c_q(self) -> float:
        return (self.beta * (self.q - 1.0) ** (1.0 - self.q)) ** (1.0 / self.q)

    @property
    def step_power(self) -> float:
        """Regularizer exponent: interpolates q (alpha=0) to p+nu (alpha=1)."""
        return self.alpha * (self.p + self.nu) + (1.0 - self.alpha) * self.q

    def reg_coeff(self, lam: float) -> float:
        """Full multiplier on ||x - xhat||^step_power for a given lambda.

        The coefficient follows from the dual-averaging stationarity
        condition: grad-model + (1/(c_q lambda')) * ||u||^(q-2) u = 0 after
        absorbing the alpha-interpolation, i.e. for p = 1, q = 2, theta2 = 1
        the step is exactly a 1/L gradient step.
        """
        return (self.L ** self.alpha
                / (self.c_q * lam ** (1.0 - self.alpha)
                   * self.theta2 ** self.alpha * self.step_power))


@dataclass
class IterateState:
    i: int
    x: np.ndarray
    z: np.ndarray
    A: float
    a: float
    lam: float
    omega: float
    grad_aggregate: np.ndarray
    x_hat: np.ndarray


@dataclass
class TraceRecord:
    iteration: int
    f_value: float
    omega: float
    lam: float
    A: float
    displacement: float
    wall_seconds: float
    gap_vs_ref: Optional[float] = None


def solve_a_exact(A_prev: float, cfg: EngineConfig,
                  target: Optional[float] = None) -> Tuple[float, float]:
    """Weight increment for the q = p + nu schedule.

    Solves L * a^q = target * c_q * gamma * (A_prev + a)^(q-1) for a > 0;
    then L * lambda = target exactly.
    """
    if target is None:
        target = cfg.theta2
    if not cfg.theta1 <= target <= cfg.theta2:
        raise InvalidConfigError("target must lie in [theta1, theta2]")
    q = cfg.q
    rhs = target * cfg.c_q * cfg.gamma / cfg.L

    def residual(a):
        return q * math.log(a) - (q - 1.0) * math.log(A_prev + a) - math.log(rhs)

    guess = rhs + A_prev
    lo = hi = max(guess, 1e-300)
    for _ in range(400):
        if residual(lo) <= 0:
            break
        lo *= 0.5
    else:
        raise ScalarSolveError("no lower bracket for the weight equation")
    for _ in range(400):
        if residual(hi) >= 0:
            break
        hi *= 2.0
    else:
        raise ScalarSolveError("no upper bracket for the weight equation")
    a = brentq(residual, lo, hi, xtol=1e-300, rtol=8.9e-16, maxiter=200)
    return float(a), target / cfg.L


def heuristic_total_weight_constant(cfg: EngineConfig) -> float:
    """Rate constant of the closed-form A_i schedule for q < p + nu."""
    if cfg.theta2 >= 1.0:
        raise InvalidConfigError(
            "the closed-form schedule constant is undefined for theta2 >= 1")
    p_nu = cfg.p + cfg.nu
    q = cfg.q
    head = q * cfg.theta2 ** cfg.alpha / (1.0 - cfg.theta2 ** (q / (q - 1.0)))
    return (head ** (-(p_nu - q) / q)
            * cfg.theta1 ** (cfg.step_power / q)
            * cfg.gamma ** (p_nu / q)
            * cfg.c_q)


def schedule_heuristic(i: int, cfg: EngineConfig) -> Tuple[float, float, float]:
    """Closed-form (A_i, a_i, lambda_i) for q < p + nu.

    A_i is pinned to its theoretical growth curve, scaled by the supplied
    estimate of h(x*; x0); one tensor step per iteration, no search.
    """
    if i < 1:
        raise ValueError("iteration index starts at 1")
    if cfg.h_star_estimate is None:
        raise InvalidConfigError("h_star_estimate is required")
    c0 = heuristic_total_weight_constant(cfg)
    p_nu = cfg.p + cfg.nu
    q = cfg.q
    growth = ((q + 1.0) * p_nu - q) / q

    def total(k):
        if k == 0:
            return 0.0
        return (c0 / cfg.L
                * cfg.h_star_estimate ** (-(p_nu - q) / q)
                * (k / p_nu) ** growth)

    A = total(i)
    a = A - total(i - 1)
    lam = a ** q / (cfg.c_q * cfg.gamma * A ** (q - 1.0))
    return A, a, lam


def _solve_a_from_lambda(lam: float, A_prev: float, cfg: EngineConfig) -> float:
    """Invert lambda = a^q / (c_q * gamma * (A_prev + a)^(q-1)) for a."""
    q = cfg.q
    rhs = lam * cfg.c_q * cfg.gamma

    def residual(a):
        return q * math.log(a) - (q - 1.0) * math.log(A_prev + a) - math.log(rhs)

    guess = max(rhs + A_prev, 1e-300)
    lo = hi = guess
    for _ in range(600):
        if residual(lo) <= 0:
            break
        lo *= 0.5
    for _ in range(600):
        if residual(hi) >= 0:
            break
        hi *= 2.0
    return float(brentq(residual, lo, hi, xtol=1e-300, rtol=8.9e-16,
                        maxiter=200))


def z_update(grad_aggregate: Vector, A: float, proxy: ProxyFunction,
             composite: Optional[SimpleConvexTerm] = None) -> np.ndarray:
    """Dual-averaging minimizer argmin_x <s, x> + A*l(x) + h(x; x0).

    Closed forms for the shipped Euclidean power proxy; the combination
    l != 0 with q != 2 has no closed form and is rejected.
    """
    s = np.asarray(grad_aggregate, dtype=float)
    q = proxy.order
    x0 = proxy.anchor
    if composite is not None:
        if q != 2.0:
            raise CapabilityError(
                "composite dual-averaging update requires proxy order 2")
        return composite.prox(x0 - s, A)
    if q == 2.0:
        return x0 - s
    snorm = float(np.linalg.norm(s))
    if snorm == 0.0:
        return x0.copy()
    return x0 - s * snorm ** ((2.0 - q) / (q - 1.0))


@dataclass
class RunResult:
    solution: np.ndarray
    best_value: float
    trace: List[TraceRecord]
    states: List[IterateState] = field(default_factory=list)
    indicator_violations: int = 0
    converged_stationary: bool = False


class AcceleratedSolver:
    """One single-threaded engine instance over a read-only oracle."""

    def __init__(self, oracle: ObjectiveOracle, cfg: EngineConfig):
        if oracle.smooth_order < cfg.p:
            raise InvalidConfigError(
                "oracle cannot serve the requested derivative order")
        if (oracle.composite_part is not None and cfg.p >= 2):
            raise InvalidConfigError(
                "composite terms are only supported on the order-1 path")
        self.oracle = oracle
        self.cfg = cfg

    def _tensor_step(self, x_hat: np.ndarray, lam: float) -> StepResult:
        model = build_taylor(self.oracle, x_hat, self.cfg.p)
        spec = StepSpec(center=np.asarray(x_hat, dtype=float), model=model,
                        reg_coeff=self.cfg.reg_coeff(lam),
                        power=self.cfg.step_power)
        return solve_step(spec, krylov_tol=self.cfg.krylov_tol,
                          max_krylov_dim=self.cfg.max_krylov_dim,
                          inner_tol=self.cfg.inner_tol)

    def find_lambda_bisection(self, A_prev: float, x_prev: np.ndarray,
                              z_prev: np.ndarray, seed: float):
        """Probe lambda until the indicator lands in [theta1, theta2].

        Geometric bracket expansion from the seed, then geometric-mean
        bisection; each probe is one tensor step and the accepted step is
        returned so the caller does not re-solve.
        """
        cfg = self.cfg
        exponent = cfg.p + cfg.nu - cfg.q

        def probe(lam):
            a = _solve_a_from_lambda(lam, A_prev, cfg)
            A = A_prev + a
            x_hat = (A_prev / A) * x_prev + (a / A) * z_prev
            step = self._tensor_step(x_hat, lam)
            chi = cfg.L * lam * step.displacement_norm ** exponent
            return a, A, x_hat, step, chi

        lam = seed
        a, A, x_hat, step, chi = probe(lam)
        if cfg.theta1 <= chi <= cfg.theta2:
            return a, lam, A, x_hat, step, chi
        grow = chi < cfg.theta1
        lo = hi = lam
        lo_vals = hi_vals = (a, A, x_hat, step, chi)
        found = False
        for _ in range(60):
            if grow:
                hi = hi * cfg.bracket_growth
                a, A, x_hat, step, chi = probe(hi)
                hi_vals = (a, A, x_hat, step, chi)
                if cfg.theta1 <= chi <= cfg.theta2:
                    return a, hi, A, x_hat, step, chi
                if chi > cfg.theta2:
                    found = True
                    break
                lo = hi
            else:
                lo = lo / cfg.bracket_growth
                a, A, x_hat, step, chi = probe(lo)
                lo_vals = (a, A, x_hat, step, chi)
                if cfg.theta1 <= chi <= cfg.theta2:
                    return a, lo, A, x_hat, step, chi
                if chi < cfg.theta1:
                    found = True
                    break
                hi = lo
        if not found:
            raise BracketingError(
                "indicator never crossed the target band; the iterate is "
                "stationary or the instance is degenerate")
        for _ in range(200):
            mid = math.sqrt(lo * hi)
            a, A, x_hat, step, chi = probe(mid)
            if cfg.theta1 <= chi <= cfg.theta2:
                return a, mid, A, x_hat, step, chi
            if chi < cfg.theta1:
                lo = mid
            else:
                hi = mid
        raise BracketingError("bisection failed to land in [theta1, theta2]")

    def run(self, x0: Vector) -> RunResult:
        cfg = self.cfg
        x0 = np.array(x0, dtype=float)
        proxy = ProxyFunction(anchor=x0, order=cfg.q)
        exponent = cfg.p + cfg.nu - cfg.q

        x = x0.copy()
        z = x0.copy()
        A = 0.0
        s = np.zeros_like(x0)
        trace: List[TraceRecord] = []
        states: List[IterateState] = []
        violations = 0
        stationary = False
        best_value = self.oracle.value(x0)
        best_x = x0.copy()
        lam_seed = cfg.theta2 / (cfg.L * max(1.0, float(np.linalg.norm(
            self.oracle.gradient(x0)))) ** exponent)
        t_start = time.perf_counter()

        for i in range(1, cfg.max_iter + 1):
            if cfg.strategy is CoefficientStrategy.EXACT:
                a, lam = solve_a_exact(A, cfg)
                A_new = A + a
                x_hat = (A / A_new) * x + (a / A_new) * z
                step = self._tensor_step(x_hat, lam)
                omega = cfg.L * lam * step.displacement_norm ** exponent
            elif cfg.strategy is CoefficientStrategy.HEURISTIC:
                A_new, a, lam = schedule_heuristic(i, cfg)
                x_hat = (A / A_new) * x + (a / A_new) * z
                step = self._tensor_step(x_hat, lam)
                omega = cfg.L * lam * step.displacement_norm ** exponent
                if omega > cfg.theta2:
                    violations += 1
                    if cfg.indicator_policy is IndicatorPolicy.BISECT_FALLBACK:
                        try:
                            a, lam, A_new, x_hat, step, omega = \
                                self.find_lambda_bisection(A, x, z, lam)
                        except BracketingError:
                            stationary = True
                            break
                    else:
                        warnings.warn(
                            f"indicator {omega:.4f} above theta2 at "
                            f"iteration {i}; continuing",
                            RuntimeWarning, stacklevel=2)
            else:
                try:
                    a, lam, A_new, x_hat, step, omega = \
                        self.find_lambda_bisection(A, x, z, lam_seed)
                except BracketingError:
                    stationary = True
                    break
                lam_seed = lam

            x = step.x_new
            A = A_new
            s = s + a * self.oracle.gradient(x)
            z = z_update(s, A, proxy, self.oracle.composite_part)
            f_x = self.oracle.value(x)
            if f_x < best_value:
                best_value = f_x
                best_x = x.copy()
            wall = time.perf_counter() - t_start
            gap = None if cfg.f_ref is None else f_x - cfg.f_ref
            trace.append(TraceRecord(iteration=i, f_value=f_x, omega=omega,
                                     lam=lam, A=A,
                                     displacement=step.displacement_norm,
                                     wall_seconds=wall, gap_vs_ref=gap))
            states.append(IterateState(i=i, x=x.copy(), z=z.copy(), A=A, a=a,
                                       lam=lam, omega=omega,
                                       grad_aggregate=s.copy(),
                                       x_hat=np.asarray(x_hat, dtype=float)))
            if (step.displacement_norm <= 1e-15 * (1.0 + float(np.linalg.norm(x)))
                    and float(np.linalg.norm(self.oracle.gradient(x))) <= 1e-14):
                stationary = True
                break
            if (cfg.stop_gap is not None and cfg.f_ref is not None
                    and best_value - cfg.f_ref <= cfg.stop_gap):
                break

        solution = best_x if trace else x0
        return RunResult(solution=solution, best_value=best_value,
                         trace=trace, states=states,
                         indicator_violations=violations,
                         converged_stationary=stationary)


def run(oracle: ObjectiveOracle, cfg: EngineConfig, x0: Vector) -> RunResult:
    """Convenience wrapper: build a solver and run it from x0."""
    return AcceleratedSolver(oracle, cfg).run(x0)


def estimate_h_star(oracle: ObjectiveOracle, cfg: EngineConfig, x0: Vector,
                    pilot_iters: int = 50) -> float:
    """Pilot estimate of h(x*; x0) for the closed-form schedule.

    Runs the q = p + nu instance for a few iterations and uses its final
    iterate as the minimizer proxy under the target config's proxy order.
    """
    import dataclasses
    pilot_cfg = dataclasses.replace(
        cfg, q=float(cfg.p) + cfg.nu, strategy=CoefficientStrategy.EXACT,
        theta1=1.0, theta2=1.0, h_star_estimate=None, gamma=None, beta=None,
        max_iter=pilot_iters, stop_gap=None)
    result = run(oracle, pilot_cfg, x0)
    r = float(np.linalg.norm(result.solution - np.asarray(x0, dtype=float)))
    return max(r ** cfg.q / cfg.q, 1e-12)
