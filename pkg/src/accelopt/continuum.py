"""Demo integrator for the continuous-time accelerated dynamics.

The coupled system is xdot = (a_t / A_t) (z_t - x_t) with the mirror
trajectory z_t = x0 - integral_0^t a_tau grad g(x_tau) dtau, valid for the
Euclidean half-squared-norm proxy where the mirror map is linear. The
gradient integral is carried as part of the RK4 state, so each step costs
O(1) oracle calls. Integration starts at t0 = dt since the weight ratio
a_t / A_t is singular at t = 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .errors import IntegrationBlowupError, InvalidConfigError
from .oracle import ObjectiveOracle


@dataclass(frozen=True)
class DynamicsSpec:
    """Weight schedule, oracle (l == 0), and integration window."""
    weight: Callable[[float], float]          # a_t
    total_weight: Callable[[float], float]    # A_t = integral of a
    oracle: ObjectiveOracle
    x0: np.ndarray
    horizon: float
    dt: float

    def __post_init__(self):
        if self.dt <= 0 or self.horizon <= self.dt:
            raise InvalidConfigError("need 0 < dt < horizon")
        if self.oracle.composite_part is not None:
            raise InvalidConfigError("dynamics require l == 0")

    def check_schedule_consistency(self, times=None, tol: float = 1e-6) -> bool:
        """Spot-check dA/dt = a_t by central differences."""
        if times is None:
            times = np.linspace(self.dt, self.horizon, 7)
        h = 1e-6 * max(1.0, self.horizon)
        for t in times:
            da = (self.total_weight(t + h) - self.total_weight(t - h)) / (2 * h)
            if abs(da - self.weight(t)) > tol * (1.0 + abs(self.weight(t))):
                return False
        return True


def power_weight_schedule(p: int):
    """The A_t = t^p / p^2 family; returns (a_t, A_t) callables."""
    if p < 2:
        raise InvalidConfigError("schedule exponent must be >= 2")
    return (lambda t: t ** (p - 1) / p, lambda t: t ** p / p ** 2)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray          # (n_steps, d) positions x_t
    mirror_states: np.ndarray   # (n_steps, d) positions z_t
    spec: DynamicsSpec

    def final_state(self) -> np.ndarray:
        return self.states[-1]


def integrate(spec: DynamicsSpec) -> Trajectory:
    """Classical RK4 on the coupled (x, gradient-integral) system."""
    oracle = spec.oracle
    x0 = np.array(spec.x0, dtype=float)
    d = len(x0)
    dt = spec.dt

    def rhs(t, state):
        x = state[:d]
        s = state[d:]
        z = x0 - s
        ratio = spec.weight(t) / spec.total_weight(t)
        dx = ratio * (z - x)
        ds = spec.weight(t) * oracle.gradient(x)
        return np.concatenate([dx, ds])

    n_steps = int(np.floor((spec.horizon - dt) / dt)) + 1
    times = dt + dt * np.arange(n_steps + 1)
    states = np.empty((n_steps + 1, d))
    mirrors = np.empty((n_steps + 1, d))
    y = np.concatenate([x0, np.zeros(d)])
    states[0] = x0
    mirrors[0] = x0
    for k in range(n_steps):
        t = times[k]
        k1 = rhs(t, y)
        k2 = rhs(t + dt / 2, y + dt / 2 * k1)
        k3 = rhs(t + dt / 2, y + dt / 2 * k2)
        k4 = rhs(t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationBlowupError(
                "state became non-finite", last_time=float(times[k]))
        states[k + 1] = y[:d]
        mirrors[k + 1] = x0 - y[d:]
    return Trajectory(times=times, states=states, mirror_states=mirrors,
                      spec=spec)


def ode_residual(trajectory: Trajectory, t_min: float = 0.0) -> float:
    """Max norm of the second-order ODE residual over interior grid points.

    The dynamics eliminate z; with the Euclidean proxy the position obeys
    xddot + (a/A) (d(A/a)/dt + 1) xdot + (a^2 / A) grad f(x) = 0.
    Derivatives are approximated by central differences, so the residual
    scales as O(dt^2) at any fixed t > 0. The a/A coefficient is singular
    at t = 0, so pass t_min > 0 to exclude the initial transient when
    checking the convergence order.
    """
    spec = trajectory.spec
    t = trajectory.times
    xs = trajectory.states
    dt = float(t[1] - t[0])
    worst = 0.0
    h = 1e-6 * max(1.0, float(t[-1]))
    for k in range(1, len(t) - 1):
        if t[k] < t_min:
            continue
        xdot = (xs[k + 1] - xs[k - 1]) / (2 * dt)
        xddot = (xs[k + 1] - 2 * xs[k] + xs[k - 1]) / dt ** 2
        a = spec.weight(t[k])
        A = spec.total_weight(t[k])
        ratio_deriv = ((spec.total_weight(t[k] + h) / spec.weight(t[k] + h)
                        - spec.total_weight(t[k] - h) / spec.weight(t[k] - h))
                       / (2 * h))
        coeff = (a / A) * (ratio_deriv + 1.0)
        res = xddot + coeff * xdot + (a ** 2 / A) * spec.oracle.gradient(xs[k])
        worst = max(worst, float(np.linalg.norm(res)))
    return worst
