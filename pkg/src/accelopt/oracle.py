"""Composite-objective interface f = g + l and derivative checkers.

An objective is split into a smooth part g (value, gradient, optional
Hessian-vector products) and an optional simple convex part l accessed
through its prox. Oracles hold no mutable state, so concurrent read-only
evaluation is safe.
"""

from __future__ import annotations

from typing import Callable, Optional

import numpy as np

from .errors import EvaluationError, UnsupportedOrderError

Vector = np.ndarray

_EPS = np.finfo(float).eps


class SimpleConvexTerm:
    """Simple (prox-computable) convex term l(x)."""

    def __init__(self, value: Callable[[Vector], float],
                 prox: Callable[[Vector, float], Vector]):
        self._value = value
        self._prox = prox

    def value(self, x: Vector) -> float:
        return float(self._value(x))

    def prox(self, y: Vector, t: float) -> Vector:
        """argmin_x { l(x) + (1/(2t))||x - y||^2 }, t > 0."""
        if t <= 0:
            raise ValueError("prox step t must be positive")
        return np.asarray(self._prox(y, t), dtype=float)


def zero_term() -> SimpleConvexTerm:
    """The l == 0 term; its prox is the identity."""
    return SimpleConvexTerm(lambda x: 0.0, lambda y, t: y)


def l1_term(weight: float) -> SimpleConvexTerm:
    """l(x) = weight * ||x||_1 with the soft-threshold prox."""
    if weight < 0:
        raise ValueError("l1 weight must be nonnegative")

    def prox(y, t):
        return np.sign(y) * np.maximum(np.abs(y) - weight * t, 0.0)

    return SimpleConvexTerm(lambda x: weight * float(np.abs(x).sum()), prox)


class ObjectiveOracle:
    """Composite objective f = g + l with derivative access for g.

    smooth_order is the highest derivative order served (1 or 2 for
    shipped problems). hess_vec is required when smooth_order >= 2.
    """

    def __init__(self, dim: int, smooth_order: int,
                 smooth_value: Callable[[Vector], float],
                 gradient: Callable[[Vector], Vector],
                 hess_vec: Optional[Callable[[Vector, Vector], Vector]] = None,
                 composite_part: Optional[SimpleConvexTerm] = None):
        if dim < 1:
            raise ValueError("dim must be positive")
        if smooth_order < 1:
            raise ValueError("smooth_order must be positive")
        if smooth_order >= 2 and hess_vec is None:
            raise ValueError("smooth_order >= 2 requires hess_vec")
        self.dim = dim
        self.smooth_order = smooth_order
        self._smooth_value = smooth_value
        self._gradient = gradient
        self._hess_vec = hess_vec
        self.composite_part = composite_part

    def smooth_value(self, x: Vector) -> float:
        return float(self._smooth_value(np.asarray(x, dtype=float)))

    def gradient(self, x: Vector) -> Vector:
        return np.asarray(self._gradient(np.asarray(x, dtype=float)),
                          dtype=float)

    def hess_vec(self, x: Vector, v: Vector) -> Vector:
        if self._hess_vec is None:
            raise UnsupportedOrderError(
                "oracle serves first derivatives only")
        return np.asarray(self._hess_vec(np.asarray(x, dtype=float),
                                         np.asarray(v, dtype=float)),
                          dtype=float)

    def composite_value(self, x: Vector) -> float:
        if self.composite_part is None:
            return 0.0
        return self.composite_part.value(x)

    def value(self, x: Vector) -> float:
        return self.smooth_value(x) + self.composite_value(x)

    def dense_hessian(self, x: Vector) -> np.ndarray:
        """Assemble the dense Hessian column by column via hess_vec.

        Intended only for the exact small-dimension subsolver.
        """
        h = np.empty((self.dim, self.dim))
        e = np.zeros(self.dim)
        for j in range(self.dim):
            e[j] = 1.0
            h[:, j] = self.hess_vec(x, e)
            e[j] = 0.0
        return 0.5 * (h + h.T)


def _gradient_fd(oracle: ObjectiveOracle, x: Vector) -> Vector:
    h = max(1.0, float(np.abs(x).max())) * _EPS ** (1.0 / 3.0)
    g = np.empty_like(np.asarray(x, dtype=float))
    e = np.zeros(len(x))
    for j in range(len(x)):
        e[j] = h
        g[j] = (oracle.smooth_value(x + e) - oracle.smooth_value(x - e)) / (2 * h)
        e[j] = 0.0
    return g


def check_gradient(oracle: ObjectiveOracle, x: Vector, tol: float) -> bool:
    """Compare the analytic gradient against central differences.

    Returns True iff the max relative coordinate error is below tol.
    Non-finite oracle output raises EvaluationError instead.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    x = np.asarray(x, dtype=float)
    if oracle.dim != len(x):
        raise ValueError("dimension mismatch")
    analytic = oracle.gradient(x)
    if not np.all(np.isfinite(analytic)) or not np.isfinite(oracle.smooth_value(x)):
        raise EvaluationError("non-finite oracle output at x")
    numeric = _gradient_fd(oracle, x)
    if not np.all(np.isfinite(numeric)):
        raise EvaluationError("non-finite finite-difference evaluation near x")
    scale = np.maximum(1.0, np.abs(analytic))
    return bool(np.max(np.abs(analytic - numeric) / scale) < tol)


def check_hess_vec(oracle: ObjectiveOracle, x: Vector, v: Vector,
                   tol: float) -> bool:
    """Compare hess_vec against a directional finite difference of the gradient."""
    if oracle.smooth_order < 2:
        raise UnsupportedOrderError("oracle serves first derivatives only")
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    analytic = oracle.hess_vec(x, v)
    if not np.all(np.isfinite(analytic)):
        raise EvaluationError("non-finite hess_vec output at x")
    h = max(1.0, float(np.abs(x).max())) * _EPS ** 0.5
    numeric = (oracle.gradient(x + h * v) - oracle.gradient(x - h * v)) / (2 * h)
    denom = max(1.0, float(np.linalg.norm(analytic)))
    return bool(np.linalg.norm(analytic - numeric) / denom < tol)
