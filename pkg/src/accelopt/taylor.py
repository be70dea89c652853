"""Local models of the smooth part: linear lower bound and Taylor expansion.

Both models carry the nonsmooth composite term unlinearized. The Taylor
model is the objective of the per-iteration tensor step; the lower model
feeds the dual-averaging update.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import UnsupportedOrderError
from .oracle import ObjectiveOracle, SimpleConvexTerm, Vector


class TaylorModel:
    """Order-1 or order-2 expansion of g around a center, plus l.

    Immutable after construction; safe to share across threads.
    """

    def __init__(self, center: Vector, order: int, g_at_center: float,
                 grad_at_center: Vector, hess_vec_at_center=None,
                 composite_part: Optional[SimpleConvexTerm] = None):
        if order not in (1, 2):
            raise UnsupportedOrderError(f"order {order} models are not materialized")
        if order == 2 and hess_vec_at_center is None:
            raise ValueError("order-2 model requires a Hessian-vector operator")
        self.center = np.array(center, dtype=float)
        self.order = order
        self.g_at_center = float(g_at_center)
        self.grad_at_center = np.array(grad_at_center, dtype=float)
        self.hess_vec_at_center = hess_vec_at_center
        self.composite_part = composite_part

    def smooth_evaluate(self, x: Vector) -> float:
        """Polynomial part only, without the composite term."""
        u = np.asarray(x, dtype=float) - self.center
        val = self.g_at_center + float(self.grad_at_center @ u)
        if self.order == 2:
            val += 0.5 * float(u @ self.hess_vec_at_center(u))
        return val

    def smooth_gradient(self, x: Vector) -> Vector:
        u = np.asarray(x, dtype=float) - self.center
        g = self.grad_at_center.copy()
        if self.order == 2:
            g += self.hess_vec_at_center(u)
        return g

    def evaluate(self, x: Vector) -> float:
        val = self.smooth_evaluate(x)
        if self.composite_part is not None:
            val += self.composite_part.value(x)
        return val


class LowerModel:
    """Linearization of g plus the untouched composite term.

    For convex g this bounds f from below everywhere.
    """

    def __init__(self, center: Vector, g_at_center: float,
                 grad_at_center: Vector,
                 composite_part: Optional[SimpleConvexTerm] = None):
        self.center = np.array(center, dtype=float)
        self.g_at_center = float(g_at_center)
        self.grad_at_center = np.array(grad_at_center, dtype=float)
        self.composite_part = composite_part

    def evaluate(self, x: Vector) -> float:
        u = np.asarray(x, dtype=float) - self.center
        val = self.g_at_center + float(self.grad_at_center @ u)
        if self.composite_part is not None:
            val += self.composite_part.value(x)
        return val


def build_taylor(oracle: ObjectiveOracle, y: Vector, p: int) -> TaylorModel:
    """Expand the smooth part of the oracle around y to order p."""
    if p > oracle.smooth_order:
        raise UnsupportedOrderError(
            f"order {p} requested from an order-{oracle.smooth_order} oracle")
    y = np.array(y, dtype=float)
    hv = None
    if p >= 2:
        hv = lambda v: oracle.hess_vec(y, v)
    return TaylorModel(center=y, order=p,
                       g_at_center=oracle.smooth_value(y),
                       grad_at_center=oracle.gradient(y),
                       hess_vec_at_center=hv,
                       composite_part=oracle.composite_part)


def build_lower(oracle: ObjectiveOracle, y: Vector) -> LowerModel:
    y = np.array(y, dtype=float)
    return LowerModel(center=y, g_at_center=oracle.smooth_value(y),
                      grad_at_center=oracle.gradient(y),
                      composite_part=oracle.composite_part)


def model_error_bounds(oracle: ObjectiveOracle, y: Vector, x: Vector,
                       p: int, nu: float, L: float):
    """Measured Taylor-model gaps and their Hölder bounds at (x, y).

    Returns (value_gap, grad_gap, value_bound, grad_bound); the caller
    asserts gap <= bound. The gradient gap ignores the composite term.
    """
    if L <= 0:
        raise ValueError("L must be positive")
    if not 0.0 <= nu <= 1.0:
        raise ValueError("nu must lie in [0, 1]")
    model = build_taylor(oracle, y, p)
    x = np.asarray(x, dtype=float)
    r = float(np.linalg.norm(x - np.asarray(y, dtype=float)))
    value_gap = abs(oracle.smooth_value(x) + oracle.composite_value(x)
                    - model.evaluate(x))
    grad_gap = float(np.linalg.norm(oracle.gradient(x)
                                    - model.smooth_gradient(x)))
    value_bound = (L / p) * r ** (p + nu)
    grad_bound = L * r ** (p + nu - 1) if r > 0 else 0.0
    return value_gap, grad_gap, value_bound, grad_bound


def logistic_smoothness_constant(rows: np.ndarray, p_norm: float,
                                 nu: float) -> float:
    """Hölder constant of the logistic-loss Hessian from the design matrix.

    rows is the n x d matrix of samples. Only p_norm = 2 ships a computed
    operator norm (spectral); smaller p_norm requires a user-supplied
    constant since general l_p operator norms are intractable.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.size == 0:
        raise ValueError("empty dataset")
    if not 1.0 <= p_norm <= 2.0:
        raise ValueError("p_norm must lie in [1, 2]")
    if not 0.0 <= nu <= 1.0:
        raise ValueError("nu must lie in [0, 1]")
    if p_norm != 2.0:
        raise NotImplementedError(
            "operator norm for p_norm < 2 must be supplied by the caller")
    n = rows.shape[0]
    b = rows.T @ rows / n
    top = float(np.linalg.eigvalsh(b)[-1])
    if nu == 0.0:
        return top
    max_row = float(np.max(np.linalg.norm(rows, axis=1)))
    return top * max_row ** nu
