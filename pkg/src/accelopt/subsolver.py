"""Per-iteration regularized model minimization (the "tensor step").

Given an order-1 or order-2 Taylor model around a center and a power
regularizer reg_coeff * ||x - center||^power, the routines here return the
global minimizer for the regimes the engine needs:

  * order 1, power 2       -> closed-form proximal gradient step
  * order 2, power 3       -> cubic-regularized Newton step, either via a
                              dense eigendecomposition (small d) or a
                              Krylov/Lanczos projection (matrix-free)
  * order 2, power in (2,3] -> damped Newton on the regularized model

All solvers assume the Euclidean norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import CapabilityError, InnerSolverError, WrongRegimeError
from .oracle import SimpleConvexTerm, Vector
from .taylor import TaylorModel

EXACT_SOLVER_DIM_CAP = 64


@dataclass(frozen=True)
class StepSpec:
    """One tensor-step instance: model, center, and assembled regularizer.

    reg_coeff is the full multiplier on ||x - center||^power; the caller
    owns the coefficient algebra that produced it.
    """
    center: np.ndarray
    model: TaylorModel
    reg_coeff: float
    power: float
    composite_part: Optional[SimpleConvexTerm] = None

    def __post_init__(self):
        if self.reg_coeff <= 0:
            raise ValueError("reg_coeff must be positive")
        if self.power < 2:
            raise ValueError("regularizer power must be >= 2")

    @property
    def composite(self) -> Optional[SimpleConvexTerm]:
        return self.composite_part or self.model.composite_part


@dataclass
class StepResult:
    x_new: np.ndarray
    displacement_norm: float
    stationarity_residual: float
    inner_iterations: int
    converged: bool = True


def regularized_model_value(spec: StepSpec, x: Vector) -> float:
    u = np.asarray(x, dtype=float) - spec.center
    val = spec.model.smooth_evaluate(x)
    val += spec.reg_coeff * float(np.linalg.norm(u)) ** spec.power
    comp = spec.composite
    if comp is not None:
        val += comp.value(x)
    return val


def prox_gradient_step(spec: StepSpec) -> StepResult:
    """Closed-form minimizer for the order-1 model with quadratic regularizer.

    The regularizer reg_coeff * ||x - c||^2 implies step size 1/(2*reg_coeff).
    """
    if spec.model.order != 1 or spec.power != 2:
        raise WrongRegimeError(
            "prox_gradient_step requires an order-1 model with power 2")
    t = 1.0 / (2.0 * spec.reg_coeff)
    g = spec.model.smooth_gradient(spec.center)
    comp = spec.composite
    y = spec.center - t * g
    x_new = comp.prox(y, t) if comp is not None else y
    u = x_new - spec.center
    if comp is None:
        residual = float(np.linalg.norm(g + 2.0 * spec.reg_coeff * u))
    else:
        # prox fixed-point residual of the regularized composite model
        inner_grad = g + 2.0 * spec.reg_coeff * u
        residual = float(np.linalg.norm(
            x_new - comp.prox(x_new - t * inner_grad, t)))
    return StepResult(x_new=x_new, displacement_norm=float(np.linalg.norm(u)),
                      stationarity_residual=residual, inner_iterations=1)


def _cubic_minimize_eig(eigvals: np.ndarray, coeffs: np.ndarray,
                        M: float) -> np.ndarray:
    """Minimize <c,y> + 1/2 y^T diag(eigvals) y + M ||y||^3 in the eigenbasis.

    Solves the scalar secular equation ||y(r)|| = r with
    y_j(r) = -c_j / (eigvals_j + 3 M r), handling the degenerate branch
    where the leading eigenspace carries no gradient component.
    """
    lam_min = float(eigvals[0])
    r_lo = max(0.0, -lam_min / (3.0 * M))

    def norm_at(r):
        denom = eigvals + 3.0 * M * r
        with np.errstate(divide="ignore"):
            y = -coeffs / denom
        return float(np.linalg.norm(y))

    def solution_at(r):
        return -coeffs / (eigvals + 3.0 * M * r)

    if np.linalg.norm(coeffs) == 0.0:
        if lam_min >= 0.0:
            return np.zeros_like(coeffs)
        # pure negative curvature: walk the leading eigenvector to radius r_lo
        y = np.zeros_like(coeffs)
        y[0] = r_lo
        return y

    # interior branch: residual n(r) - r is decreasing, bracket then solve
    tiny = np.finfo(float).tiny
    hard_mask = np.abs(eigvals - lam_min) <= 1e-12 * max(1.0, abs(lam_min))
    grad_on_leading = float(np.linalg.norm(coeffs[hard_mask]))

    if r_lo > 0.0 and grad_on_leading <= 1e-14 * np.linalg.norm(coeffs):
        # leading eigenspace unexcited: check whether the interior root exists
        free = ~hard_mask
        denom = eigvals[free] + 3.0 * M * r_lo
        n_lo = float(np.linalg.norm(-coeffs[free] / denom)) if free.any() else 0.0
        if n_lo <= r_lo:
            # boundary solution plus eigenvector correction to radius r_lo
            y = np.zeros_like(coeffs)
            y[free] = -coeffs[free] / denom
            gap = r_lo ** 2 - n_lo ** 2
            idx = int(np.argmax(hard_mask))
            y[idx] = np.sqrt(max(gap, 0.0))
            return y

    lo = r_lo + tiny if r_lo > 0 else 0.0
    # expand upper end until the residual turns negative
    hi = max(np.sqrt(np.linalg.norm(coeffs) / (3.0 * M)), r_lo + 1.0)
    for _ in range(200):
        if norm_at(hi) < hi:
            break
        hi *= 2.0
    f = lambda r: norm_at(r) - r
    lo_probe = max(lo, 1e-300)
    # ensure sign change; at lo the residual is positive (possibly +inf)
    r_star = brentq(f, lo_probe, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    return solution_at(r_star)


def cubic_step_exact(spec: StepSpec) -> StepResult:
    """Globally minimize the order-2 model plus a cubic regularizer.

    Dense path: eigendecompose the model Hessian and solve the secular
    equation. Requires l == 0 and small dimension.
    """
    _require_cubic_regime(spec)
    d = len(spec.center)
    if d > EXACT_SOLVER_DIM_CAP:
        raise CapabilityError(
            f"exact cubic solver capped at d <= {EXACT_SOLVER_DIM_CAP}")
    g = spec.model.smooth_gradient(spec.center)
    H = _dense_hessian(spec.model, d)
    eigvals, V = np.linalg.eigh(H)
    coeffs = V.T @ g
    y = _cubic_minimize_eig(eigvals, coeffs, spec.reg_coeff)
    u = V @ y
    x_new = spec.center + u
    residual = _cubic_residual(g, H @ u, u, spec.reg_coeff)
    return StepResult(x_new=x_new, displacement_norm=float(np.linalg.norm(u)),
                      stationarity_residual=residual, inner_iterations=1)


def cubic_step_krylov(spec: StepSpec, max_krylov_dim: int = 200,
                      tol: float = 1e-10) -> StepResult:
    """Matrix-free cubic step via Lanczos tridiagonalization.

    Builds a Krylov basis from the model gradient, solves the projected
    cubic subproblem with the dense machinery on the tridiagonal block,
    and lifts back. The lifted stationarity residual is |beta_k * y_k|
    by the Lanczos relation, so termination is cheap.
    """
    _require_cubic_regime(spec)
    M = spec.reg_coeff
    g = spec.model.smooth_gradient(spec.center)
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return StepResult(x_new=spec.center.copy(), displacement_norm=0.0,
                          stationarity_residual=0.0, inner_iterations=0)
    hv = spec.model.hess_vec_at_center
    d = len(spec.center)
    cap = min(max_krylov_dim, d)

    V = np.zeros((d, cap))
    alphas = np.zeros(cap)
    betas = np.zeros(cap)
    V[:, 0] = g / gnorm
    y = np.array([0.0])
    k = 0
    breakdown = False
    for k in range(cap):
        w = hv(V[:, k])
        alphas[k] = float(V[:, k] @ w)
        w -= alphas[k] * V[:, k]
        if k > 0:
            w -= betas[k - 1] * V[:, k - 1]
        # full reorthogonalization for numerical hygiene at desk scale
        w -= V[:, :k + 1] @ (V[:, :k + 1].T @ w)
        beta = float(np.linalg.norm(w))
        T = np.diag(alphas[:k + 1])
        if k > 0:
            off = betas[:k]
            T += np.diag(off, 1) + np.diag(off, -1)
        eigvals, Q = np.linalg.eigh(T)
        c = Q.T @ (gnorm * np.eye(k + 1)[:, 0])
        y = Q @ _cubic_minimize_eig(eigvals, c, M)
        lifted_residual = abs(beta * y[k])
        if beta <= 1e-14 * gnorm:
            breakdown = True
            break
        if lifted_residual < tol * (1.0 + gnorm):
            break
        if k + 1 < cap:
            betas[k] = beta
            V[:, k + 1] = w / beta
    u = V[:, :len(y)] @ y
    x_new = spec.center + u
    residual = _cubic_residual(g, _apply_hess(spec.model, u), u, M)
    return StepResult(x_new=x_new, displacement_norm=float(np.linalg.norm(u)),
                      stationarity_residual=residual,
                      inner_iterations=k + 1,
                      converged=True if breakdown else residual <= tol * (1.0 + gnorm) * 10)


def power_step_generic(spec: StepSpec, inner_tol: float = 1e-10,
                       max_iter: int = 200) -> StepResult:
    """Damped Newton for the order-2 model with a fractional-power regularizer.

    Covers power in (2, 3] (and degrades gracefully to 2). The regularizer
    Hessian is M*s*||u||^{s-4} ((s-2) u u^T + ||u||^2 I); the u = 0
    singularity is sidestepped by a gradient-descent first step.
    """
    if spec.model.order != 2:
        raise WrongRegimeError("power_step_generic requires an order-2 model")
    if spec.composite is not None:
        raise CapabilityError(
            "composite terms are unsupported on the order-2 path")
    s = spec.power
    M = spec.reg_coeff
    g = spec.model.smooth_gradient(spec.center)
    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return StepResult(x_new=spec.center.copy(), displacement_norm=0.0,
                          stationarity_residual=0.0, inner_iterations=0)
    d = len(spec.center)
    H = _dense_hessian(spec.model, d)

    def grad_at(u):
        un = float(np.linalg.norm(u))
        reg = M * s * un ** (s - 2.0) * u if un > 0 else np.zeros_like(u)
        return g + H @ u + reg

    def value_at(u):
        un = float(np.linalg.norm(u))
        return float(g @ u) + 0.5 * float(u @ (H @ u)) + M * un ** s

    # gradient first step off the singular origin
    u = np.zeros(d)
    t = 1.0
    base = value_at(u)
    step_dir = -g
    for _ in range(60):
        cand = u + t * step_dir
        if value_at(cand) < base:
            u = cand
            break
        t *= 0.5

    F = grad_at(u)
    it = 0
    for it in range(1, max_iter + 1):
        res = float(np.linalg.norm(F))
        if res <= inner_tol * (1.0 + gnorm):
            break
        un = float(np.linalg.norm(u))
        J = H.copy()
        if un > 0:
            scale = M * s * un ** (s - 4.0)
            J += scale * ((s - 2.0) * np.outer(u, u) + un ** 2 * np.eye(d))
        try:
            direction = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            direction = -F
        if float(direction @ F) >= 0:
            direction = -F
        # Armijo backtracking on the regularized model value
        t = 1.0
        cur = value_at(u)
        slope = float(F @ direction)
        accepted = False
        for _ in range(60):
            cand = u + t * direction
            if value_at(cand) <= cur + 1e-4 * t * slope:
                u = cand
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        F = grad_at(u)
    residual = float(np.linalg.norm(F))
    x_new = spec.center + u
    result = StepResult(x_new=x_new, displacement_norm=float(np.linalg.norm(u)),
                        stationarity_residual=residual, inner_iterations=it,
                        converged=residual <= inner_tol * (1.0 + gnorm))
    if not result.converged:
        raise InnerSolverError(
            f"damped Newton stalled at residual {residual:.3e}", best=result)
    return result


def solve_step(spec: StepSpec, krylov_tol: float = 1e-10,
               max_krylov_dim: int = 200,
               inner_tol: float = 1e-10) -> StepResult:
    """Dispatch a StepSpec to the matching solver."""
    if spec.model.order == 1:
        return prox_gradient_step(spec)
    if spec.power == 3.0:
        if len(spec.center) <= EXACT_SOLVER_DIM_CAP:
            return cubic_step_exact(spec)
        return cubic_step_krylov(spec, max_krylov_dim=max_krylov_dim,
                                 tol=krylov_tol)
    return power_step_generic(spec, inner_tol=inner_tol)


def _require_cubic_regime(spec: StepSpec):
    if spec.model.order != 2 or spec.power != 3.0:
        raise WrongRegimeError(
            "cubic solver requires an order-2 model with power 3")
    if spec.composite is not None:
        raise CapabilityError(
            "composite terms are unsupported on the order-2 path")
    if spec.model.hess_vec_at_center is None:
        raise CapabilityError("model carries no Hessian operator")


def _dense_hessian(model: TaylorModel, d: int) -> np.ndarray:
    H = np.empty((d, d))
    e = np.zeros(d)
    for j in range(d):
        e[j] = 1.0
        H[:, j] = model.hess_vec_at_center(e)
        e[j] = 0.0
    return 0.5 * (H + H.T)


def _apply_hess(model: TaylorModel, u: np.ndarray) -> np.ndarray:
    return model.hess_vec_at_center(u)


def _cubic_residual(g, Hu, u, M) -> float:
    r = float(np.linalg.norm(u))
    return float(np.linalg.norm(g + Hu + 3.0 * M * r * u))
