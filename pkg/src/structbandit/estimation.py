"""Norm-regularized least squares.

Solves ``min_theta (1/t) ||y - X theta||^2 + lam * penalty(theta)`` for all
four structures with accelerated proximal gradient (FISTA with adaptive
restart), plus a closed form for ridge and a brute-force grid oracle used by
the tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .exceptions import InputError
from .structure import NormKind, StructureModel, eval_norm, penalty, prox

__all__ = [
    "RegressionProblem",
    "SolverConfig",
    "Estimate",
    "objective_value",
    "solve_ridge_closed_form",
    "solve_prox_grad",
    "solve_prox_grad_gram",
    "oracle_grid_solve",
    "lipschitz_constant",
    "smooth_gradient",
]


@dataclass(frozen=True)
class RegressionProblem:
    X: np.ndarray
    y: np.ndarray
    lambda_t: float
    model: StructureModel

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if X.shape[0] < 1:
            raise InputError("need at least one observation")
        if X.shape[0] != y.shape[0]:
            raise InputError(f"X has {X.shape[0]} rows but y has length {y.shape[0]}")
        if X.shape[1] != self.model.p:
            raise InputError(f"X has {X.shape[1]} columns, model expects p={self.model.p}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InputError("X and y must be finite (NaN or inf found)")
        if not np.isfinite(self.lambda_t) or self.lambda_t < 0:
            raise InputError(f"lambda_t must be finite and non-negative, got {self.lambda_t}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def t(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 10000
    rel_tol: float = 1e-8
    step_rule: str = "fixed"  # or "backtracking"

    def __post_init__(self):
        if self.max_iters < 1:
            raise InputError("max_iters must be positive")
        if not 0 < self.rel_tol < 1:
            raise InputError("rel_tol must lie in (0, 1)")
        if self.step_rule not in ("fixed", "backtracking"):
            raise InputError(f"unknown step rule {self.step_rule!r}")


@dataclass(frozen=True)
class Estimate:
    theta_hat: np.ndarray
    iterations: int
    objective: float
    converged: bool


def objective_value(prob: RegressionProblem, theta) -> float:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (prob.model.p,):
        raise InputError(f"theta must have length {prob.model.p}")
    resid = prob.y - prob.X @ theta
    return float(resid @ resid) / prob.t + prob.lambda_t * penalty(prob.model, theta)


def smooth_gradient(prob: RegressionProblem, theta) -> np.ndarray:
    """Gradient ``(2/t) X^T (X theta - y)`` of the data-fit term."""
    return 2.0 / prob.t * (prob.X.T @ (prob.X @ theta - prob.y))


def lipschitz_constant(G: np.ndarray, t: int, v0=None, iters: int = 50, tol: float = 1e-9):
    """Lipschitz constant ``(2/t) sigma_max(G)`` of the smooth gradient.

    Power iteration from ``v0`` (warm start); falls back to an exact
    eigenvalue computation if it has not settled after ``iters`` steps.
    Returns ``(L, v)`` where ``v`` is the final iterate for reuse.
    """
    p = G.shape[0]
    v = np.ones(p) / np.sqrt(p) if v0 is None else np.asarray(v0, dtype=float)
    est = 0.0
    for _ in range(iters):
        w = G @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0, v
        new_est = float(v @ w)
        v = w / norm
        if abs(new_est - est) <= tol * max(new_est, 1e-300):
            return 2.0 / t * float(norm), v
        est = new_est
    return 2.0 / t * float(np.linalg.eigvalsh(G)[-1]), v


def solve_ridge_closed_form(prob: RegressionProblem) -> Estimate:
    """Exact ridge minimizer ``(X^T X + t lam I)^{-1} X^T y``.

    Raises ``numpy.linalg.LinAlgError`` when ``lam == 0`` and ``X`` is rank
    deficient instead of regularizing silently.
    """
    if prob.model.kind is not NormKind.L2:
        raise InputError("closed-form solve only applies to the ridge structure")
    X, y, t = prob.X, prob.y, prob.t
    A = X.T @ X + t * prob.lambda_t * np.eye(prob.model.p)
    if prob.lambda_t == 0 and np.linalg.matrix_rank(X) < prob.model.p:
        raise np.linalg.LinAlgError("singular normal equations: X is rank deficient and lambda_t = 0")
    theta = np.linalg.solve(A, X.T @ y)
    return Estimate(theta, 0, objective_value(prob, theta), True)


def solve_prox_grad_gram(
    model: StructureModel,
    G: np.ndarray,
    b: np.ndarray,
    yy: float,
    t: int,
    lam: float,
    cfg: SolverConfig = SolverConfig(),
    x0=None,
    lipschitz: float | None = None,
) -> Estimate:
    """FISTA on sufficient statistics ``G = X^T X``, ``b = X^T y``, ``yy = y^T y``.

    Momentum is reset whenever an accelerated step would increase the
    objective, and the step is redone from the last accepted iterate, so the
    sequence of accepted objectives is non-increasing.
    """
    inv_t = 1.0 / t

    def objective(x):
        return (x @ (G @ x) - 2.0 * (b @ x) + yy) * inv_t + lam * penalty(model, x)

    L = lipschitz if lipschitz is not None else lipschitz_constant(G, t)[0]
    if L <= 0.0:
        # zero design: the data term is constant, the minimizer is prox(0)
        L = 1.0
    x = np.zeros(model.p) if x0 is None else np.array(x0, dtype=float)
    fx = objective(x)
    yk = x
    tk = 1.0
    backtrack = cfg.step_rule == "backtracking"
    converged = False
    it = 0
    while it < cfg.max_iters:
        it += 1
        Gy = G @ yk
        grad = 2.0 * inv_t * (Gy - b)
        while True:
            step = 1.0 / L
            x_new = prox(model, yk - step * grad, step * lam)
            if not backtrack:
                break
            d = x_new - yk
            f_y = (yk @ Gy - 2.0 * (b @ yk) + yy) * inv_t
            f_new = (x_new @ (G @ x_new) - 2.0 * (b @ x_new) + yy) * inv_t
            if f_new <= f_y + grad @ d + 0.5 * L * (d @ d) + 1e-15 * abs(f_y):
                break
            L *= 2.0
        f_new = objective(x_new)
        if f_new > fx:
            if tk == 1.0:
                # plain proximal step from the accepted iterate did not descend:
                # the objective is flat to machine precision
                converged = True
                break
            tk = 1.0
            yk = x
            continue
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * tk * tk))
        yk = x_new + ((tk - 1.0) / t_next) * (x_new - x)
        decrease = (fx - f_new) / max(abs(f_new), 1e-300)
        x, fx, tk = x_new, f_new, t_next
        if decrease < cfg.rel_tol:
            converged = True
            break
    return Estimate(x, it, float(fx), converged)


def solve_prox_grad(prob: RegressionProblem, cfg: SolverConfig = SolverConfig(), x0=None) -> Estimate:
    X, y = prob.X, prob.y
    G = X.T @ X
    est = solve_prox_grad_gram(prob.model, G, X.T @ y, float(y @ y), prob.t, prob.lambda_t, cfg, x0)
    # report the objective recomputed from residuals, not from the Gram form
    return Estimate(est.theta_hat, est.iterations, objective_value(prob, est.theta_hat), est.converged)


def oracle_grid_solve(prob: RegressionProblem, grid_half_width: float, grid_points: int) -> Estimate:
    """Exhaustive minimizer over the grid ``[-w, w]^p`` (``p <= 3``)."""
    p = prob.model.p
    if p > 3:
        raise InputError("grid oracle supports p <= 3 only")
    if not 2 <= grid_points <= 401:
        raise InputError("grid_points must lie in [2, 401]")
    axis = np.linspace(-grid_half_width, grid_half_width, grid_points)
    best_val, best = np.inf, None
    # chunk over the leading coordinate to bound memory
    lead = axis if p > 1 else [None]
    for first in lead:
        if p == 1:
            pts = axis[:, None]
        else:
            rest = np.array(list(itertools.product(axis, repeat=p - 1)))
            pts = np.column_stack([np.full(len(rest), first), rest])
        resid = prob.y[None, :] - pts @ prob.X.T
        vals = np.einsum("ij,ij->i", resid, resid) / prob.t
        if prob.lambda_t:
            pen = _penalty_rows(prob.model, pts)
            vals = vals + prob.lambda_t * pen
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best = float(vals[k]), pts[k].copy()
    return Estimate(best, grid_points**p, objective_value(prob, best), True)


def _penalty_rows(model: StructureModel, rows: np.ndarray) -> np.ndarray:
    vals = eval_norm(model, rows)
    return vals**2 if model.kind is NormKind.L2 else vals
