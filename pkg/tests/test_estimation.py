import numpy as np
import pytest

from structbandit.estimation import (
    RegressionProblem,
    SolverConfig,
    lipschitz_constant,
    objective_value,
    oracle_grid_solve,
    smooth_gradient,
    solve_prox_grad,
    solve_ridge_closed_form,
)
from structbandit.exceptions import InputError
from structbandit.geometry import ErrorSetSpec, error_set_membership
from structbandit.structure import StructureModel, eval_dual_norm, eval_norm, penalty, prox

from conftest import all_models

TIGHT = SolverConfig(max_iters=100_000, rel_tol=1e-15)


def test_ridge_identity_design():
    y = np.array([0.3, -1.2, 2.0])
    prob = RegressionProblem(np.eye(3), y, 0.0, StructureModel("l2", 3))
    np.testing.assert_allclose(solve_ridge_closed_form(prob).theta_hat, y)


def test_ridge_scalar():
    # minimize (2 - theta)^2 + theta^2 -> theta = 1
    prob = RegressionProblem(np.eye(1), [2.0], 1.0, StructureModel("l2", 1))
    est = solve_ridge_closed_form(prob)
    assert est.theta_hat[0] == pytest.approx(1.0)
    assert est.converged and est.iterations == 0


def test_ridge_dominant_regularization(rng):
    X = rng.standard_normal((20, 5))
    y = rng.standard_normal(20)
    prob = RegressionProblem(X, y, 1e6, StructureModel("l2", 5))
    assert np.linalg.norm(solve_ridge_closed_form(prob).theta_hat) <= 1e-4 * np.linalg.norm(X.T @ y)


def test_ridge_singular_surfaces_error():
    X = np.array([[1.0, 1.0], [2.0, 2.0]])
    prob = RegressionProblem(X, [1.0, 2.0], 0.0, StructureModel("l2", 2))
    with pytest.raises(np.linalg.LinAlgError):
        solve_ridge_closed_form(prob)


def test_lasso_identity_example():
    prob = RegressionProblem(np.eye(2), [1.0, 0.2], 0.3, StructureModel("l1", 2))
    est = solve_prox_grad(prob)
    # per-coordinate optimum: soft(y_i, t * lam / 2)
    np.testing.assert_allclose(est.theta_hat, [0.7, 0.0], atol=1e-6)
    grid = oracle_grid_solve(prob, 1.0, 401)
    np.testing.assert_allclose(grid.theta_hat, est.theta_hat, atol=0.005)


def test_exact_fit_without_regularization(model, rng):
    X = rng.standard_normal((model.p, model.p)) + 3 * np.eye(model.p)
    y = rng.standard_normal(model.p)
    est = solve_prox_grad(RegressionProblem(X, y, 0.0, model), TIGHT)
    np.testing.assert_allclose(est.theta_hat, np.linalg.solve(X, y), atol=1e-6)


def test_prox_grad_matches_ridge_closed_form(rng):
    for _ in range(20):
        p = int(rng.integers(1, 21))
        t = int(rng.integers(1, 40))
        X = rng.standard_normal((t, p))
        y = rng.standard_normal(t)
        prob = RegressionProblem(X, y, float(rng.uniform(0.05, 2.0)), StructureModel("l2", p))
        a = solve_prox_grad(prob, TIGHT).theta_hat
        b = solve_ridge_closed_form(prob).theta_hat
        assert np.linalg.norm(a - b) <= 1e-6


def test_objective_examples():
    m = StructureModel("l1", 1)
    assert objective_value(RegressionProblem([[1.0]], [0.0], 1.0, m), [2.0]) == pytest.approx(6.0)
    prob = RegressionProblem(np.eye(2), [1.0, 2.0], 0.5, StructureModel("l1", 2))
    assert objective_value(prob, np.zeros(2)) == pytest.approx(5.0 / 2)
    exact = RegressionProblem(np.eye(2), [1.0, 2.0], 0.0, StructureModel("l1", 2))
    assert objective_value(exact, [1.0, 2.0]) == 0.0


def test_estimate_objective_is_recomputable(model, rng):
    X = rng.standard_normal((15, model.p))
    prob = RegressionProblem(X, rng.standard_normal(15), 0.2, model)
    est = solve_prox_grad(prob)
    assert est.objective == pytest.approx(objective_value(prob, est.theta_hat), abs=1e-12)


def test_grid_oracle_recovers_scalar_fit():
    prob = RegressionProblem([[1.0]], [0.42], 0.0, StructureModel("l1", 1))
    est = oracle_grid_solve(prob, 1.0, 401)
    assert abs(est.theta_hat[0] - 0.42) <= 2.0 / 400


def test_grid_oracle_rejects_large_p():
    prob = RegressionProblem(np.eye(4), np.ones(4), 0.1, StructureModel("l1", 4))
    with pytest.raises(InputError):
        oracle_grid_solve(prob, 1.0, 11)


def test_grid_oracle_never_worse_than_solver(rng):
    step = 2 * 1.5 / 100
    for kind in ("l1", "l2"):
        for _ in range(5):
            X = rng.standard_normal((4, 2))
            prob = RegressionProblem(X, rng.standard_normal(4), 0.3, StructureModel(kind, 2))
            grid = oracle_grid_solve(prob, 1.5, 101)
            est = solve_prox_grad(prob)
            # Lipschitz bound of the objective over the box times half a grid diagonal
            slack = (np.linalg.norm(2 / 4 * X.T @ X, 2) * 3 + 2 * np.abs(X.T @ prob.y).max() + 1) * step
            assert grid.objective <= est.objective + slack


def test_nan_rejected():
    with pytest.raises(InputError):
        RegressionProblem([[np.nan]], [1.0], 0.1, StructureModel("l1", 1))


def test_gradient_matches_finite_differences(model, rng):
    X = rng.standard_normal((10, model.p))
    prob = RegressionProblem(X, rng.standard_normal(10), 0.0, model)
    theta = rng.standard_normal(model.p)
    g = smooth_gradient(prob, theta)
    h = 1e-6
    fd = np.array([
        (objective_value(prob, theta + h * e) - objective_value(prob, theta - h * e)) / (2 * h)
        for e in np.eye(model.p)
    ])
    np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-8)


def _fixed_point_residual(prob, est):
    L, _ = lipschitz_constant(prob.X.T @ prob.X, prob.t)
    eta = 1.0 / L
    step = prox(prob.model, est.theta_hat - eta * smooth_gradient(prob, est.theta_hat), eta * prob.lambda_t)
    return np.abs(step - est.theta_hat).max()


def test_fixed_point_at_convergence(model, rng):
    X = rng.standard_normal((30, model.p))
    prob = RegressionProblem(X, rng.standard_normal(30), 0.1, model)
    est = solve_prox_grad(prob, TIGHT)
    assert est.converged
    assert _fixed_point_residual(prob, est) <= 1e-6
    # the default objective-decrease tolerance only pins the iterate to ~sqrt(rel_tol)
    loose = solve_prox_grad(prob)
    assert loose.converged
    assert _fixed_point_residual(prob, loose) <= np.sqrt(SolverConfig().rel_tol)


def test_lipschitz_matches_eigenvalue(rng):
    X = rng.standard_normal((50, 8))
    G = X.T @ X
    L, _ = lipschitz_constant(G, 50)
    assert L == pytest.approx(2 / 50 * np.linalg.eigvalsh(G)[-1], rel=1e-6)


def test_backtracking_agrees_with_fixed(model, rng):
    X = rng.standard_normal((25, model.p))
    prob = RegressionProblem(X, rng.standard_normal(25), 0.2, model)
    a = solve_prox_grad(prob, SolverConfig(rel_tol=1e-14, max_iters=50_000))
    b = solve_prox_grad(prob, SolverConfig(rel_tol=1e-14, max_iters=50_000, step_rule="backtracking"))
    assert a.objective == pytest.approx(b.objective, rel=1e-8)


def test_objective_monotone_along_path(model, rng):
    X = rng.standard_normal((20, model.p))
    prob = RegressionProblem(X, rng.standard_normal(20), 0.05, model)
    values = []
    for k in range(1, 60):
        est = solve_prox_grad(prob, SolverConfig(max_iters=k, rel_tol=1e-300))
        values.append(est.objective)
    assert np.all(np.diff(values) <= 1e-12)


def test_regularization_path_monotone(model, rng):
    X = rng.standard_normal((30, model.p))
    y = X @ rng.standard_normal(model.p) + 0.1 * rng.standard_normal(30)
    norms = []
    for lam in np.logspace(-3, 1, 10):
        est = solve_prox_grad(RegressionProblem(X, y, lam, model), TIGHT)
        assert est.converged
        norms.append(eval_norm(model, est.theta_hat))
    assert np.all(np.diff(norms) <= 1e-7)


@pytest.mark.parametrize("kind", ["l1", "group", "nuclear"])
def test_error_set_containment(kind):
    model = all_models()[kind]
    rng = np.random.default_rng(7)
    from structbandit.bandit import make_theta_star

    for i in range(30):
        theta = make_theta_star(model, i)
        t = 40
        X = rng.standard_normal((t, model.p))
        w = rng.uniform(-0.5, 0.5, size=t)
        # lambda at least twice the dual norm of the loss gradient at theta*
        lam = 2.0 * eval_dual_norm(model, 2.0 / t * X.T @ w)
        est = solve_prox_grad(RegressionProblem(X, X @ theta + w, lam, model), TIGHT)
        assert est.converged
        assert error_set_membership(ErrorSetSpec(model, theta), est.theta_hat)
