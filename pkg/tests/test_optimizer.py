import numpy as np
import pytest

from iomlab.core import InvalidInput
from iomlab.optimizer import (
    ConstraintSystem,
    Infeasible,
    Objective,
    SolverSettings,
    max_violation,
    solve,
)


def box_system(a, b, d, bound=1.0):
    return ConstraintSystem(
        a=np.asarray(a, dtype=float).reshape(-1, d),
        b=np.asarray(b, dtype=float),
        lower=np.full(d, -bound),
        upper=np.full(d, bound),
    )


class TestBasics:
    def test_halfspace_feasibility(self):
        system = box_system([[-1.0, 0.0]], [0.0], 2)
        res = solve(system)
        assert res.y[0] >= -1e-8
        assert res.diagnostics.max_violation <= 1e-8

    def test_bound_conflict_infeasible(self):
        system = box_system([[1.0]], [-2.0], 1)
        with pytest.raises(Infeasible):
            solve(system)

    def test_box_projection(self):
        system = ConstraintSystem(
            a=np.zeros((0, 2)), b=np.zeros(0),
            lower=np.array([-1.0, -1.0]), upper=np.array([1.0, 1.0]),
        )
        res = solve(system, Objective.min_squared_distance_to([2.0, 2.0]))
        assert np.allclose(res.y, [1.0, 1.0], atol=1e-6)

    def test_min_norm_feasible_origin_returns_zero(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            d = int(rng.integers(1, 6))
            a = rng.standard_normal((int(rng.integers(1, 8)), d))
            b = rng.uniform(0.1, 1.0, a.shape[0])  # origin strictly feasible
            res = solve(box_system(a, b, d), Objective.min_squared_norm())
            assert np.linalg.norm(res.y, np.inf) <= 1e-6

    def test_feasibility_point_is_interior(self):
        rng = np.random.default_rng(6)
        a = rng.standard_normal((30, 4))
        y0 = rng.uniform(-0.5, 0.5, 4)
        b = a @ y0 + rng.uniform(0.2, 1.0, 30)
        res = solve(box_system(a, b, 4))
        assert res.diagnostics.phase1_margin > 0
        assert np.min(b - a @ res.y) > 0

    def test_malformed_bounds_rejected(self):
        with pytest.raises(InvalidInput):
            ConstraintSystem(a=np.zeros((0, 1)), b=np.zeros(0),
                             lower=np.array([1.0]), upper=np.array([-1.0]))

    def test_nan_rejected(self):
        with pytest.raises(InvalidInput):
            ConstraintSystem(a=np.array([[np.nan]]), b=np.zeros(1),
                             lower=np.array([-1.0]), upper=np.array([1.0]))


class TestVacuousRows:
    def test_zero_row_nonnegative_rhs_dropped(self):
        a = np.array([[0.0, 0.0], [1.0, 0.0]])
        res = solve(box_system(a, [0.0, 0.5], 2))
        assert res.diagnostics.notes.get("vacuous_rows_dropped") == 1
        # margin maximization must not be capped by the vacuous row
        assert res.diagnostics.phase1_margin > 0.1

    def test_zero_row_negative_rhs_certifies_infeasible(self):
        a = np.array([[0.0, 0.0]])
        with pytest.raises(Infeasible):
            solve(box_system(a, [-1e-6], 2))


class TestContract:
    def test_random_feasible_systems_never_infeasible(self):
        # smaller sibling of the 500-instance acceptance property
        rng = np.random.default_rng(12)
        for _ in range(100):
            d = int(rng.integers(1, 10))
            r = int(rng.integers(0, 40))
            a = rng.standard_normal((r, d))
            y0 = rng.uniform(-1, 1, d)
            b = a @ y0 + rng.uniform(0.0, 0.5, r)
            system = box_system(a, b, d)
            res = solve(system)
            assert max_violation(system, res.y) <= 1e-8

    def test_residual_recheck_reported(self):
        rng = np.random.default_rng(13)
        a = rng.standard_normal((50, 6))
        y0 = rng.uniform(-0.8, 0.8, 6)
        b = a @ y0 + rng.uniform(0.05, 0.6, 50)
        system = box_system(a, b, 6)
        for objective in (None, Objective.min_squared_norm(),
                          Objective.min_squared_distance_to(y0)):
            res = solve(system, objective)
            assert res.diagnostics.max_violation <= 1e-8
            assert res.diagnostics.max_violation == max_violation(system, res.y)

    def test_tight_feasible_set_single_point(self):
        # constraints force y ~ y0 exactly: still feasible at tolerance
        rng = np.random.default_rng(14)
        y0 = rng.uniform(-0.5, 0.5, 3)
        a = np.vstack([np.eye(3), -np.eye(3)])
        b = np.concatenate([y0, -y0])
        system = box_system(a, b, 3)
        res = solve(system)
        assert max_violation(system, res.y) <= 1e-8
        assert np.allclose(res.y, y0, atol=1e-6)


class TestAgainstOracles:
    def test_qp_matches_grid_search_2d(self):
        # brute-force grid over the box at step 0.01 can never beat the solver
        rng = np.random.default_rng(15)
        for _ in range(10):
            a = rng.standard_normal((6, 2))
            y0 = rng.uniform(-0.7, 0.7, 2)
            b = a @ y0 + rng.uniform(0.05, 0.5, 6)
            target = rng.uniform(-1.5, 1.5, 2)
            system = box_system(a, b, 2)
            res = solve(system, Objective.min_squared_distance_to(target))

            grid = np.arange(-1.0, 1.0 + 1e-12, 0.01)
            gx, gy = np.meshgrid(grid, grid)
            points = np.column_stack([gx.ravel(), gy.ravel()])
            feas = np.all(points @ a.T <= b + 1e-12, axis=1)
            vals = ((points - target) ** 2).sum(axis=1)
            best_grid = vals[feas].min()
            solver_val = float(((res.y - target) ** 2).sum())
            assert solver_val <= best_grid + 1e-9
            assert max_violation(system, res.y) <= 1e-8

    def test_qp_matches_cvxopt(self):
        cvxopt = pytest.importorskip("cvxopt")
        from cvxopt import matrix, solvers

        solvers.options["show_progress"] = False
        rng = np.random.default_rng(16)
        for _ in range(10):
            d = int(rng.integers(2, 6))
            r = int(rng.integers(3, 15))
            a = rng.standard_normal((r, d))
            y0 = rng.uniform(-0.6, 0.6, d)
            b = a @ y0 + rng.uniform(0.05, 0.8, r)
            target = rng.uniform(-1.0, 1.0, d)
            system = box_system(a, b, d)
            res = solve(system, Objective.min_squared_distance_to(target))

            g = np.vstack([a, np.eye(d), -np.eye(d)])
            h = np.concatenate([b, np.ones(d), np.ones(d)])
            sol = solvers.qp(matrix(2.0 * np.eye(d)), matrix(-2.0 * target),
                             matrix(g), matrix(h))
            ref = np.array(sol["x"]).ravel()
            ref_val = float(((ref - target) ** 2).sum())
            got_val = float(((res.y - target) ** 2).sum())
            assert abs(got_val - ref_val) <= 1e-6 * (1.0 + ref_val)


class TestObjectiveValidation:
    def test_target_length_checked(self):
        system = ConstraintSystem(a=np.zeros((0, 3)), b=np.zeros(0),
                                  lower=-np.ones(3), upper=np.ones(3))
        with pytest.raises(InvalidInput):
            solve(system, Objective.min_squared_distance_to([1.0, 2.0]))
