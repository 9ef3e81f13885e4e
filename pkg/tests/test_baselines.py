import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hodges import (
    ContractViolation,
    IndexPartition,
    NumericalRankError,
    PenaltySpec,
    coordinate_descent_pls,
    oracle_lse,
    orthonormal_design,
    penalized_ls_objective,
    penalty_value,
    threshold,
)

HARD = PenaltySpec("hard", 0.5)
SOFT = PenaltySpec("soft", 0.5)
SCAD = PenaltySpec("scad", 0.5, 3.7)


class TestThreshold:
    def test_hard_kills_below(self):
        assert threshold(0.3, HARD) == 0.0
        assert threshold(0.6, HARD) == 0.6

    def test_soft_shrinks(self):
        assert threshold(1.5, SOFT) == pytest.approx(1.0)
        assert threshold(0.3, SOFT) == 0.0

    def test_scad_branches(self):
        assert threshold(1.0, SCAD) == pytest.approx(0.5)  # |z| <= 2 lambda
        # middle branch 2*lam < |z| <= a*lam
        z = 1.5
        want = ((3.7 - 1.0) * z - 3.7 * 0.5) / (3.7 - 2.0)
        assert threshold(z, SCAD) == pytest.approx(want)
        assert threshold(2.0, SCAD) == 2.0  # beyond a*lam: unbiased region

    def test_scad_matches_grid_minimization(self):
        # independent oracle: minimize (1/2)(z - t)^2 + penalty over a fine grid
        grid = np.arange(-3.0, 3.0, 1e-4)
        pen_vals = penalty_value(grid, SCAD)
        for z in (-2.5, -1.7, -0.9, -0.3, 0.0, 0.4, 1.0, 1.3, 1.9, 2.6):
            obj = 0.5 * (z - grid) ** 2 + pen_vals
            want = grid[np.argmin(obj)]
            assert abs(threshold(z, SCAD) - want) <= 2e-4

    def test_hard_matches_grid_minimization(self):
        grid = np.arange(-2.0, 2.0, 1e-4)
        pen_vals = penalty_value(grid, HARD)
        for z in (-1.2, -0.49, 0.3, 0.51, 1.4):
            obj = 0.5 * (z - grid) ** 2 + pen_vals
            want = grid[np.argmin(obj)]
            assert abs(threshold(z, HARD) - want) <= 2e-4

    @settings(max_examples=200, deadline=None)
    @given(st.floats(-10.0, 10.0), st.floats(0.0, 3.0),
           st.sampled_from(["hard", "soft", "scad"]))
    def test_odd_symmetry(self, z, lam, kind):
        pen = PenaltySpec(kind, lam)
        assert threshold(-z, pen) == pytest.approx(-threshold(z, pen), abs=1e-12)

    def test_scad_identity_beyond_a_lambda(self, rng):
        for z in rng.uniform(3.7 * 0.5 + 1e-9, 10.0, size=50):
            assert threshold(z, SCAD) == z

    def test_rejects_nonfinite(self):
        with pytest.raises(ContractViolation):
            threshold(np.inf, SOFT)

    def test_spec_validation(self):
        with pytest.raises(ContractViolation):
            PenaltySpec("soft", -0.1)
        with pytest.raises(ContractViolation):
            PenaltySpec("scad", 0.5, a=2.0)
        with pytest.raises(ContractViolation):
            PenaltySpec("ridge", 0.5)


class TestObjective:
    def test_zero_penalty_is_rss(self, rng):
        X = rng.normal(size=(20, 3))
        Y = rng.normal(size=20)
        theta = rng.normal(size=3)
        obj = penalized_ls_objective(theta, Y, X, PenaltySpec("soft", 0.0))
        rss = float(np.sum((Y - X @ theta) ** 2))
        assert obj == pytest.approx(rss)

    def test_zero_theta(self, rng):
        X = rng.normal(size=(15, 2))
        Y = rng.normal(size=15)
        obj = penalized_ls_objective(np.zeros(2), Y, X, SOFT)
        assert obj == pytest.approx(float(Y @ Y))

    def test_soft_example(self, rng):
        X = rng.normal(size=(10, 2))
        Y = rng.normal(size=10)
        theta = np.array([1.0, -2.0])
        rss = float(np.sum((Y - X @ theta) ** 2))
        obj = penalized_ls_objective(theta, Y, X, SOFT)
        assert obj == pytest.approx(rss + 3.0)  # 2 * 0.5 * (1 + 2)

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolation):
            penalized_ls_objective(np.zeros(2), np.zeros(5), np.zeros((5, 3)), SOFT)


class TestCoordinateDescent:
    def test_orthonormal_closed_form_all_penalties(self, rng):
        n, p, lam = 60, 4, 3.0
        X = orthonormal_design(n, p, seed=3)
        Y = X @ np.array([1.0, 0.05, -0.6, 0.0]) + rng.normal(size=n)
        z = X.T @ Y / n
        for kind in ("soft", "hard", "scad"):
            pen = PenaltySpec(kind, lam)
            res = coordinate_descent_pls(Y, X, pen)
            want = threshold(z, pen.rescaled(1.0 / n))
            assert res.converged
            np.testing.assert_allclose(res.theta, want, atol=1e-8)

    def test_zero_lambda_recovers_lse(self, rng):
        X = rng.normal(size=(40, 3))
        Y = rng.normal(size=40)
        res = coordinate_descent_pls(Y, X, PenaltySpec("soft", 0.0), tol=1e-12)
        lse, *_ = np.linalg.lstsq(X, Y, rcond=None)
        np.testing.assert_allclose(res.theta, lse, atol=1e-10)

    def test_zero_data(self, rng):
        X = rng.normal(size=(20, 3))
        res = coordinate_descent_pls(np.zeros(20), X, SOFT)
        np.testing.assert_array_equal(res.theta, np.zeros(3))

    def test_soft_objective_nonincreasing(self, rng):
        X = rng.normal(size=(50, 6))
        Y = rng.normal(size=50)
        res = coordinate_descent_pls(Y, X, PenaltySpec("soft", 2.0),
                                     track_objective=True)
        trace = np.asarray(res.objective_trace)
        assert np.all(np.diff(trace) <= 1e-12)

    def test_reports_nonconvergence(self, rng):
        X = rng.normal(size=(30, 4))
        Y = rng.normal(size=30)
        res = coordinate_descent_pls(Y, X, PenaltySpec("soft", 1.0), tol=1e-16,
                                     max_iter=1)
        assert not res.converged
        assert res.n_sweeps == 1

    def test_rank_deficient_raises(self):
        X = np.column_stack([np.ones(10), np.ones(10)])
        with pytest.raises(NumericalRankError):
            coordinate_descent_pls(np.zeros(10), X, SOFT)


class TestOracleLSE:
    def test_full_support_is_lse(self, rng):
        X = rng.normal(size=(30, 3))
        Y = rng.normal(size=30)
        part = IndexPartition.from_active(3, [0, 1, 2])
        out = oracle_lse(Y, X, part, np.zeros(3))
        lse, *_ = np.linalg.lstsq(X, Y, rcond=None)
        np.testing.assert_allclose(out, lse, rtol=1e-10)

    def test_empty_support_returns_center(self, rng):
        X = rng.normal(size=(30, 3))
        Y = rng.normal(size=30)
        c = np.array([1.0, -2.0, 0.5])
        np.testing.assert_array_equal(
            oracle_lse(Y, X, IndexPartition.from_active(3, []), c), c)

    def test_orthogonal_blocks(self, rng):
        # with orthogonal column blocks and center zero, the active fit is the
        # per-block least squares
        X = orthonormal_design(40, 4, seed=7)
        Y = rng.normal(size=40)
        part = IndexPartition.from_active(4, [0, 2])
        out = oracle_lse(Y, X, part, np.zeros(4))
        want = np.zeros(4)
        want[[0, 2]] = X[:, [0, 2]].T @ Y / 40
        np.testing.assert_allclose(out, want, atol=1e-10)

    def test_center_offset(self, rng):
        X = rng.normal(size=(25, 3))
        beta = np.array([2.0, 0.7, 0.7])
        Y = X @ beta
        c = np.array([0.0, 0.7, 0.7])
        part = IndexPartition.from_active(3, [0])
        out = oracle_lse(Y, X, part, c)
        np.testing.assert_allclose(out, beta, atol=1e-10)
