import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import norm

from hodges import (
    BaseRule,
    ClassicalHodgesRule,
    ContractViolation,
    IndicatorLoss,
    InsufficientDataError,
    CovSpec,
    NormalMeanDGP,
    OracleHodgesRule,
    PenaltySpec,
    PowerLoss,
    RateLoss,
    ScaledMSE,
    ThresholdRule,
    closed_form_loss_moments_normal_1d,
    closed_form_risk_normal_1d,
    default_schedule,
    empirical_scaled_cov,
    mc_risk,
    mc_risk_multi,
    read_risk_csv,
    selection_probability,
    tail_mass_diagnostic,
    write_risk_csv,
)
from hodges.risk import RuleContext


def quadrature_risk(theta, n, a_n, c, power=2):
    """Independent oracle: integrate the scaled loss against the sampling density."""
    s = 1.0 / np.sqrt(n)

    def integrand(x):
        est = c if abs(x - c) <= a_n else x
        return (n * (est - theta) ** 2) ** (power / 2.0) * norm.pdf(x, theta, s)

    knots = sorted({theta - 13 * s, c - a_n, c + a_n, theta + 13 * s})
    lo, hi = theta - 13 * s, theta + 13 * s
    pieces = [lo] + [p for p in knots if lo < p < hi] + [hi]
    return sum(quad(integrand, aa, bb, limit=400, epsabs=1e-14, epsrel=1e-13)[0]
               for aa, bb in zip(pieces[:-1], pieces[1:]))


class TestClosedForm:
    @pytest.mark.parametrize("n", [5, 500])
    @pytest.mark.parametrize("theta", [0.0, 0.05, 0.11, 0.5, 1.0])
    def test_matches_quadrature(self, theta, n):
        a_n = float(n) ** -0.25
        cf = closed_form_risk_normal_1d(theta, n, a_n, 0.0)
        qd = quadrature_risk(theta, n, a_n, 0.0)
        assert abs(cf - qd) <= 1e-10 * max(abs(qd), 1e-12)

    def test_at_center(self):
        # tail-only contribution 2(z phi(z) + 1 - Phi(z)) at z = a_n sqrt(n)
        n = 500
        a_n = n**-0.25
        z = a_n * np.sqrt(n)
        want = 2.0 * (z * norm.pdf(z) + 1.0 - norm.cdf(z))
        got = closed_form_risk_normal_1d(0.0, n, a_n, 0.0)
        assert got == pytest.approx(want, rel=1e-9)
        assert got == pytest.approx(5.4876e-5, rel=1e-3)

    def test_vanishing_radius_limit(self):
        for theta in (0.0, 0.3, 2.0):
            got = closed_form_risk_normal_1d(theta, 500, 1e-9, 0.0)
            assert got == pytest.approx(1.0, abs=1e-6)

    def test_mid_threshold_lower_bound(self):
        # risk at theta = a_n/2 dominates n a_n^2 / 4 = sqrt(n)/4
        n = 500
        a_n = n**-0.25
        got = closed_form_risk_normal_1d(a_n / 2.0, n, a_n, 0.0)
        assert got >= np.sqrt(n) / 4.0

    def test_loss_variance_matches_quadrature(self):
        n = 500
        a_n = n**-0.25
        for theta in (0.0, 0.11, 0.19, 1.0):
            risk, var = closed_form_loss_moments_normal_1d(theta, n, a_n, 0.0)
            second = quadrature_risk(theta, n, a_n, 0.0, power=4)
            assert abs((var + risk**2) - second) <= 1e-9 * max(second, 1e-12)


DGP_1D = NormalMeanDGP(theta=np.zeros(1), sigma=np.eye(1))
CLASSICAL = ClassicalHodgesRule(center=np.zeros(1), schedule=default_schedule(1))


class TestMCRisk:
    def test_sample_mean_unit_risk(self):
        curve = mc_risk(BaseRule(), DGP_1D, [[0.3]], n=500, reps=100_000,
                        loss=ScaledMSE(), seed=11)
        # exact risk of the mean is 1 after scaling; per-rep loss has variance 2
        se = np.sqrt(2.0 / 100_000)
        assert abs(curve.estimates[0] - 1.0) <= 3.0 * se

    def test_classical_at_center(self):
        curve = mc_risk(CLASSICAL, DGP_1D, [[0.0]], n=500, reps=100_000,
                        loss=ScaledMSE(), seed=12)
        assert curve.estimates[0] < 1e-3

    def test_classical_far_from_center(self):
        curve = mc_risk(CLASSICAL, DGP_1D, [[3.0]], n=500, reps=50_000,
                        loss=ScaledMSE(), seed=13)
        _, var = closed_form_loss_moments_normal_1d(3.0, 500, 500**-0.25, 0.0)
        assert abs(curve.estimates[0] - 1.0) <= 3.0 * np.sqrt(var / 50_000)

    def test_deterministic_and_worker_independent(self):
        grid = np.linspace(-0.5, 0.5, 7).reshape(-1, 1)
        a = mc_risk(CLASSICAL, DGP_1D, grid, n=50, reps=5000, loss=ScaledMSE(),
                    seed=5, workers=1)
        b = mc_risk(CLASSICAL, DGP_1D, grid, n=50, reps=5000, loss=ScaledMSE(),
                    seed=5, workers=4)
        np.testing.assert_array_equal(a.estimates, b.estimates)
        np.testing.assert_array_equal(a.std_errors, b.std_errors)

    def test_dataset_path_agrees_with_exact_path(self):
        grid = [[0.0], [0.2]]
        kw = dict(n=50, reps=2000, loss=ScaledMSE(), seed=31)
        fast = mc_risk(CLASSICAL, DGP_1D, grid, method="exact", **kw)
        slow = mc_risk(CLASSICAL, DGP_1D, grid, method="datasets", **kw)
        for gi in range(2):
            combined = np.hypot(fast.std_errors[gi], slow.std_errors[gi])
            assert abs(fast.estimates[gi] - slow.estimates[gi]) <= 4.0 * max(
                combined, 1e-4)

    def test_common_random_numbers(self):
        # soft threshold with lambda=0 is the identity: identical curves bit
        # for bit when draws are shared
        rules = [BaseRule(), ThresholdRule(pen=PenaltySpec("soft", 0.0),
                                           center=np.zeros(1))]
        curves = mc_risk_multi(rules, DGP_1D, [[0.1], [0.9]], n=50, reps=2000,
                               loss=ScaledMSE(), seed=9)
        np.testing.assert_array_equal(curves[0].estimates, curves[1].estimates)

    def test_indicator_exactness_in_ring(self):
        # ring member at n=500, k=1: every replication exceeds z <= k
        n, k = 500, 1.0
        theta = 0.1  # inside [k/r, a - k/r] = [0.0447, 0.1668]
        for z in (0.5, 0.99):
            curve = mc_risk(CLASSICAL, DGP_1D, [[theta]], n=n, reps=500,
                            loss=IndicatorLoss(z=z), seed=21)
            assert curve.estimates[0] == 1.0
            assert curve.std_errors[0] == 0.0

    def test_reps_precondition(self):
        with pytest.raises(ContractViolation):
            mc_risk(CLASSICAL, DGP_1D, [[0.0]], n=10, reps=50,
                    loss=ScaledMSE(), seed=1)

    def test_power_loss_reduces_to_scaled_mse(self):
        grid = [[0.3]]
        a = mc_risk(BaseRule(), DGP_1D, grid, n=50, reps=2000,
                    loss=PowerLoss(p=2.0), seed=17)
        b = mc_risk(BaseRule(), DGP_1D, grid, n=50, reps=2000,
                    loss=ScaledMSE(), seed=17)
        np.testing.assert_allclose(a.estimates, b.estimates, rtol=1e-12)

    def test_rate_loss_family(self):
        curve = mc_risk(BaseRule(), DGP_1D, [[0.0]], n=50, reps=2000,
                        loss=RateLoss(l=lambda u: u, name="abs_rate"), seed=2)
        # E[r_n |error|] = E|Z| = sqrt(2/pi)
        assert curve.estimates[0] == pytest.approx(np.sqrt(2 / np.pi), abs=0.05)


class TestSelectionProbability:
    def test_exact_gaussian_probability(self):
        rule = OracleHodgesRule(center=np.zeros(1), schedule=default_schedule(1))
        n, reps = 100, 10_000
        sel = selection_probability(rule, DGP_1D, [0.0], n=n, reps=reps, seed=41)
        p_exact = norm.cdf(n**0.25) - norm.cdf(-(n**0.25))  # 0.99843...
        se = np.sqrt(p_exact * (1 - p_exact) / reps)
        assert abs(sel.probabilities[0] - p_exact) <= 3.0 * se

    def test_vanishes_away_from_center(self):
        rule = OracleHodgesRule(center=np.zeros(1), schedule=default_schedule(1))
        sel = selection_probability(rule, DGP_1D, [1.0], n=10_000, reps=2000,
                                    seed=42)
        assert sel.probabilities[0] < 0.01

    def test_union_bound_on_joint_pin(self):
        # counting identity on shared draws: #(all pinned) >= reps - sum_j #(not pinned_j)
        d = 3
        dgp = NormalMeanDGP(theta=np.zeros(d), sigma=np.eye(d))
        rule = OracleHodgesRule(center=np.zeros(d), schedule=default_schedule(d))
        rng = np.random.default_rng(4)
        theta_hat = rng.normal(0.0, 1 / np.sqrt(100), size=(5000, d))
        ctx = RuleContext(n=100, r_n=10.0, V=CovSpec(np.eye(d)))
        _, active = rule.apply_batch(theta_hat, ctx)
        joint = np.sum(~active.any(axis=1))
        per_coord_not = np.sum(active, axis=0)
        assert joint >= 5000 - per_coord_not.sum()

    def test_requires_center(self):
        with pytest.raises(ContractViolation):
            selection_probability(BaseRule(), DGP_1D, [0.0], n=100, reps=2000,
                                  seed=1)


V_CROSS = np.array([[2.0, 1.0], [1.0, 2.0]])


class TestEmpiricalScaledCov:
    def test_identity_precision(self):
        dgp = NormalMeanDGP(theta=np.array([2.0, 0.0]), sigma=np.eye(2))
        rule = OracleHodgesRule(center=np.zeros(2), schedule=default_schedule(2))
        res = empirical_scaled_cov(rule, dgp, [2.0, 0.0], n=2500, reps=10_000,
                                   seed=51)
        assert res.true_active.b == (0,)
        assert abs(res.cov[0, 0] - 1.0) <= 5.0 * res.std_errors[0, 0]
        # pinned coordinate is identically zero on matching replications
        assert res.cov[1, 1] == 0.0 and res.cov[0, 1] == 0.0

    def test_reduced_model_superefficiency_gap(self):
        sigma = np.linalg.inv(V_CROSS)
        dgp = NormalMeanDGP(theta=np.array([2.0, 0.0]), sigma=sigma)
        rule = OracleHodgesRule(center=np.zeros(2), schedule=default_schedule(2))
        res = empirical_scaled_cov(rule, dgp, [2.0, 0.0], n=2500, reps=10_000,
                                   seed=52)
        # reduced-model variance 1/2, strictly below the marginal 2/3
        assert abs(res.cov[0, 0] - 0.5) <= 5.0 * res.std_errors[0, 0]
        assert res.cov[0, 0] < 2.0 / 3.0
        np.testing.assert_allclose(res.oracle_cov_active, [[0.5]], rtol=1e-12)

    def test_full_active_set_recovers_base_covariance(self):
        sigma = np.linalg.inv(V_CROSS)
        dgp = NormalMeanDGP(theta=np.array([2.0, -2.0]), sigma=sigma)
        rule = OracleHodgesRule(center=np.zeros(2), schedule=default_schedule(2))
        res = empirical_scaled_cov(rule, dgp, [2.0, -2.0], n=2500, reps=10_000,
                                   seed=53)
        assert res.true_active.is_full
        assert np.all(np.abs(res.cov - sigma) <= 5.0 * res.std_errors)

    def test_insufficient_matches(self):
        # true active set is full but the estimate collapses almost surely
        dgp = NormalMeanDGP(theta=np.array([1e-4, 1e-4]), sigma=np.eye(2))
        rule = OracleHodgesRule(center=np.zeros(2), schedule=default_schedule(2))
        with pytest.raises(InsufficientDataError):
            empirical_scaled_cov(rule, dgp, [1e-4, 1e-4], n=100, reps=10_000,
                                 seed=54)


class TestTailMass:
    def test_bounded_support_empty_tail(self):
        vals = tail_mass_diagnostic(np.linspace(-1, 1, 100), [2.0])
        assert vals[0] == 0.0

    def test_half_normal_mean(self):
        rng = np.random.default_rng(8)
        z = rng.standard_normal(100_000)
        vals = tail_mass_diagnostic(z, [0.0])
        want = np.sqrt(2 / np.pi)
        se = np.sqrt((1.0 - 2 / np.pi) / 100_000)
        assert abs(vals[0] - want) <= 3.0 * se

    def test_monotone_nonincreasing(self, rng):
        y = rng.standard_normal(10_000)
        vals = tail_mass_diagnostic(y, [0.0, 0.5, 1.0, 2.0, 4.0])
        assert np.all(np.diff(vals) <= 0.0)


class TestCSV:
    def test_round_trip(self, tmp_path):
        grid = np.linspace(-1, 1, 5).reshape(-1, 1)
        curves = mc_risk_multi([BaseRule(), CLASSICAL], DGP_1D, grid, n=50,
                               reps=500, loss=ScaledMSE(), seed=3)
        path = tmp_path / "curves.csv"
        write_risk_csv(curves, path, config={"seed": 3})
        back = read_risk_csv(path)
        assert [c.estimator_id for c in back] == [c.estimator_id for c in curves]
        for a, b in zip(back, curves):
            np.testing.assert_array_equal(a.estimates, b.estimates)
            np.testing.assert_array_equal(a.std_errors, b.std_errors)
            np.testing.assert_array_equal(a.theta_grid, b.theta_grid)

    def test_schema(self, tmp_path):
        curve = mc_risk(BaseRule(), DGP_1D, [[0.0]], n=50, reps=500,
                        loss=ScaledMSE(), seed=3)
        path = tmp_path / "one.csv"
        write_risk_csv([curve], path, config={"seed": 3})
        lines = path.read_text().splitlines()
        assert lines[0].startswith("# run_config:")
        assert lines[1] == "estimator_id,loss_id,n,theta_1,risk,std_error,reps,seed"
        assert len(lines) == 3
