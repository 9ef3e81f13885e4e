"""Monte Carlo risk curves, closed-form risk for the 1-D normal case, and
oracle-property diagnostics.

Risk is estimated on a grid of true parameter values by drawing replicated
base estimates from their exact finite-sample law (or, optionally, replicated
datasets), applying one or more estimator rules to the *same* draws (common
random numbers), and averaging a scaled loss. Replications are split into
fixed-size chunks with RNG substreams keyed by
``(seed, n, grid_index, chunk_index)`` and aggregated in chunk order, so
results are bit-identical for any worker count.

Three loss normalizations are available: ``r_n**2`` times squared error, a
nondecreasing loss of the error norm scaled by its value at ``1/r_n``, and an
unscaled nondecreasing loss of ``r_n`` times the error norm (with the
exceedance indicator as the special case used by the lower-bound corollaries).
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import norm as _norm

from .errors import ContractViolation, InsufficientDataError
from .estimators import (
    SmoothConfig,
    classical_hodges_batch,
    oracle_hodges_batch,
    smooth_oracle_hodges_batch,
)
from .models import (
    DGPSpec,
    base_estimate_from_dataset,
    base_precision,
    base_rate,
    sample_base_estimates,
    simulate,
    true_parameter,
    with_parameter,
)
from .partition import CovSpec, IndexPartition, ThresholdSchedule, oracle_block_cov, partition_from_point
from .baselines import PenaltySpec, threshold
from .rng import substream

DEFAULT_CHUNK = 20_000


# ---------------------------------------------------------------------------
# Loss families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScaledMSE:
    """Squared error norm scaled by ``r_n**2``."""

    loss_id: str = "scaled_mse"

    def values(self, errors: np.ndarray, r_n: float) -> np.ndarray:
        return r_n**2 * np.einsum("ij,ij->i", errors, errors)


@dataclass(frozen=True)
class PowerLoss:
    """``l(||error||) / l(1/r_n)`` for nondecreasing ``l`` with ``l(0) = 0``.

    With ``l=None`` the pure power ``u**p`` is used, for which the
    normalization is exactly homogeneous.
    """

    p: float = 2.0
    l: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    name: str | None = None

    def __post_init__(self):
        if self.p < 1.0:
            raise ContractViolation(f"power exponent must be >= 1, got {self.p}")
        if self.l is not None and float(self.l(np.asarray(0.0))) != 0.0:
            raise ContractViolation("loss function must satisfy l(0) = 0")

    @property
    def loss_id(self) -> str:
        return self.name or f"power_p{self.p:g}"

    @property
    def is_homogeneous(self) -> bool:
        return self.l is None

    def values(self, errors: np.ndarray, r_n: float) -> np.ndarray:
        norms = np.linalg.norm(errors, axis=1)
        if self.l is None:
            return (r_n * norms) ** self.p
        return np.asarray(self.l(norms)) / float(self.l(np.asarray(1.0 / r_n)))


@dataclass(frozen=True)
class RateLoss:
    """Unscaled ``l(r_n ||error||)`` for nondecreasing ``l``."""

    l: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    name: str = "rate_loss"

    @property
    def loss_id(self) -> str:
        return self.name

    def values(self, errors: np.ndarray, r_n: float) -> np.ndarray:
        return np.asarray(self.l(r_n * np.linalg.norm(errors, axis=1)))


@dataclass(frozen=True)
class IndicatorLoss:
    """Exceedance indicator ``1{r_n ||error|| > z}``."""

    z: float

    def __post_init__(self):
        if self.z < 0.0:
            raise ContractViolation(f"indicator threshold must be >= 0, got {self.z}")

    @property
    def loss_id(self) -> str:
        return f"indicator_z{self.z:g}"

    def values(self, errors: np.ndarray, r_n: float) -> np.ndarray:
        return (r_n * np.linalg.norm(errors, axis=1) > self.z).astype(float)


LossSpec = ScaledMSE | PowerLoss | RateLoss | IndicatorLoss


# ---------------------------------------------------------------------------
# Estimator rules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RuleContext:
    """Per-run quantities every rule may need."""

    n: int
    r_n: float
    V: CovSpec


class EstimatorRule:
    """Maps a batch of base estimates to a batch of final estimates.

    ``apply_batch`` returns ``(estimates, active_mask)`` where the mask marks
    coordinates *not* pinned at the rule's center (all-True when the rule
    never pins anything). ``center`` is None for rules without a collapse
    point.
    """

    id: str = "base"
    center: np.ndarray | None = None

    def apply_batch(self, theta_hat: np.ndarray,
                    ctx: RuleContext) -> tuple[np.ndarray, np.ndarray]:
        return theta_hat, np.ones(theta_hat.shape, dtype=bool)


@dataclass(frozen=True)
class BaseRule(EstimatorRule):
    """The base estimator itself."""

    id: str = "base"
    center: None = None


@dataclass(frozen=True)
class ClassicalHodgesRule(EstimatorRule):
    """Whole-vector collapse to ``center`` inside the ball of radius ``a(n)``.

    The schedule's thresholds must be equal across coordinates; their common
    value is the ball radius.
    """

    center: np.ndarray = None
    schedule: ThresholdSchedule = None
    id: str = "classical_hodges"

    def apply_batch(self, theta_hat, ctx):
        a = self.schedule.thresholds(ctx.n)
        if np.ptp(a) != 0.0:
            raise ContractViolation("classical rule needs a scalar threshold schedule")
        out, inside = classical_hodges_batch(theta_hat, self.center, float(a[0]))
        return out, np.repeat(~inside[:, None], theta_hat.shape[1], axis=1)


@dataclass(frozen=True)
class OracleHodgesRule(EstimatorRule):
    """Coordinate-wise collapse with precision-block correction."""

    center: np.ndarray = None
    schedule: ThresholdSchedule = None
    id: str = "oracle_hodges"

    def apply_batch(self, theta_hat, ctx):
        a = self.schedule.thresholds(ctx.n)
        return oracle_hodges_batch(theta_hat, self.center, a, ctx.V)


@dataclass(frozen=True)
class SmoothOracleHodgesRule(EstimatorRule):
    """Two-threshold continuous collapse; thresholds ``r_n**-0.5, 2 r_n**-0.5``."""

    center: np.ndarray = None
    interp: str = "piecewise_linear"
    id: str = "smooth_oracle_hodges"

    def apply_batch(self, theta_hat, ctx):
        cfg = SmoothConfig.from_rate(theta_hat.shape[1], ctx.r_n, interp=self.interp)
        return smooth_oracle_hodges_batch(theta_hat, self.center, cfg, ctx.V)


@dataclass(frozen=True)
class ThresholdRule(EstimatorRule):
    """Per-coordinate hard/soft/scad thresholding of the base estimate."""

    pen: PenaltySpec = None
    center: np.ndarray = None
    id: str = ""

    def __post_init__(self):
        if not self.id:
            object.__setattr__(self, "id", f"{self.pen.kind}_threshold")

    def apply_batch(self, theta_hat, ctx):
        c = np.zeros(theta_hat.shape[1]) if self.center is None else self.center
        out = c + threshold(theta_hat - c, self.pen)
        return out, out != c


# ---------------------------------------------------------------------------
# Monte Carlo risk estimation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RiskCurve:
    """Scaled-risk estimates with standard errors over a parameter grid."""

    estimator_id: str
    loss_id: str
    n: int
    theta_grid: np.ndarray  # (G, d)
    estimates: np.ndarray   # (G,)
    std_errors: np.ndarray  # (G,)
    reps: int
    seed: int

    def __post_init__(self):
        grid = np.atleast_2d(np.asarray(self.theta_grid, dtype=float))
        est = np.asarray(self.estimates, dtype=float)
        se = np.asarray(self.std_errors, dtype=float)
        if not (grid.shape[0] == est.size == se.size):
            raise ContractViolation("grid, estimates and std_errors lengths differ")
        if np.any(est < 0.0) or np.any(se < 0.0):
            raise ContractViolation("risk estimates and standard errors must be >= 0")
        object.__setattr__(self, "theta_grid", grid)
        object.__setattr__(self, "estimates", est)
        object.__setattr__(self, "std_errors", se)


def _draw_batch(dgp: DGPSpec, n: int, count: int, rng: np.random.Generator,
                method: str) -> np.ndarray:
    if method == "exact":
        return sample_base_estimates(dgp, n, count, rng)
    # Literal path: one dataset per replication through the simulate contract.
    out = np.empty((count, np.atleast_1d(true_parameter(dgp)).size))
    for i in range(count):
        data = simulate(dgp, n, rng)
        out[i] = base_estimate_from_dataset(dgp, data).theta_hat
    return out


def _grid_point_stats(dgp_at_theta: DGPSpec, theta: np.ndarray, rules, loss,
                      n: int, reps: int, seed: int, gi: int, ctx: RuleContext,
                      method: str, chunk: int) -> list[tuple[float, float, int]]:
    """(sum, sumsq, count) of the per-replication loss, per rule, chunked."""
    sums = np.zeros(len(rules))
    sumsqs = np.zeros(len(rules))
    done = 0
    ci = 0
    while done < reps:
        count = min(chunk, reps - done)
        rng = substream(seed, n, gi, ci)
        theta_hat = _draw_batch(dgp_at_theta, n, count, rng, method)
        for ri, rule in enumerate(rules):
            est, _ = rule.apply_batch(theta_hat, ctx)
            vals = loss.values(est - theta, ctx.r_n)
            sums[ri] += float(np.sum(vals))
            sumsqs[ri] += float(np.sum(vals * vals))
        done += count
        ci += 1
    return [(sums[ri], sumsqs[ri], reps) for ri in range(len(rules))]


def mc_risk_multi(rules: Sequence[EstimatorRule], dgp_template: DGPSpec,
                  theta_grid, n: int, reps: int, loss: LossSpec, seed: int,
                  workers: int = 1, method: str = "exact",
                  chunk: int = DEFAULT_CHUNK) -> list[RiskCurve]:
    """Risk curves for several rules on shared draws (common random numbers).

    ``method="exact"`` samples base estimates from their exact finite-sample
    law; ``method="datasets"`` materializes one dataset per replication and
    fits the base estimator, which is distributionally identical but far
    slower. Deterministic given ``(seed, configuration)``; independent of
    ``workers``.
    """
    if reps < 100:
        raise ContractViolation(f"reps must be >= 100, got {reps}")
    if method not in ("exact", "datasets"):
        raise ContractViolation(f"unknown sampling method {method!r}")
    grid = np.atleast_2d(np.asarray(theta_grid, dtype=float))
    if grid.size == 0:
        raise ContractViolation("theta grid must be nonempty")
    ctx = RuleContext(n=n, r_n=base_rate(dgp_template, n), V=base_precision(dgp_template, n))

    def run_point(gi: int):
        theta = grid[gi]
        dgp = with_parameter(dgp_template, theta)
        return _grid_point_stats(dgp, theta, rules, loss, n, reps, seed, gi, ctx,
                                 method, chunk)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_point = list(pool.map(run_point, range(grid.shape[0])))
    else:
        per_point = [run_point(gi) for gi in range(grid.shape[0])]

    curves = []
    for ri, rule in enumerate(rules):
        means = np.empty(grid.shape[0])
        ses = np.empty(grid.shape[0])
        for gi in range(grid.shape[0]):
            s, ss, cnt = per_point[gi][ri]
            mean = s / cnt
            var = max(ss - cnt * mean * mean, 0.0) / (cnt - 1)
            means[gi] = mean
            ses[gi] = np.sqrt(var / cnt)
        curves.append(RiskCurve(
            estimator_id=rule.id, loss_id=loss.loss_id, n=n, theta_grid=grid,
            estimates=means, std_errors=ses, reps=reps, seed=seed,
        ))
    return curves


def mc_risk(rule: EstimatorRule, dgp_template: DGPSpec, theta_grid, n: int,
            reps: int, loss: LossSpec, seed: int, workers: int = 1,
            method: str = "exact", chunk: int = DEFAULT_CHUNK) -> RiskCurve:
    """Monte Carlo risk curve for a single estimator rule."""
    return mc_risk_multi([rule], dgp_template, theta_grid, n, reps, loss, seed,
                         workers=workers, method=method, chunk=chunk)[0]


# ---------------------------------------------------------------------------
# Closed-form risk for the 1-D normal classical rule
# ---------------------------------------------------------------------------


def _truncated_moments(theta: float, n: int, a_n: float, c: float):
    s = 1.0 / np.sqrt(n)
    delta = theta - c
    U = (a_n - delta) / s
    L = (-a_n - delta) / s
    pU, pL = _norm.pdf(U), _norm.pdf(L)
    p_in = _norm.cdf(U) - _norm.cdf(L)
    i2 = p_in - (U * pU - L * pL)
    i4 = 3.0 * p_in - (U**3 * pU - L**3 * pL) - 3.0 * (U * pU - L * pL)
    return delta, p_in, i2, i4


def closed_form_risk_normal_1d(theta: float, n: int, a_n: float, c: float = 0.0) -> float:
    """Exact ``n E[(estimate - theta)^2]`` for the 1-D normal classical rule.

    The estimate collapses the sample mean ``Xbar ~ N(theta, 1/n)`` to ``c``
    on ``|Xbar - c| <= a_n``. Gaussian truncated second moments give
    ``n (c - theta)^2 P(collapse) + 1 - E[Z^2 ; collapse range]`` with
    ``Z = sqrt(n)(Xbar - theta)``.
    """
    if n < 1:
        raise ContractViolation(f"n must be >= 1, got {n}")
    if a_n <= 0.0:
        raise ContractViolation(f"a_n must be positive, got {a_n}")
    delta, p_in, i2, _ = _truncated_moments(theta, n, a_n, c)
    return float(n * delta**2 * p_in + (1.0 - i2))


def closed_form_loss_moments_normal_1d(theta: float, n: int, a_n: float,
                                       c: float = 0.0) -> tuple[float, float]:
    """Exact ``(mean, variance)`` of the per-replication scaled squared loss.

    The variance is the right yardstick for Monte Carlo comparisons: deep in
    the collapse regime almost every replication contributes an identical
    loss and the sample standard error degenerates.
    """
    delta, p_in, i2, i4 = _truncated_moments(theta, n, a_n, c)
    risk = n * delta**2 * p_in + (1.0 - i2)
    # Collapse and no-collapse events are disjoint, so no cross term appears.
    second = (n * delta**2) ** 2 * p_in + (3.0 - i4)
    return float(risk), float(max(second - risk**2, 0.0))


# ---------------------------------------------------------------------------
# Oracle-property diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SelectionProbabilities:
    """Per-coordinate probability that the output is pinned exactly at the center."""

    probabilities: np.ndarray
    std_errors: np.ndarray
    reps: int
    n: int


def selection_probability(rule: EstimatorRule, dgp_template: DGPSpec, theta,
                          n: int, reps: int, seed: int,
                          method: str = "exact",
                          chunk: int = DEFAULT_CHUNK) -> SelectionProbabilities:
    """Fraction of replications with each output coordinate exactly at the center."""
    if reps < 1000:
        raise ContractViolation(f"reps must be >= 1000, got {reps}")
    if rule.center is None:
        raise ContractViolation(f"rule {rule.id!r} has no collapse center")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    dgp = with_parameter(dgp_template, theta)
    ctx = RuleContext(n=n, r_n=base_rate(dgp, n), V=base_precision(dgp, n))
    pinned = np.zeros(theta.size)
    done = 0
    ci = 0
    while done < reps:
        count = min(chunk, reps - done)
        rng = substream(seed, n, 0, ci)
        theta_hat = _draw_batch(dgp, n, count, rng, method)
        _, active = rule.apply_batch(theta_hat, ctx)
        pinned += np.sum(~active, axis=0)
        done += count
        ci += 1
    probs = pinned / reps
    ses = np.sqrt(probs * (1.0 - probs) / reps)
    return SelectionProbabilities(probabilities=probs, std_errors=ses, reps=reps, n=n)


@dataclass(frozen=True)
class ScaledCovResult:
    """Sample covariance of ``r_n (estimate - theta)`` on the matching-selection event."""

    cov: np.ndarray
    std_errors: np.ndarray
    true_active: IndexPartition
    oracle_cov_active: np.ndarray  # reduced-model covariance of the active block
    n_matching: int
    reps: int


def empirical_scaled_cov(rule: EstimatorRule, dgp_template: DGPSpec, theta,
                         n: int, reps: int, seed: int,
                         method: str = "exact",
                         chunk: int = DEFAULT_CHUNK) -> ScaledCovResult:
    """Scaled-error covariance restricted to replications selecting the true set.

    Replications whose selected active set differs from the true one are
    discarded; fewer than 100 matches raises. Entry standard errors use the
    Gaussian large-sample formula ``sqrt((c_ii c_jj + c_ij^2) / (m - 1))``.
    """
    if reps < 10_000:
        raise ContractViolation(f"reps must be >= 10**4, got {reps}")
    if rule.center is None:
        raise ContractViolation(f"rule {rule.id!r} has no collapse center")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    dgp = with_parameter(dgp_template, theta)
    ctx = RuleContext(n=n, r_n=base_rate(dgp, n), V=base_precision(dgp, n))
    true_active = partition_from_point(theta, rule.center)
    want = np.zeros(theta.size, dtype=bool)
    want[list(true_active.b)] = True

    collected = []
    done = 0
    ci = 0
    while done < reps:
        count = min(chunk, reps - done)
        rng = substream(seed, n, 0, ci)
        theta_hat = _draw_batch(dgp, n, count, rng, method)
        est, active = rule.apply_batch(theta_hat, ctx)
        match = np.all(active == want, axis=1)
        if match.any():
            collected.append(ctx.r_n * (est[match] - theta))
        done += count
        ci += 1
    if not collected:
        raise InsufficientDataError("no replication selected the true active set")
    scaled = np.concatenate(collected, axis=0)
    m = scaled.shape[0]
    if m < 100:
        raise InsufficientDataError(
            f"only {m} replications selected the true active set (need >= 100)"
        )
    cov = np.cov(scaled, rowvar=False).reshape(theta.size, theta.size)
    diag = np.diag(cov)
    ses = np.sqrt((np.outer(diag, diag) + cov**2) / (m - 1))
    oracle = (oracle_block_cov(ctx.V, true_active)
              if not true_active.is_empty else np.zeros((0, 0)))
    return ScaledCovResult(cov=cov, std_errors=ses, true_active=true_active,
                           oracle_cov_active=oracle, n_matching=m, reps=reps)


def tail_mass_diagnostic(samples, M_grid) -> np.ndarray:
    """Empirical ``E[|Y| ; |Y| > M]`` per threshold, a uniform-integrability probe.

    Nonincreasing in ``M``; a tail mass that stays bounded away from zero as
    ``M`` grows signals that moments of the limit law do not control the
    finite-sample moments.
    """
    y = np.abs(np.asarray(samples, dtype=float).ravel())
    if y.size == 0:
        raise ContractViolation("samples must be nonempty")
    M = np.asarray(M_grid, dtype=float)
    return np.array([float(np.mean(np.where(y > m, y, 0.0))) for m in M])


# ---------------------------------------------------------------------------
# Headline sweep and CSV interchange
# ---------------------------------------------------------------------------

HEADLINE_SWEEP_N = (5, 50, 500)


def scaled_mse_sweep(seed: int, reps: int = 100_000, step: float = 0.01,
                     n_values: Sequence[int] = HEADLINE_SWEEP_N, grid_limit: float = 1.5,
                     workers: int = 1) -> dict[int, dict[str, RiskCurve]]:
    """Scaled-MSE curves of the classical rule for the 1-D normal mean.

    The package's headline chart (the ``fig1`` CLI command). For each ``n``:
    center 0, ball radius ``n**-0.25``, grid over
    ``[-grid_limit, grid_limit]`` with the given step, plus the matching
    closed-form curve (zero standard errors, ``reps=0``).
    """
    if step <= 0.0:
        raise ContractViolation(f"grid step must be positive, got {step}")
    from .models import NormalMeanDGP
    from .partition import default_schedule

    count = int(round(2 * grid_limit / step)) + 1
    grid = np.linspace(-grid_limit, grid_limit, count).reshape(-1, 1)
    dgp = NormalMeanDGP(theta=np.zeros(1), sigma=np.eye(1))
    rule = ClassicalHodgesRule(center=np.zeros(1), schedule=default_schedule(1))
    out: dict[int, dict[str, RiskCurve]] = {}
    for n in n_values:
        mc = mc_risk(rule, dgp, grid, n=n, reps=reps, loss=ScaledMSE(), seed=seed,
                     workers=workers)
        a_n = float(n) ** -0.25
        exact = np.array([closed_form_risk_normal_1d(float(t), n, a_n, 0.0)
                          for t in grid[:, 0]])
        closed = RiskCurve(
            estimator_id=f"{rule.id}_exact", loss_id="scaled_mse", n=n,
            theta_grid=grid, estimates=exact, std_errors=np.zeros_like(exact),
            reps=0, seed=seed,
        )
        out[n] = {"mc": mc, "exact": closed}
    return out


def write_risk_csv(curves: Sequence[RiskCurve], path, config: dict | None = None) -> None:
    """Write risk curves in the interchange schema.

    Columns: ``estimator_id, loss_id, n, theta_1..theta_d, risk, std_error,
    reps, seed`` with 17 significant digits; one row per grid point. When a
    run configuration is supplied it is embedded as a leading ``#`` comment
    line for provenance (readers should skip ``#`` lines).
    """
    d = curves[0].theta_grid.shape[1]
    for curve in curves:
        if curve.theta_grid.shape[1] != d:
            raise ContractViolation("all curves in one file must share the dimension")
    header = (["estimator_id", "loss_id", "n"]
              + [f"theta_{j + 1}" for j in range(d)]
              + ["risk", "std_error", "reps", "seed"])
    with open(path, "w", newline="") as fh:
        if config is not None:
            fh.write("# run_config: " + json.dumps(config, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for curve in curves:
            for gi in range(curve.theta_grid.shape[0]):
                row = [curve.estimator_id, curve.loss_id, str(curve.n)]
                row += [f"{v:.17g}" for v in curve.theta_grid[gi]]
                row += [f"{curve.estimates[gi]:.17g}", f"{curve.std_errors[gi]:.17g}",
                        str(curve.reps), str(curve.seed)]
                writer.writerow(row)


def read_risk_csv(path) -> list[RiskCurve]:
    """Read curves written by :func:`write_risk_csv` (one curve per
    ``(estimator_id, loss_id, n)`` group, in file order)."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    header, data = rows[0], rows[1:]
    d = sum(1 for h in header if h.startswith("theta_"))
    groups: dict[tuple, list] = {}
    order = []
    for row in data:
        key = (row[0], row[1], int(row[2]), int(row[3 + d + 2]), int(row[3 + d + 3]))
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(row)
    curves = []
    for key in order:
        est_id, loss_id, n, reps, seed = key
        block = groups[key]
        grid = np.array([[float(r[3 + j]) for j in range(d)] for r in block])
        curves.append(RiskCurve(
            estimator_id=est_id, loss_id=loss_id, n=n, theta_grid=grid,
            estimates=np.array([float(r[3 + d]) for r in block]),
            std_errors=np.array([float(r[3 + d + 1]) for r in block]),
            reps=reps, seed=seed,
        ))
    return curves
