"""Deterministic per-realization verification of finite-sample error lower bounds.

Two facts are checked sample-pathwise, with zero tolerance, because they are
consequences of the estimators' geometry rather than of the noise:

* classical rule: whenever the true parameter lies in the ring
  ``k <= r_n ||theta - c|| <= a_n r_n - k``, every realization satisfies
  ``r_n ||estimate - theta|| >= k`` (the estimate is either ``c``, which the
  inner radius keeps away from ``theta``, or the base estimate, which the
  collapse test pushed outside the ball while ``theta`` sits inside it);

* coordinate-wise rule: the output always lands in the union of the
  all-active region and the some-coordinate-pinned set, so for any ``theta``
  farther than ``k / r_n`` from both, every realization satisfies
  ``r_n ||estimate - theta|| >= k``.

A single violation over any number of random or adversarial realizations is a
build-failing bug, not noise. The module also emits the deterministic
worst-case divergence table for the sequences ``theta_n = c +- a_n/2`` and the
lower-bound values the ring fact implies for the other loss families.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContractViolation, DomainError, ScheduleError
from .estimators import classical_hodges_batch, oracle_hodges_batch
from .partition import (
    CovSpec,
    RegionLabel,
    RegionSpec,
    ThresholdSchedule,
    classify_region,
)
from .risk import IndicatorLoss, LossSpec, PowerLoss, RateLoss
from .rng import substream


# ---------------------------------------------------------------------------
# Ring region (classical rule)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RingRegion:
    """The ring ``k/r_n <= ||theta - c|| <= a_n - k/r_n`` around the center."""

    c: np.ndarray
    k: float
    r_n: float
    a_n: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        c.setflags(write=False)
        object.__setattr__(self, "c", c)

    @property
    def inner_radius(self) -> float:
        return self.k / self.r_n

    @property
    def outer_radius(self) -> float:
        return self.a_n - self.k / self.r_n

    def contains(self, theta) -> bool:
        rho = self.r_n * float(np.linalg.norm(np.atleast_1d(theta) - self.c))
        return self.k <= rho <= self.a_n * self.r_n - self.k

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Uniform direction on the sphere, uniform radius on the permitted interval.

        Not volume-uniform; only membership matters for the bound.
        """
        d = self.c.size
        g = rng.standard_normal((size, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        radii = rng.uniform(self.inner_radius, self.outer_radius, size=size)
        return self.c + radii[:, None] * g

    def describe(self) -> dict:
        return {
            "kind": "ring",
            "center": self.c.tolist(),
            "inner_radius": self.inner_radius,
            "outer_radius": self.outer_radius,
        }


def ring_region(c, k: float, r_n: float, a_n: float) -> RingRegion:
    """Build the ring descriptor; requires ``a_n r_n >= 2k`` (nonempty).

    Equality gives the degenerate ring ``||theta - c|| = a_n / 2`` exactly,
    which is still a valid (single-radius) region.
    """
    if k <= 0.0 or r_n <= 0.0 or a_n <= 0.0:
        raise ContractViolation("k, r_n and a_n must all be positive")
    if a_n * r_n < 2.0 * k:
        raise DomainError(
            f"empty ring: a_n * r_n = {a_n * r_n:g} < 2k = {2.0 * k:g}"
        )
    return RingRegion(c=np.atleast_1d(np.asarray(c, dtype=float)), k=float(k),
                      r_n=float(r_n), a_n=float(a_n))


# ---------------------------------------------------------------------------
# Point checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointCheck:
    """Outcome of one parameter point against one batch of realizations."""

    theta: np.ndarray
    realizations: int
    violations: int
    min_scaled_error: float
    range_violations: int = 0

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.range_violations == 0


def verify_classical_bound(ring: RingRegion, theta, realizations) -> PointCheck:
    """Assert ``r_n ||estimate - theta|| >= k`` for every realization, exactly.

    ``theta`` must pass the ring membership test; the estimate is formed by
    collapsing each realization to the center inside the ball of radius
    ``a_n``. No tolerance is applied.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if not ring.contains(theta):
        raise ContractViolation("theta is not a member of the ring")
    realizations = np.atleast_2d(np.asarray(realizations, dtype=float))
    est, _ = classical_hodges_batch(realizations, ring.c, ring.a_n)
    scaled = ring.r_n * np.linalg.norm(est - theta, axis=1)
    return PointCheck(
        theta=theta,
        realizations=realizations.shape[0],
        violations=int(np.sum(scaled < ring.k)),
        min_scaled_error=float(np.min(scaled)),
    )


def verify_oracle_bound(spec: RegionSpec, theta, realizations,
                        V: CovSpec) -> PointCheck:
    """Assert the range invariant and ``r_n ||estimate - theta|| >= k`` exactly.

    ``theta`` must classify as separated (farther than ``k/r`` from both the
    all-active region and the pinned set). Every output is checked to lie in
    the union of those two sets, from the output values themselves.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    label = classify_region(theta, spec)
    if label is not RegionLabel.SEPARATED:
        raise ContractViolation(f"theta classifies as {label.value}, not separated")
    realizations = np.atleast_2d(np.asarray(realizations, dtype=float))
    est, _ = oracle_hodges_batch(realizations, spec.c, spec.a, V)
    in_active = np.all(np.abs(est - spec.c) > spec.a, axis=1)
    in_pinned = np.any(est == spec.c, axis=1)
    scaled = spec.r * np.linalg.norm(est - theta, axis=1)
    return PointCheck(
        theta=theta,
        realizations=realizations.shape[0],
        violations=int(np.sum(scaled < spec.k)),
        min_scaled_error=float(np.min(scaled)),
        range_violations=int(np.sum(~(in_active | in_pinned))),
    )


# ---------------------------------------------------------------------------
# Sweeps (many points, many realizations)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundSweepReport:
    """Aggregated verification results in the JSON report shape."""

    theorem: str
    region: dict
    n: int
    k: float
    points_checked: int
    realizations_per_point: int
    violations: list
    bound_values: list
    range_violations: int = 0
    first_admissible_n: int | None = None

    @property
    def ok(self) -> bool:
        return not self.violations and self.range_violations == 0

    def to_json_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "region": self.region,
            "n": self.n,
            "k": self.k,
            "points_checked": self.points_checked,
            "realizations_per_point": self.realizations_per_point,
            "violations": self.violations,
            "bound_values": self.bound_values,
            "range_violations": self.range_violations,
            "first_admissible_n": self.first_admissible_n,
        }


def first_admissible_n(schedule: ThresholdSchedule, k: float,
                       n_max: int = 2**40) -> int:
    """Smallest ``n`` with ``r(n) * min_j a_j(n) > 2k``, found by search.

    Makes the "for sufficiently large n" premise concrete for a given
    schedule instead of leaving it abstract.
    """
    def admissible(n: int) -> bool:
        return schedule.rate(n) * float(np.min(schedule.thresholds(n))) > 2.0 * k

    hi = 1
    while not admissible(hi):
        hi *= 2
        if hi > n_max:
            raise ScheduleError(f"schedule never satisfies r * min a > 2k below {n_max}")
    lo = hi // 2
    while lo + 1 < hi:
        mid = (lo + hi) // 2
        if admissible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _edge_realizations(c: np.ndarray, a: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Adversarial realizations at and just beyond the collapse boundaries."""
    eps = np.finfo(float).eps
    rows = [theta, c, c + a, c - a,
            c + a * (1.0 + 4.0 * eps), c - a * (1.0 + 4.0 * eps),
            c + 0.5 * a, theta + a]
    return np.vstack(rows)


def classical_bound_sweep(n: int, k: float, schedule: ThresholdSchedule,
                          c, sigma, seed: int, n_points: int = 100,
                          realizations_per_point: int = 1_000_000,
                          chunk: int = 200_000) -> BoundSweepReport:
    """Check the ring bound at sampled points against Gaussian realizations.

    Realizations are draws of a normal base estimate ``N(theta, sigma/n)``
    plus a handful of adversarial values sitting exactly on the collapse
    boundaries; the bound is distribution-free, so the Gaussian choice is a
    falsification attempt rather than an assumption.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    a = schedule.thresholds(n)
    if np.ptp(a) != 0.0:
        raise ContractViolation("classical rule needs a scalar threshold schedule")
    r_n = schedule.rate(n)
    ring = ring_region(c, k, r_n, float(a[0]))
    point_rng = substream(seed, n, 0)
    points = ring.sample(point_rng, n_points)
    L = np.linalg.cholesky(sigma / n)

    violations, bound_values = [], []
    for pi in range(n_points):
        theta = points[pi]
        min_scaled, bad = np.inf, 0
        done, ci = 0, 0
        while done < realizations_per_point:
            count = min(chunk, realizations_per_point - done)
            rng = substream(seed, n, 1 + pi, ci)
            draws = theta + rng.standard_normal((count, c.size)) @ L.T
            if ci == 0:
                draws = np.vstack([draws, _edge_realizations(c, a, theta)])
            check = verify_classical_bound(ring, theta, draws)
            bad += check.violations
            min_scaled = min(min_scaled, check.min_scaled_error)
            done += count
            ci += 1
        bound_values.append(min_scaled)
        if bad:
            violations.append({"theta": theta.tolist(), "count": bad})
    return BoundSweepReport(
        theorem="classical", region=ring.describe(), n=n, k=k,
        points_checked=n_points, realizations_per_point=realizations_per_point,
        violations=violations, bound_values=bound_values,
        first_admissible_n=first_admissible_n(schedule, k),
    )


def sample_separated_points(spec: RegionSpec, rng: np.random.Generator,
                            n_points: int) -> np.ndarray:
    """Points farther than ``k/r`` from both regions, two families.

    Half have every coordinate in the open middle band
    ``(k/r, a_j - k/r)`` around the center; the rest put one coordinate at
    ``c_j +- a_j/2`` and park the others at ``c_i + 2 a_i`` (outside the
    active-region tube only through the banded coordinate). Every point is
    re-checked through the classifier.
    """
    d = spec.d
    tube = spec.tube_radius
    lo, hi = tube, spec.a - tube
    if np.any(hi <= lo):
        raise ScheduleError("middle band is empty; schedule precondition violated")
    points = []
    half = n_points // 2
    while len(points) < half:
        mag = rng.uniform(lo, hi, size=d)
        sign = rng.choice([-1.0, 1.0], size=d)
        theta = spec.c + sign * mag
        if classify_region(theta, spec) is RegionLabel.SEPARATED:
            points.append(theta)
    while len(points) < n_points:
        theta = spec.c + 2.0 * spec.a
        j = int(rng.integers(d))
        theta[j] = spec.c[j] + rng.choice([-0.5, 0.5]) * spec.a[j]
        if classify_region(theta, spec) is RegionLabel.SEPARATED:
            points.append(theta)
    return np.asarray(points)


def oracle_bound_sweep(n: int, k: float, schedule: ThresholdSchedule,
                       c, V: CovSpec, seed: int, n_points: int = 100,
                       realizations_per_point: int = 1_000_000,
                       chunk: int = 200_000) -> BoundSweepReport:
    """Check the separated-region bound and the range invariant at sampled points."""
    c = np.atleast_1d(np.asarray(c, dtype=float))
    spec = schedule.region_spec(c, n, k)
    sigma = V.inverse()
    point_rng = substream(seed, n, 0)
    points = sample_separated_points(spec, point_rng, n_points)
    L = np.linalg.cholesky(sigma / n)

    violations, bound_values = [], []
    range_bad_total = 0
    for pi in range(n_points):
        theta = points[pi]
        min_scaled, bad, range_bad = np.inf, 0, 0
        done, ci = 0, 0
        while done < realizations_per_point:
            count = min(chunk, realizations_per_point - done)
            rng = substream(seed, n, 1 + pi, ci)
            draws = theta + rng.standard_normal((count, c.size)) @ L.T
            if ci == 0:
                draws = np.vstack([draws, _edge_realizations(c, spec.a, theta)])
            check = verify_oracle_bound(spec, theta, draws, V)
            bad += check.violations
            range_bad += check.range_violations
            min_scaled = min(min_scaled, check.min_scaled_error)
            done += count
            ci += 1
        bound_values.append(min_scaled)
        range_bad_total += range_bad
        if bad or range_bad:
            violations.append({"theta": theta.tolist(), "count": bad,
                               "range_count": range_bad})
    return BoundSweepReport(
        theorem="oracle", region={
            "kind": "separated",
            "center": c.tolist(),
            "thresholds": spec.a.tolist(),
            "tube_radius": spec.tube_radius,
        },
        n=n, k=k, points_checked=n_points,
        realizations_per_point=realizations_per_point,
        violations=violations, bound_values=bound_values,
        range_violations=range_bad_total,
        first_admissible_n=first_admissible_n(schedule, k),
    )


# ---------------------------------------------------------------------------
# Deterministic divergence table and loss corollaries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WorstCaseRow:
    """Deterministic lower bound at the mid-threshold sequence for one n."""

    n: int
    r_n: float
    a_min: float
    bound: float          # r_n * a_min / 2
    bound_squared: float  # the squared-loss version


def worst_case_probe(schedule: ThresholdSchedule,
                     n_values: Sequence[int]) -> list[WorstCaseRow]:
    """Lower bounds ``r_n a_n / 2`` at ``theta_n = c +- a_n/2``, per sample size.

    Pure arithmetic on the schedule; a growing column demonstrates that the
    worst-case scaled error diverges even while the pointwise limits improve.
    """
    ns = [int(n) for n in n_values]
    if any(n2 <= n1 for n1, n2 in zip(ns, ns[1:])) or not ns:
        raise ContractViolation("n_values must be nonempty and strictly increasing")
    rows = []
    for n in ns:
        r = schedule.rate(n)
        a_min = float(np.min(schedule.thresholds(n)))
        bound = r * a_min / 2.0
        rows.append(WorstCaseRow(n=n, r_n=r, a_min=a_min, bound=bound,
                                 bound_squared=bound * bound))
    return rows


@dataclass(frozen=True)
class LossBoundRow:
    """Lower-bound values implied by the ring fact for one loss family and n."""

    n: int
    r_n: float
    separated_bound: float
    worst_case_bound: float
    limit: float | None


def loss_corollary_check(loss: LossSpec, schedule: ThresholdSchedule, k: float,
                         n_values: Sequence[int]) -> list[LossBoundRow]:
    """Per-n lower bounds for the power, rate-loss and indicator families.

    Power family: the separated bound is ``l(k/r_n) / l(1/r_n)``, converging
    to ``k**p`` (exactly ``k**p`` for the homogeneous power). Rate-loss
    family: the separated bound is the constant ``l(k)`` and the worst case
    ``l(r_n a_n / 2)``. Indicator with ``z <= k``: the constant one.
    """
    if k <= 0.0:
        raise ContractViolation("k must be positive")
    rows = []
    for n in (int(n) for n in n_values):
        r = schedule.rate(n)
        a_min = float(np.min(schedule.thresholds(n)))
        if isinstance(loss, PowerLoss):
            if loss.is_homogeneous:
                sep = k**loss.p
                worst = (r * a_min / 2.0) ** loss.p
            else:
                sep = float(loss.l(np.asarray(k / r)) / loss.l(np.asarray(1.0 / r)))
                worst = float(loss.l(np.asarray(a_min / 2.0)) / loss.l(np.asarray(1.0 / r)))
            limit = k**loss.p
        elif isinstance(loss, IndicatorLoss):
            sep = 1.0 if loss.z <= k else 0.0
            worst = 1.0 if r * a_min / 2.0 > loss.z else 0.0
            limit = sep
        elif isinstance(loss, RateLoss):
            sep = float(loss.l(np.asarray(k)))
            worst = float(loss.l(np.asarray(r * a_min / 2.0)))
            limit = None
        else:
            raise ContractViolation(
                f"unsupported loss family {type(loss).__name__} for the corollaries"
            )
        rows.append(LossBoundRow(n=n, r_n=r, separated_bound=sep,
                                 worst_case_bound=worst, limit=limit))
    return rows
