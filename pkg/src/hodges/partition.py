"""Index-set partitions, block-covariance algebra and parameter-space regions.

A candidate active set ``b`` splits ``{0, ..., d-1}`` into active and inactive
coordinates. For a positive-definite precision matrix ``V`` (the inverse of the
asymptotic covariance of a base estimator), the marginal asymptotic covariance
of the active block is the inverse Schur complement

    Delta_b = (V_bb - V_bbar V_barbar^{-1} V_barb)^{-1},

while the reduced-model covariance attainable when the inactive coordinates
are pinned at the center is the strictly smaller ``V_bb^{-1}``. The difference
``Delta_b - V_bb^{-1}`` is positive semi-definite, with equality exactly when
the two blocks are asymptotically independent.

The region machinery describes, for a center ``c``, thresholds ``a_j`` and a
rate ``r``, the sets where a collapsing estimator can land (every coordinate
beyond its threshold, or at least one coordinate exactly at the center) and
the ``k/r`` tubes around them used by the finite-sample lower bounds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ContractViolation, DomainError, NumericalRankError, ScheduleError

MAX_CONDITION_NUMBER = 1e12


def _as_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ContractViolation(f"{name} must be a nonempty 1-D vector, got shape {v.shape}")
    return v


def _check_same_dim(theta: np.ndarray, c: np.ndarray) -> None:
    if theta.shape != c.shape:
        raise ContractViolation(
            f"dimension mismatch: theta has shape {theta.shape}, center has shape {c.shape}"
        )


@dataclass(frozen=True)
class IndexPartition:
    """Ordered split of ``{0, ..., d-1}`` into active ``b`` and inactive ``b_bar``."""

    d: int
    b: tuple[int, ...]
    b_bar: tuple[int, ...]

    def __post_init__(self):
        b, bb = tuple(self.b), tuple(self.b_bar)
        object.__setattr__(self, "b", tuple(sorted(int(i) for i in b)))
        object.__setattr__(self, "b_bar", tuple(sorted(int(i) for i in bb)))
        if self.d < 1:
            raise ContractViolation(f"dimension must be >= 1, got {self.d}")
        if sorted(self.b + self.b_bar) != list(range(self.d)):
            raise ContractViolation(
                f"b={self.b} and b_bar={self.b_bar} do not partition range({self.d})"
            )

    @classmethod
    def from_active(cls, d: int, b: Sequence[int]) -> "IndexPartition":
        active = tuple(sorted(set(int(i) for i in b)))
        inactive = tuple(i for i in range(d) if i not in active)
        return cls(d=d, b=active, b_bar=inactive)

    @property
    def is_full(self) -> bool:
        return len(self.b) == self.d

    @property
    def is_empty(self) -> bool:
        return len(self.b) == 0


def partition_from_point(theta, c) -> IndexPartition:
    """Active set ``{j : theta_j != c_j}`` under exact floating-point comparison.

    Exactness is deliberate: the partition is a mathematical function of the
    true parameter, not of a noisy estimate. Estimation-side tolerance lives
    in the threshold rules of the estimators module.
    """
    theta = _as_vector(theta, "theta")
    c = _as_vector(c, "c")
    _check_same_dim(theta, c)
    active = tuple(int(j) for j in np.nonzero(theta != c)[0])
    return IndexPartition.from_active(theta.size, active)


@dataclass(frozen=True)
class CovSpec:
    """Symmetric positive-definite precision matrix with block access.

    ``V`` is the precision (inverse covariance) of the limiting law of the
    base estimator. Symmetry is required to 1e-12 relative; positive
    definiteness and a condition number below 1e12 are enforced at
    construction.
    """

    V: np.ndarray

    def __post_init__(self):
        V = np.array(self.V, dtype=float)
        if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] == 0:
            raise ContractViolation(f"V must be a square matrix, got shape {V.shape}")
        scale = np.linalg.norm(V)
        if scale == 0.0 or not np.isfinite(V).all():
            raise ContractViolation("V must be finite and nonzero")
        if np.linalg.norm(V - V.T) > 1e-12 * scale:
            raise ContractViolation("V must be symmetric to 1e-12 relative")
        V = 0.5 * (V + V.T)
        eigs = np.linalg.eigvalsh(V)
        if eigs[0] <= 0.0:
            raise NumericalRankError(f"V is not positive definite (min eigenvalue {eigs[0]:g})")
        if eigs[-1] / eigs[0] > MAX_CONDITION_NUMBER:
            raise NumericalRankError(
                f"V condition number {eigs[-1] / eigs[0]:.3e} exceeds {MAX_CONDITION_NUMBER:.0e}"
            )
        V.setflags(write=False)
        object.__setattr__(self, "V", V)

    @property
    def d(self) -> int:
        return self.V.shape[0]

    def block(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        return self.V[np.ix_(list(rows), list(cols))]

    def inverse(self) -> np.ndarray:
        return _spd_inverse(self.V)

    @property
    def is_diagonal(self) -> bool:
        off = self.V - np.diag(np.diag(self.V))
        return bool(np.all(off == 0.0))


def _spd_inverse(M: np.ndarray) -> np.ndarray:
    """Inverse of an SPD matrix via Cholesky, with an explicit rank guard."""
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalRankError(f"matrix is not numerically positive definite: {exc}") from exc
    diag = np.diag(L)
    if diag.min() <= 0 or (diag.max() / diag.min()) ** 2 > MAX_CONDITION_NUMBER:
        raise NumericalRankError("matrix is numerically rank deficient")
    identity = np.eye(M.shape[0])
    Linv = np.linalg.solve(L, identity)
    out = Linv.T @ Linv
    return 0.5 * (out + out.T)


def _spd_solve(M: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Solve ``M x = B`` for SPD ``M`` with the same rank guard as ``_spd_inverse``."""
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalRankError(f"matrix is not numerically positive definite: {exc}") from exc
    y = np.linalg.solve(L, B)
    return np.linalg.solve(L.T, y)


def schur_asymptotic_cov(V: CovSpec, part: IndexPartition) -> np.ndarray:
    """Marginal asymptotic covariance ``Delta_b`` of the active block.

    Returns ``(V_bb - V_bbar V_barbar^{-1} V_barb)^{-1}``, which equals the
    ``(b, b)`` block of ``V^{-1}``. For a full active set this is ``V^{-1}``
    itself.
    """
    _check_partition_matches(V, part)
    if part.is_empty:
        raise DomainError("active set must be nonempty")
    if part.is_full:
        return V.inverse()
    b, bb = list(part.b), list(part.b_bar)
    Vbb = V.block(b, b)
    Vbx = V.block(b, bb)
    Vxx = V.block(bb, bb)
    schur = Vbb - Vbx @ _spd_solve(Vxx, Vbx.T)
    return _spd_inverse(0.5 * (schur + schur.T))


def oracle_block_cov(V: CovSpec, part: IndexPartition) -> np.ndarray:
    """Reduced-model covariance ``V_bb^{-1}`` of the active block.

    ``schur_asymptotic_cov(V, part) - oracle_block_cov(V, part)`` is positive
    semi-definite, vanishing exactly when the cross block ``V_bbar`` is zero.
    """
    _check_partition_matches(V, part)
    if part.is_empty:
        raise DomainError("active set must be nonempty")
    b = list(part.b)
    return _spd_inverse(V.block(b, b))


def correction_gain(V: CovSpec, part: IndexPartition) -> np.ndarray:
    """Gain matrix ``V_bb^{-1} V_bbar`` applied to inactive-coordinate residuals.

    Shape ``(|b|, |b_bar|)``; zero whenever ``V`` is block-diagonal across the
    partition. Undefined (raises) for empty or full active sets.
    """
    _check_partition_matches(V, part)
    if part.is_empty or part.is_full:
        raise DomainError("correction gain requires a nonempty, proper active set")
    b, bb = list(part.b), list(part.b_bar)
    return _spd_solve(V.block(b, b), V.block(b, bb))


def _check_partition_matches(V: CovSpec, part: IndexPartition) -> None:
    if part.d != V.d:
        raise ContractViolation(f"partition dimension {part.d} != matrix dimension {V.d}")


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------


class RegionLabel(enum.Enum):
    """Which ``k/r`` tube a parameter point falls in."""

    NEAR_ACTIVE = "near_active"   # within k/r of the all-coordinates-active region
    NEAR_SPARSE = "near_sparse"   # within k/r of the some-coordinate-at-center set
    SEPARATED = "separated"       # farther than k/r from both


@dataclass(frozen=True)
class RegionSpec:
    """Center, per-coordinate thresholds, rate and margin defining the regions."""

    c: np.ndarray
    a: np.ndarray
    r: float
    k: float

    def __post_init__(self):
        c = _as_vector(self.c, "c")
        a = _as_vector(self.a, "a")
        _check_same_dim(a, c)
        if np.any(a <= 0.0):
            raise ContractViolation("all thresholds a_j must be positive")
        if self.r <= 0.0 or self.k <= 0.0:
            raise ContractViolation("rate r and margin k must be positive")
        c.setflags(write=False)
        a.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "k", float(self.k))

    @property
    def d(self) -> int:
        return self.c.size

    @property
    def tube_radius(self) -> float:
        return self.k / self.r


def in_active_region(theta, c, a) -> bool:
    """True when every coordinate strictly exceeds its threshold distance from c."""
    theta, c, a = np.asarray(theta, float), np.asarray(c, float), np.asarray(a, float)
    return bool(np.all(np.abs(theta - c) > a))


def dist_to_sparse_set(theta, c) -> float:
    """Euclidean distance from ``theta`` to ``{x : some x_j = c_j}``.

    The nearest such point differs from ``theta`` in one coordinate only, so
    the distance is ``min_j |theta_j - c_j|``.
    """
    theta = _as_vector(theta, "theta")
    c = _as_vector(c, "c")
    _check_same_dim(theta, c)
    return float(np.min(np.abs(theta - c)))


def dist_to_active_region(theta, spec: RegionSpec) -> float:
    """Euclidean distance from ``theta`` to the closure of the active region.

    The active region is an axis-aligned product of complements of intervals,
    so projection is separable and the distance has the closed form
    ``sqrt(sum_j max(0, a_j - |theta_j - c_j|)^2)``.
    """
    theta = _as_vector(theta, "theta")
    _check_same_dim(theta, spec.c)
    deficiency = np.maximum(0.0, spec.a - np.abs(theta - spec.c))
    return float(np.sqrt(np.sum(deficiency**2)))


def classify_region(theta, spec: RegionSpec) -> RegionLabel:
    """Assign ``theta`` to exactly one of the three ``k/r`` tubes.

    Requires ``r * min_j a_j > 2k`` so the two tubes cannot overlap; the
    remainder label then certifies distance ``> k/r`` from both sets.
    """
    theta = _as_vector(theta, "theta")
    _check_same_dim(theta, spec.c)
    rmin = spec.r * float(np.min(spec.a))
    if not rmin > 2.0 * spec.k:
        raise ScheduleError(
            f"region tubes overlap: r * min_j a_j = {rmin:g} <= 2k = {2.0 * spec.k:g}"
        )
    tube = spec.tube_radius
    if dist_to_active_region(theta, spec) <= tube:
        return RegionLabel.NEAR_ACTIVE
    if dist_to_sparse_set(theta, spec.c) <= tube:
        return RegionLabel.NEAR_SPARSE
    return RegionLabel.SEPARATED


# ---------------------------------------------------------------------------
# Threshold schedules
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThresholdSchedule:
    """Per-coordinate thresholds ``a(n)`` and rate ``r(n)`` as functions of n.

    The admissible regime is ``max_j a_j(n) -> 0`` with
    ``r(n) * min_j a_j(n) -> infinity``.
    """

    d: int
    a: Callable[[int], np.ndarray] = field(repr=False)
    r: Callable[[int], float] = field(repr=False)

    def thresholds(self, n: int) -> np.ndarray:
        a = np.asarray(self.a(n), dtype=float)
        if a.shape == ():
            a = np.full(self.d, float(a))
        if a.shape != (self.d,):
            raise ScheduleError(f"a(n) must have shape ({self.d},), got {a.shape}")
        if np.any(a <= 0.0) or not np.isfinite(a).all():
            raise ScheduleError(f"thresholds a({n}) must be positive and finite")
        return a

    def rate(self, n: int) -> float:
        r = float(self.r(n))
        if r <= 0.0 or not np.isfinite(r):
            raise ScheduleError(f"rate r({n}) must be positive and finite")
        return r

    def region_spec(self, c, n: int, k: float) -> RegionSpec:
        return RegionSpec(c=np.asarray(c, float), a=self.thresholds(n), r=self.rate(n), k=k)


def power_schedule(d: int, a_exponent: float = -0.25, r_exponent: float = 0.5,
                   a_scale: float = 1.0) -> ThresholdSchedule:
    """Power-law schedule ``a_j(n) = a_scale * n**a_exponent``, ``r(n) = n**r_exponent``."""
    if a_scale <= 0.0:
        raise ScheduleError("a_scale must be positive")
    return ThresholdSchedule(
        d=d,
        a=lambda n: np.full(d, a_scale * float(n) ** a_exponent),
        r=lambda n: float(n) ** r_exponent,
    )


def default_schedule(d: int = 1) -> ThresholdSchedule:
    """The original choice: ``a_j(n) = n**(-1/4)`` with root-n rate."""
    return power_schedule(d, a_exponent=-0.25, r_exponent=0.5)


@dataclass(frozen=True)
class ScheduleReport:
    """Evaluation of a schedule's growth conditions over a range of sample sizes."""

    n_values: tuple[int, ...]
    max_a: tuple[float, ...]
    r_min_a: tuple[float, ...]
    max_a_decreasing: bool
    r_min_a_increasing: bool

    @property
    def satisfied(self) -> bool:
        return self.max_a_decreasing and self.r_min_a_increasing


def validate_schedule(schedule: ThresholdSchedule, n_values: Sequence[int]) -> ScheduleReport:
    """Check the monotone trends required of an admissible schedule.

    For each n reports ``max_j a_j(n)`` and ``r(n) * min_j a_j(n)`` and flags
    whether the first strictly decreases and the second strictly increases
    over the supplied range.
    """
    ns = [int(n) for n in n_values]
    if not ns or any(n2 <= n1 for n1, n2 in zip(ns, ns[1:])):
        raise ContractViolation("n_values must be nonempty and strictly increasing")
    max_a, r_min_a = [], []
    for n in ns:
        a = schedule.thresholds(n)
        r = schedule.rate(n)
        max_a.append(float(np.max(a)))
        r_min_a.append(r * float(np.min(a)))
    decreasing = all(y < x for x, y in zip(max_a, max_a[1:]))
    increasing = all(y > x for x, y in zip(r_min_a, r_min_a[1:]))
    return ScheduleReport(
        n_values=tuple(ns),
        max_a=tuple(max_a),
        r_min_a=tuple(r_min_a),
        max_a_decreasing=decreasing,
        r_min_a_increasing=increasing,
    )
