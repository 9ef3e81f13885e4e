"""Collapsing (Hodges-type) estimators built on top of a base estimator.

The classical rule collapses the whole estimate to a fixed center ``c`` when
it falls inside a shrinking Euclidean ball; it therefore selects between two
models only (all coordinates or none). The coordinate-wise rule thresholds
each coordinate separately and, when the precision matrix has cross terms,
re-fits the surviving coordinates by adding ``V_bb^{-1} V_bbar (theta_bar - c_bar)``,
the linear correction that realizes the reduced-model covariance
``V_bb^{-1}``. A two-threshold continuous variant interpolates through the
dead zone so the map is continuous in the base estimate.

Scalar operations take a :class:`BaseEstimate`; ``*_batch`` variants operate
on ``(m, d)`` arrays of base estimates and are the workhorses of the risk and
bound-verification harnesses. Batch outputs agree with the scalar path
(bit-for-bit in the diagonal-precision case).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ContractViolation
from .partition import (
    CovSpec,
    IndexPartition,
    correction_gain,
    partition_from_point,
    _as_vector,
    _check_same_dim,
)


@dataclass(frozen=True)
class BaseEstimate:
    """A base estimate with its convergence rate and (estimated) precision."""

    theta_hat: np.ndarray
    r_n: float
    V_hat: CovSpec
    n: int

    def __post_init__(self):
        th = _as_vector(self.theta_hat, "theta_hat")
        th.setflags(write=False)
        object.__setattr__(self, "theta_hat", th)
        object.__setattr__(self, "r_n", float(self.r_n))
        object.__setattr__(self, "n", int(self.n))
        if self.r_n <= 0.0:
            raise ContractViolation(f"r_n must be positive, got {self.r_n}")
        if self.n < 1:
            raise ContractViolation(f"n must be >= 1, got {self.n}")
        if self.V_hat.d != th.size:
            raise ContractViolation(
                f"V_hat dimension {self.V_hat.d} != estimate dimension {th.size}"
            )

    @property
    def d(self) -> int:
        return self.theta_hat.size


@dataclass(frozen=True)
class HodgesResult:
    """A collapsed estimate together with the selected active set."""

    theta_tilde: np.ndarray
    selected: IndexPartition
    center: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        for name in ("theta_tilde", "center", "thresholds"):
            v = _as_vector(getattr(self, name), name)
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        for j in self.selected.b_bar:
            if self.theta_tilde[j] != self.center[j]:
                raise ContractViolation(
                    f"inactive coordinate {j} not pinned at the center exactly"
                )


def classical_hodges(est: BaseEstimate, c, a_n: float) -> HodgesResult:
    """Collapse the whole estimate to ``c`` inside the Euclidean ball of radius ``a_n``.

    The boundary collapses (``<=``), so the selected set is always empty or
    full: this rule can only choose between the null and the full model.
    """
    c = _as_vector(c, "c")
    _check_same_dim(est.theta_hat, c)
    if a_n <= 0.0:
        raise ContractViolation(f"a_n must be positive, got {a_n}")
    d = est.d
    if np.linalg.norm(est.theta_hat - c) <= a_n:
        return HodgesResult(
            theta_tilde=c.copy(),
            selected=IndexPartition.from_active(d, ()),
            center=c,
            thresholds=np.full(d, float(a_n)),
        )
    return HodgesResult(
        theta_tilde=est.theta_hat.copy(),
        selected=IndexPartition.from_active(d, range(d)),
        center=c,
        thresholds=np.full(d, float(a_n)),
    )


def oracle_hodges(est: BaseEstimate, c, a) -> HodgesResult:
    """Coordinate-wise collapse with a precision-block correction of the survivors.

    Selects ``b = {j : |theta_hat_j - c_j| > a_j}`` (boundary excluded). With a
    proper nonempty selection the surviving block becomes
    ``theta_hat_b + V_bb^{-1} V_bbar (theta_hat_bar - c_bar)`` and the rest is
    pinned at ``c``; a full selection returns the base estimate unchanged and
    an empty one returns ``c``. For diagonal ``V_hat`` the correction vanishes
    and the rule is plain per-coordinate hard thresholding.
    """
    c = _as_vector(c, "c")
    a = _as_vector(a, "a")
    _check_same_dim(est.theta_hat, c)
    _check_same_dim(a, c)
    if np.any(a <= 0.0):
        raise ContractViolation("all thresholds a_j must be positive")
    active = np.abs(est.theta_hat - c) > a
    selected = IndexPartition.from_active(est.d, np.nonzero(active)[0])
    theta = _corrected_estimate(est.theta_hat, c, selected, est.V_hat)
    return HodgesResult(theta_tilde=theta, selected=selected, center=c, thresholds=a)


def _corrected_estimate(theta_hat: np.ndarray, c: np.ndarray,
                        selected: IndexPartition, V: CovSpec) -> np.ndarray:
    if selected.is_full:
        return theta_hat.copy()
    if selected.is_empty:
        return c.copy()
    b, bb = list(selected.b), list(selected.b_bar)
    gain = correction_gain(V, selected)
    out = c.copy()
    out[b] = theta_hat[b] + gain @ (theta_hat[bb] - c[bb])
    out[bb] = c[bb]
    return out


def pseudo_oracle_estimate(est: BaseEstimate, true_theta, c) -> np.ndarray:
    """Corrected estimate at the *true* active set (test-harness device).

    Uses ``b(theta) = {j : theta_j != c_j}`` computed from the known truth, so
    no data-driven selection is involved: the full-selection case returns the
    base estimate and the empty case returns ``c``.
    """
    true_theta = _as_vector(true_theta, "true_theta")
    c = _as_vector(c, "c")
    _check_same_dim(est.theta_hat, c)
    _check_same_dim(true_theta, c)
    part = partition_from_point(true_theta, c)
    return _corrected_estimate(est.theta_hat, c, part, est.V_hat)


# ---------------------------------------------------------------------------
# Continuous (two-threshold) variant
# ---------------------------------------------------------------------------

InterpKind = Literal["piecewise_linear", "cubic"]


@dataclass(frozen=True)
class SmoothConfig:
    """Inner/outer thresholds and transition shape for the continuous variant.

    Requires ``0 < a1_j < a2_j``. The transition ``f_j`` is continuous and
    increasing with ``f_j(c_j +- a1_j) = c_j`` and
    ``f_j(c_j +- a2_j) = c_j +- a2_j``; the default is piecewise linear, the
    simplest shape meeting those knot conditions (a cubic Hermite alternative
    sits behind the same interface).
    """

    a1: np.ndarray
    a2: np.ndarray
    interp: InterpKind = "piecewise_linear"

    def __post_init__(self):
        a1 = _as_vector(self.a1, "a1")
        a2 = _as_vector(self.a2, "a2")
        _check_same_dim(a1, a2)
        if np.any(a1 <= 0.0) or np.any(a2 <= a1):
            raise ContractViolation("thresholds must satisfy 0 < a1_j < a2_j")
        if self.interp not in ("piecewise_linear", "cubic"):
            raise ContractViolation(f"unknown interpolation kind {self.interp!r}")
        a1.setflags(write=False)
        a2.setflags(write=False)
        object.__setattr__(self, "a1", a1)
        object.__setattr__(self, "a2", a2)

    @classmethod
    def from_rate(cls, d: int, r_n: float, interp: InterpKind = "piecewise_linear") -> "SmoothConfig":
        """Default choice ``a1 = r_n**(-1/2)``, ``a2 = 2 r_n**(-1/2)``."""
        base = float(r_n) ** -0.5
        return cls(a1=np.full(d, base), a2=np.full(d, 2.0 * base), interp=interp)


def _transition(x: np.ndarray, c: np.ndarray, a1: np.ndarray, a2: np.ndarray,
                interp: InterpKind) -> np.ndarray:
    """Transition value on ``a1 <= |x - c| <= a2``, odd-symmetric about ``c``."""
    u = np.abs(x - c)
    if interp == "piecewise_linear":
        mag = (u - a1) * a2 / (a2 - a1)
    else:
        # Cubic Hermite through (a1, 0) and (a2, a2) with zero end slopes.
        t = np.clip((u - a1) / (a2 - a1), 0.0, 1.0)
        mag = a2 * t * t * (3.0 - 2.0 * t)
    return c + np.sign(x - c) * np.maximum(mag, 0.0)


def smooth_oracle_hodges(est: BaseEstimate, c, cfg: SmoothConfig) -> HodgesResult:
    """Continuous collapse: dead zone inside ``a1``, interpolation up to ``a2``.

    Coordinate-wise: returns ``c_j`` when ``|theta_hat_j - c_j| <= a1_j``, the
    transition value on ``a1_j <= |theta_hat_j - c_j| <= a2_j``, and otherwise
    the j-th coordinate of the ``a2``-thresholded corrected estimator
    (evaluated once on the full vector). The reported selected set holds the
    coordinates not pinned exactly at the center, i.e. those beyond ``a1``.
    """
    c = _as_vector(c, "c")
    _check_same_dim(est.theta_hat, c)
    _check_same_dim(cfg.a1, c)
    outer = oracle_hodges(est, c, cfg.a2)
    u = np.abs(est.theta_hat - c)
    trans = _transition(est.theta_hat, c, cfg.a1, cfg.a2, cfg.interp)
    theta = np.where(u <= cfg.a1, c, np.where(u <= cfg.a2, trans, outer.theta_tilde))
    return HodgesResult(
        theta_tilde=theta,
        selected=IndexPartition.from_active(est.d, np.nonzero(u > cfg.a1)[0]),
        center=c,
        thresholds=cfg.a2.copy(),
    )


# ---------------------------------------------------------------------------
# Batch variants
# ---------------------------------------------------------------------------


def _as_batch(theta_hat) -> np.ndarray:
    th = np.asarray(theta_hat, dtype=float)
    if th.ndim != 2:
        raise ContractViolation(f"batch estimates must be (m, d), got shape {th.shape}")
    return th


def classical_hodges_batch(theta_hat, c, a_n: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized classical rule.

    Returns ``(estimates, collapsed)`` where ``collapsed`` is the boolean
    all-or-nothing indicator per row.
    """
    th = _as_batch(theta_hat)
    c = np.asarray(c, dtype=float)
    if a_n <= 0.0:
        raise ContractViolation(f"a_n must be positive, got {a_n}")
    inside = np.linalg.norm(th - c, axis=1) <= a_n
    out = np.where(inside[:, None], c, th)
    return out, inside


def oracle_hodges_batch(theta_hat, c, a, V: CovSpec) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized coordinate-wise rule with corrections.

    Rows sharing an active-set pattern are corrected together (one gain matrix
    per pattern, at most ``2**d`` of them). Returns ``(estimates, active_mask)``
    with ``active_mask`` of shape ``(m, d)``.
    """
    th = _as_batch(theta_hat)
    c = np.asarray(c, dtype=float)
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0.0):
        raise ContractViolation("all thresholds a_j must be positive")
    active = np.abs(th - c) > a
    out = np.where(active, th, c)
    if V.is_diagonal:
        return out, active
    mixed = active.any(axis=1) & ~active.all(axis=1)
    if not mixed.any():
        return out, active
    d = th.shape[1]
    # Group rows by active-set pattern via integer codes; one gain per pattern.
    codes = active[mixed] @ (1 << np.arange(d))
    rows_mixed = np.nonzero(mixed)[0]
    for code in np.unique(codes):
        rows = rows_mixed[codes == code]
        part = IndexPartition.from_active(d, np.nonzero((int(code) >> np.arange(d)) & 1)[0])
        gain = correction_gain(V, part)
        b, bb = list(part.b), list(part.b_bar)
        out[np.ix_(rows, b)] = th[np.ix_(rows, b)] + (th[np.ix_(rows, bb)] - c[bb]) @ gain.T
    return out, active


def smooth_oracle_hodges_batch(theta_hat, c, cfg: SmoothConfig,
                               V: CovSpec) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized continuous rule; mirrors :func:`smooth_oracle_hodges`."""
    th = _as_batch(theta_hat)
    c = np.asarray(c, dtype=float)
    outer, _ = oracle_hodges_batch(th, c, cfg.a2, V)
    u = np.abs(th - c)
    trans = _transition(th, c, cfg.a1, cfg.a2, cfg.interp)
    out = np.where(u <= cfg.a1, c, np.where(u <= cfg.a2, trans, outer))
    return out, u > cfg.a1
