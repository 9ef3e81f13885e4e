"""Thresholding and penalized least-squares baselines.

The comparison set for the collapse rules: per-coordinate hard, soft and SCAD
thresholding (the closed-form minimizers of the matching penalized univariate
problems), the penalized least-squares objective itself, a cyclic coordinate
descent minimizer, and the infeasible least-squares fit that knows the true
support.

Scaling convention: the objective is ``RSS + 2 sum_i f_i(theta_i; lambda)``
and coordinate ``j`` with squared column norm ``s_j`` is updated by applying
the threshold rule at level ``lambda / s_j`` to the standardized partial
residual correlation. For the soft (L1) penalty this update is the exact
per-coordinate minimizer, so full sweeps never increase the objective; for
the nonconvex rules the same standardization is used, which on orthonormal
designs (``X'X = n I``) reproduces the closed-form solution
``threshold(X'Y / n, lambda / n)`` for all three penalties.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ContractViolation, NumericalRankError
from .partition import IndexPartition

PenaltyKind = Literal["hard", "soft", "scad"]


@dataclass(frozen=True)
class PenaltySpec:
    """Penalty family and level; SCAD carries its shape parameter (default 3.7)."""

    kind: PenaltyKind
    lam: float
    a: float = 3.7

    def __post_init__(self):
        if self.kind not in ("hard", "soft", "scad"):
            raise ContractViolation(f"unknown penalty kind {self.kind!r}")
        if self.lam < 0.0:
            raise ContractViolation(f"lambda must be >= 0, got {self.lam}")
        if self.kind == "scad" and self.a <= 2.0:
            raise ContractViolation(f"scad shape parameter must exceed 2, got {self.a}")

    def rescaled(self, factor: float) -> "PenaltySpec":
        return PenaltySpec(kind=self.kind, lam=self.lam * factor, a=self.a)


def threshold(z, pen: PenaltySpec):
    """Apply the univariate threshold rule; odd in ``z``, vectorized.

    hard: kill below ``lam``, keep unchanged above. soft: shrink toward zero
    by ``lam``. scad: soft up to ``2 lam``, linear unshrinkage on
    ``(2 lam, a lam]``, identity beyond ``a lam``.
    """
    z_arr = np.asarray(z, dtype=float)
    if not np.isfinite(z_arr).all():
        raise ContractViolation("threshold input must be finite")
    lam = pen.lam
    if pen.kind == "hard":
        out = np.where(np.abs(z_arr) > lam, z_arr, 0.0)
    elif pen.kind == "soft":
        out = np.sign(z_arr) * np.maximum(np.abs(z_arr) - lam, 0.0)
    else:
        a = pen.a
        absz = np.abs(z_arr)
        soft = np.sign(z_arr) * np.maximum(absz - lam, 0.0)
        middle = ((a - 1.0) * z_arr - np.sign(z_arr) * a * lam) / (a - 2.0)
        out = np.where(absz > a * lam, z_arr, np.where(absz <= 2.0 * lam, soft, middle))
    return out if out.ndim else float(out)


def penalty_value(t, pen: PenaltySpec):
    """Penalty ``f(t; lambda)`` normalized so that, at unit scale,
    ``argmin_t (z - t)**2 / 2 + f(t)`` equals :func:`threshold` applied to ``z``.

    soft: ``lam |t|``. hard: ``(lam**2 - (lam - |t|)_+**2) / 2`` (half the
    classic form; the unhalved version corresponds to the hard rule only
    without the 1/2 on the quadratic). scad: quadratic spline that is
    ``lam |t|`` near zero and constant ``(a+1) lam**2 / 2`` beyond ``a lam``.
    """
    t_arr = np.abs(np.asarray(t, dtype=float))
    lam, a = pen.lam, pen.a
    if pen.kind == "soft":
        out = lam * t_arr
    elif pen.kind == "hard":
        out = (lam**2 - np.maximum(lam - t_arr, 0.0) ** 2) / 2.0
    else:
        inner = lam * t_arr
        middle = -(t_arr**2 - 2.0 * a * lam * t_arr + lam**2) / (2.0 * (a - 1.0))
        outer = (a + 1.0) * lam**2 / 2.0
        out = np.where(t_arr > a * lam, outer, np.where(t_arr <= lam, inner, middle))
    return out if out.ndim else float(out)


def penalized_ls_objective(theta, Y, X, pen: PenaltySpec) -> float:
    """``||Y - X theta||^2 + 2 sum_i f_i(theta_i; lambda)``; the RSS when ``lambda = 0``."""
    theta = np.asarray(theta, dtype=float)
    Y = np.asarray(Y, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape != (Y.size, theta.size):
        raise ContractViolation(
            f"shape mismatch: X is {X.shape}, Y has {Y.size} rows, theta has {theta.size}"
        )
    resid = Y - X @ theta
    return float(resid @ resid + 2.0 * np.sum(penalty_value(theta, pen)))


@dataclass(frozen=True)
class CDResult:
    """Coordinate-descent solution with convergence diagnostics."""

    theta: np.ndarray
    converged: bool
    n_sweeps: int
    last_max_change: float
    last_objective_delta: float
    objective_trace: tuple[float, ...] | None = None


def coordinate_descent_pls(Y, X, pen: PenaltySpec, tol: float = 1e-10,
                           max_iter: int = 1000,
                           track_objective: bool = False) -> CDResult:
    """Cyclic coordinate descent for the penalized least-squares objective.

    Initialized at the least-squares solution and updated in a fixed cyclic
    order, so runs are reproducible; stops when the largest coordinate change
    in a full sweep drops below ``tol``. Non-convergence is reported in the
    result, not raised.
    """
    Y = np.asarray(Y, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if tol <= 0.0:
        raise ContractViolation(f"tol must be positive, got {tol}")
    n, p = X.shape
    if Y.size != n:
        raise ContractViolation(f"Y has {Y.size} rows, X has {n}")
    if np.linalg.matrix_rank(X) < p:
        raise NumericalRankError("design matrix is rank deficient")
    col_norms = np.einsum("ij,ij->j", X, X)
    theta, *_ = np.linalg.lstsq(X, Y, rcond=None)
    resid = Y - X @ theta
    last_obj = penalized_ls_objective(theta, Y, X, pen)
    trace = [last_obj] if track_objective else None
    last_delta = np.inf
    for sweep in range(1, max_iter + 1):
        max_change = 0.0
        for j in range(p):
            old = theta[j]
            if old != 0.0:
                resid += old * X[:, j]
            z = float(X[:, j] @ resid) / col_norms[j]
            new = float(threshold(z, pen.rescaled(1.0 / col_norms[j])))
            theta[j] = new
            if new != 0.0:
                resid -= new * X[:, j]
            max_change = max(max_change, abs(new - old))
        obj = penalized_ls_objective(theta, Y, X, pen)
        last_delta = last_obj - obj
        last_obj = obj
        if trace is not None:
            trace.append(obj)
        if max_change < tol:
            return CDResult(theta=theta, converged=True, n_sweeps=sweep,
                            last_max_change=max_change, last_objective_delta=last_delta,
                            objective_trace=tuple(trace) if trace else None)
    return CDResult(theta=theta, converged=False, n_sweeps=max_iter,
                    last_max_change=max_change, last_objective_delta=last_delta,
                    objective_trace=tuple(trace) if trace else None)


def oracle_lse(Y, X, true_support: IndexPartition, c) -> np.ndarray:
    """Least squares knowing the true support: fit the active columns against
    ``Y - X_bar c_bar`` and pin the rest at ``c``.

    Full support reduces to the ordinary least-squares fit, empty support to
    ``c``.
    """
    Y = np.asarray(Y, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    c = np.asarray(c, dtype=float)
    if X.shape[1] != true_support.d or c.size != true_support.d:
        raise ContractViolation("support/center dimension does not match the design")
    out = c.copy()
    if true_support.is_empty:
        return out
    b, bb = list(true_support.b), list(true_support.b_bar)
    Xb = X[:, b]
    if np.linalg.matrix_rank(Xb) < len(b):
        raise NumericalRankError("active design block is rank deficient")
    target = Y if true_support.is_full else Y - X[:, bb] @ c[bb]
    beta_b, *_ = np.linalg.lstsq(Xb, target, rcond=None)
    out[b] = beta_b
    return out
