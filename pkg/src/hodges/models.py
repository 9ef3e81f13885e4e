"""Data-generating processes and the base estimators fitted to them.

Three synthetic populations: a multivariate normal mean (sample-mean MLE,
root-n rate), a fixed-design linear model (least squares, root-n rate), and a
centered uniform box whose boundary MLE converges at rate ``n`` rather than
root-n, with a one-sided exponential limit law. The last one exists precisely
because collapse rules only need *some* rate-``r_n`` consistent base
estimator, not likelihood regularity.

Sampling is deterministic given ``(dgp, n, seed)``; independent replications
use substreams keyed by the replication index, so concurrent execution cannot
change results. Each model also exposes an exact sampler for the law of its
base estimate, used by the Monte Carlo harness to avoid materializing raw
observations when only the estimate matters (the sampled law is the exact
finite-sample law, not an asymptotic approximation).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ContractViolation, NumericalRankError
from .estimators import BaseEstimate
from .partition import CovSpec, _spd_inverse
from .rng import substream


@dataclass(frozen=True)
class NormalMeanDGP:
    """I.i.d. draws from ``N(theta, Sigma)``."""

    theta: np.ndarray
    sigma: np.ndarray  # covariance, SPD

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        CovSpec(sigma)  # SPD validation; covariance and precision share the requirement
        if sigma.shape != (theta.size, theta.size):
            raise ContractViolation(
                f"sigma shape {sigma.shape} incompatible with theta dimension {theta.size}"
            )
        theta.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "sigma", sigma)

    @property
    def d(self) -> int:
        return self.theta.size

    tag = "normal_mean"


@dataclass(frozen=True)
class LinearModelDGP:
    """``Y = X beta + eps`` with ``eps ~ N(0, sigma2 I)`` on a fixed design."""

    beta: np.ndarray
    sigma2: float
    design: np.ndarray

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        X = np.atleast_2d(np.asarray(self.design, dtype=float))
        if self.sigma2 <= 0.0:
            raise ContractViolation(f"sigma2 must be positive, got {self.sigma2}")
        if X.shape[1] != beta.size:
            raise ContractViolation(
                f"design has {X.shape[1]} columns but beta has dimension {beta.size}"
            )
        if np.linalg.matrix_rank(X) < beta.size:
            raise NumericalRankError("design matrix is rank deficient")
        beta.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "design", X)
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def d(self) -> int:
        return self.beta.size

    tag = "linear_model"


@dataclass(frozen=True)
class UniformBoxDGP:
    """Independent coordinates uniform on ``[-theta_k, theta_k]``, ``theta_k > 0``."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if np.any(theta <= 0.0):
            raise ContractViolation("all box half-widths theta_k must be positive")
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @property
    def d(self) -> int:
        return self.theta.size

    tag = "uniform_box"


DGPSpec = Union[NormalMeanDGP, LinearModelDGP, UniformBoxDGP]


@dataclass(frozen=True)
class Dataset:
    """Simulated observations with named columns."""

    observations: np.ndarray
    columns: tuple[str, ...]
    dgp_tag: str
    n: int

    def __post_init__(self):
        obs = np.atleast_2d(np.asarray(self.observations, dtype=float))
        if obs.shape[0] != self.n or self.n < 1:
            raise ContractViolation(f"expected {self.n} rows, got {obs.shape[0]}")
        if obs.shape[1] != len(self.columns):
            raise ContractViolation("column names do not match observation width")
        obs.setflags(write=False)
        object.__setattr__(self, "observations", obs)
        object.__setattr__(self, "columns", tuple(self.columns))


def simulate(dgp: DGPSpec, n: int, seed, rep: int | None = None) -> Dataset:
    """Draw a dataset of ``n`` observations; deterministic given ``(dgp, n, seed)``.

    ``rep`` selects an independent substream for replication-level parallelism:
    ``simulate(dgp, n, seed, rep=r)`` is independent across ``r`` and identical
    regardless of execution order. A ``numpy.random.Generator`` may be passed
    as ``seed`` for callers that manage their own streams.
    """
    if n < 1:
        raise ContractViolation(f"n must be >= 1, got {n}")
    if isinstance(seed, np.random.Generator):
        rng = seed
    else:
        rng = substream(seed, n) if rep is None else substream(seed, n, rep)
    if isinstance(dgp, NormalMeanDGP):
        obs = rng.multivariate_normal(dgp.theta, dgp.sigma, size=n, method="cholesky")
        cols = tuple(f"y{k + 1}" for k in range(dgp.d))
    elif isinstance(dgp, LinearModelDGP):
        X = dgp.design
        if X.shape[0] != n:
            raise ContractViolation(
                f"fixed design has {X.shape[0]} rows; requested n={n}"
            )
        y = X @ dgp.beta + rng.normal(0.0, np.sqrt(dgp.sigma2), size=n)
        obs = np.column_stack([y, X])
        cols = ("y",) + tuple(f"x{k + 1}" for k in range(dgp.d))
    elif isinstance(dgp, UniformBoxDGP):
        obs = rng.uniform(-dgp.theta, dgp.theta, size=(n, dgp.d))
        cols = tuple(f"y{k + 1}" for k in range(dgp.d))
    else:
        raise ContractViolation(f"unknown DGP {type(dgp)!r}")
    return Dataset(observations=obs, columns=cols, dgp_tag=dgp.tag, n=n)


def mle_normal_mean(data: Dataset, sigma) -> BaseEstimate:
    """Sample-mean MLE with known covariance: root-n rate, precision ``Sigma^{-1}``."""
    if data.dgp_tag != NormalMeanDGP.tag:
        raise ContractViolation(f"expected a normal-mean dataset, got {data.dgp_tag!r}")
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    theta_hat = data.observations.mean(axis=0)
    return BaseEstimate(
        theta_hat=theta_hat,
        r_n=float(np.sqrt(data.n)),
        V_hat=CovSpec(_spd_inverse(sigma)),
        n=data.n,
    )


def lse_linear(data: Dataset, sigma2: float | None = None) -> BaseEstimate:
    """Least squares on the fixed design: root-n rate, precision ``(X'X/n)/sigma2``.

    With ``sigma2=None`` the noise variance is estimated by the residual mean
    square (divisor ``n - p``), which requires ``n > p`` and nonzero
    residuals; pass the known variance in degenerate settings (saturated or
    noiseless designs).
    """
    if data.dgp_tag != LinearModelDGP.tag:
        raise ContractViolation(f"expected a linear-model dataset, got {data.dgp_tag!r}")
    y = data.observations[:, 0]
    X = data.observations[:, 1:]
    n, p = X.shape
    beta_hat, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < p:
        raise NumericalRankError("design matrix is numerically rank deficient")
    if sigma2 is None:
        if n <= p:
            raise ContractViolation(
                "residual variance is undefined for n <= p; pass sigma2 explicitly"
            )
        rss = float(np.sum((y - X @ beta_hat) ** 2))
        sigma2 = rss / (n - p)
        if sigma2 <= 0.0:
            raise ContractViolation(
                "zero residual variance; pass sigma2 explicitly for noiseless data"
            )
    return BaseEstimate(
        theta_hat=beta_hat,
        r_n=float(np.sqrt(n)),
        V_hat=CovSpec((X.T @ X / n) / float(sigma2)),
        n=n,
    )


def mle_uniform_box(data: Dataset) -> BaseEstimate:
    """Coordinate-wise maximum of absolute values: rate ``n``, not root-n.

    ``n (theta_hat_k - theta_k)`` converges to a one-sided law with CDF
    ``exp(x / theta_k)`` on ``x < 0`` (mean ``-theta_k``, variance
    ``theta_k**2``); the plug-in precision ``diag(theta_hat_k**-2)`` is the
    inverse of that limit's scale. The limit has nonzero mean, unlike the
    root-n models; it is supplied as-is, without recentering.
    """
    if data.dgp_tag != UniformBoxDGP.tag:
        raise ContractViolation(f"expected a uniform-box dataset, got {data.dgp_tag!r}")
    theta_hat = np.abs(data.observations).max(axis=0)
    return BaseEstimate(
        theta_hat=theta_hat,
        r_n=float(data.n),
        V_hat=CovSpec(np.diag(theta_hat**-2.0)),
        n=data.n,
    )


# ---------------------------------------------------------------------------
# Exact samplers for the law of the base estimate
# ---------------------------------------------------------------------------


def sample_base_estimates(dgp: DGPSpec, n: int, reps: int,
                          rng: np.random.Generator) -> np.ndarray:
    """Draw ``reps`` base estimates from their exact finite-sample law.

    Normal mean: ``theta_hat ~ N(theta, Sigma/n)`` exactly. Linear model with
    Gaussian errors: ``beta_hat ~ N(beta, sigma2 (X'X)^{-1})`` exactly.
    Uniform box: ``theta_hat_k = theta_k U**(1/n)`` with ``U ~ Uniform(0,1)``
    (the max of ``n`` uniform magnitudes). Distributionally identical to
    simulating datasets and applying the matching estimator, at a fraction of
    the cost.
    """
    if isinstance(dgp, NormalMeanDGP):
        return rng.multivariate_normal(
            dgp.theta, dgp.sigma / n, size=reps, method="cholesky"
        )
    if isinstance(dgp, LinearModelDGP):
        X = dgp.design
        if X.shape[0] != n:
            raise ContractViolation(f"fixed design has {X.shape[0]} rows; requested n={n}")
        cov = dgp.sigma2 * _spd_inverse(X.T @ X)
        return rng.multivariate_normal(dgp.beta, cov, size=reps, method="cholesky")
    if isinstance(dgp, UniformBoxDGP):
        u = rng.uniform(size=(reps, dgp.d))
        return dgp.theta * u ** (1.0 / n)
    raise ContractViolation(f"unknown DGP {type(dgp)!r}")


def base_estimate_from_dataset(dgp: DGPSpec, data: Dataset) -> BaseEstimate:
    """Fit the matching base estimator (with known nuisance parameters)."""
    if isinstance(dgp, NormalMeanDGP):
        return mle_normal_mean(data, dgp.sigma)
    if isinstance(dgp, LinearModelDGP):
        return lse_linear(data, sigma2=dgp.sigma2)
    if isinstance(dgp, UniformBoxDGP):
        return mle_uniform_box(data)
    raise ContractViolation(f"unknown DGP {type(dgp)!r}")


def base_rate(dgp: DGPSpec, n: int) -> float:
    """Convergence rate of the matching base estimator at sample size ``n``."""
    return float(n) if isinstance(dgp, UniformBoxDGP) else float(np.sqrt(n))


def base_precision(dgp: DGPSpec, n: int) -> CovSpec:
    """Known precision of the limit law of the matching base estimator."""
    if isinstance(dgp, NormalMeanDGP):
        return CovSpec(_spd_inverse(dgp.sigma))
    if isinstance(dgp, LinearModelDGP):
        X = dgp.design
        return CovSpec((X.T @ X / X.shape[0]) / dgp.sigma2)
    if isinstance(dgp, UniformBoxDGP):
        return CovSpec(np.diag(dgp.theta**-2.0))
    raise ContractViolation(f"unknown DGP {type(dgp)!r}")


def true_parameter(dgp: DGPSpec) -> np.ndarray:
    return dgp.beta if isinstance(dgp, LinearModelDGP) else dgp.theta


def with_parameter(dgp: DGPSpec, theta) -> DGPSpec:
    """Copy of the DGP with the target parameter replaced (grid sweeps)."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if isinstance(dgp, NormalMeanDGP):
        return NormalMeanDGP(theta=theta, sigma=dgp.sigma)
    if isinstance(dgp, LinearModelDGP):
        return LinearModelDGP(beta=theta, sigma2=dgp.sigma2, design=dgp.design)
    if isinstance(dgp, UniformBoxDGP):
        return UniformBoxDGP(theta=theta)
    raise ContractViolation(f"unknown DGP {type(dgp)!r}")


def orthonormal_design(n: int, p: int, seed: int = 0) -> np.ndarray:
    """Deterministic ``n x p`` design with ``X'X = n I`` exactly (up to rounding).

    QR of a seeded Gaussian matrix, rescaled by ``sqrt(n)``; the same
    ``(n, p, seed)`` always yields the same design.
    """
    if n < p:
        raise ContractViolation(f"need n >= p for an orthonormal design, got n={n}, p={p}")
    rng = substream(seed, n, p)
    q, r = np.linalg.qr(rng.standard_normal((n, p)))
    q *= np.sign(np.diag(r))  # fix QR sign ambiguity for reproducibility
    return q * np.sqrt(n)


# ---------------------------------------------------------------------------
# CSV interchange
# ---------------------------------------------------------------------------


def dataset_to_csv(data: Dataset, path) -> None:
    """Write ``data`` as CSV: header row of column names, one observation per row."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(data.columns)
        for row in data.observations:
            writer.writerow([f"{v:.17g}" for v in row])


def dataset_from_csv(path, dgp_tag: str) -> Dataset:
    """Read a dataset written by :func:`dataset_to_csv`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    obs = np.asarray(rows, dtype=float)
    return Dataset(observations=obs, columns=tuple(header), dgp_tag=dgp_tag, n=obs.shape[0])
