"""Collapse-rule (Hodges-type) estimators and their finite-sample risk analysis.

A library and CLI for studying superefficient shrinkage-to-a-point
estimators: constructing classical and coordinate-wise corrected collapse
rules on top of any rate-consistent base estimator, estimating their risk
curves by Monte Carlo, diagnosing the oracle property (selection consistency
plus reduced-model limiting covariance), and verifying deterministic
finite-sample lower bounds that hold on every sample path.
"""

from .errors import (
    ContractViolation,
    DomainError,
    HodgesError,
    InsufficientDataError,
    NumericalRankError,
    ScheduleError,
)
from .partition import (
    CovSpec,
    IndexPartition,
    RegionLabel,
    RegionSpec,
    ScheduleReport,
    ThresholdSchedule,
    classify_region,
    correction_gain,
    default_schedule,
    dist_to_active_region,
    dist_to_sparse_set,
    oracle_block_cov,
    partition_from_point,
    power_schedule,
    schur_asymptotic_cov,
    validate_schedule,
)
from .estimators import (
    BaseEstimate,
    HodgesResult,
    SmoothConfig,
    classical_hodges,
    classical_hodges_batch,
    oracle_hodges,
    oracle_hodges_batch,
    pseudo_oracle_estimate,
    smooth_oracle_hodges,
    smooth_oracle_hodges_batch,
)
from .models import (
    Dataset,
    LinearModelDGP,
    NormalMeanDGP,
    UniformBoxDGP,
    dataset_from_csv,
    dataset_to_csv,
    lse_linear,
    mle_normal_mean,
    mle_uniform_box,
    orthonormal_design,
    sample_base_estimates,
    simulate,
)
from .baselines import (
    CDResult,
    PenaltySpec,
    coordinate_descent_pls,
    oracle_lse,
    penalized_ls_objective,
    penalty_value,
    threshold,
)
from .risk import (
    BaseRule,
    ClassicalHodgesRule,
    IndicatorLoss,
    OracleHodgesRule,
    PowerLoss,
    RateLoss,
    RiskCurve,
    ScaledMSE,
    SmoothOracleHodgesRule,
    ThresholdRule,
    closed_form_loss_moments_normal_1d,
    closed_form_risk_normal_1d,
    empirical_scaled_cov,
    mc_risk,
    mc_risk_multi,
    read_risk_csv,
    scaled_mse_sweep,
    selection_probability,
    tail_mass_diagnostic,
    write_risk_csv,
)
from .bounds import (
    BoundSweepReport,
    RingRegion,
    classical_bound_sweep,
    first_admissible_n,
    loss_corollary_check,
    oracle_bound_sweep,
    ring_region,
    verify_classical_bound,
    verify_oracle_bound,
    worst_case_probe,
)
from .rng import substream

__version__ = "0.1.0"
