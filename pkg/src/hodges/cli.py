"""Command-line front end.

Subcommands: ``fig1`` (headline scaled-MSE curves with the closed-form
overlay), ``risk-sweep`` (generic Monte Carlo risk curves), ``verify-bounds``
(deterministic lower-bound sweeps, JSON report), ``oracle-check``
(selection-probability and scaled-covariance diagnostics), ``baseline-compare``
(shared-draw comparison against thresholding baselines) and ``simulate``
(dataset export).

Configuration is a JSON object read from ``--config``; command-line flags
override file values, and the fully resolved configuration is embedded in
every output for provenance. Exit codes: 0 success, 1 a verified assertion
was violated, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from scipy.stats import norm as _norm

from . import bounds as bounds_mod
from .baselines import PenaltySpec
from .errors import HodgesError, ContractViolation
from .models import (
    LinearModelDGP,
    NormalMeanDGP,
    UniformBoxDGP,
    dataset_to_csv,
    orthonormal_design,
    simulate,
)
from .partition import CovSpec, ThresholdSchedule, power_schedule
from .risk import (
    BaseRule,
    ClassicalHodgesRule,
    OracleHodgesRule,
    ScaledMSE,
    SmoothOracleHodgesRule,
    ThresholdRule,
    empirical_scaled_cov,
    mc_risk_multi,
    scaled_mse_sweep,
    selection_probability,
    write_risk_csv,
)

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_CONFIG = 2


DEFAULTS: dict[str, dict] = {
    "fig1": {
        "seed": 20240801,
        "reps": 100_000,
        "step": 0.01,
        "grid_limit": 1.5,
        "n_values": [5, 50, 500],
        "workers": 1,
        "out": "out",
    },
    "risk-sweep": {
        "seed": 20240801,
        "reps": 10_000,
        "n": 500,
        "dgp": {"kind": "normal_mean", "theta": [0.0], "sigma": 1.0},
        "estimators": [{"kind": "base"}, {"kind": "classical_hodges"}],
        "loss": {"family": "scaled_mse"},
        "grid": {"start": -1.5, "stop": 1.5, "step": 0.05, "coordinate": 0},
        "schedule": {"a_exponent": -0.25, "r_exponent": 0.5, "a_scale": 1.0},
        "workers": 1,
        "out": "out",
    },
    "verify-bounds": {
        "seed": 20240801,
        "n": 500,
        "k": 1.0,
        "points": 100,
        "realizations": 1_000_000,
        "schedule": {"a_exponent": -0.25, "r_exponent": 0.5, "a_scale": 1.0},
        "classical": {"d": 1, "sigma": 1.0},
        "oracle": [
            {"d": 2, "V": "identity"},
            {"d": 2, "V": [[2.0, 1.0], [1.0, 2.0]]},
            {"d": 3, "V": "identity"},
            {"d": 3, "V": [[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]]},
        ],
        "worst_case_n": [5, 50, 500],
        "out": "out",
    },
    "oracle-check": {
        "seed": 20240801,
        "dgp": {"kind": "normal_mean", "theta": [2.0, 0.0], "sigma": 1.0},
        "center": [0.0, 0.0],
        "n_values": [100, 400, 1600, 6400],
        "selection_reps": 10_000,
        "covariance": {
            "n": 6400,
            "reps": 10_000,
            "V": [[2.0, 1.0], [1.0, 2.0]],
        },
        "schedule": {"a_exponent": -0.25, "r_exponent": 0.5, "a_scale": 1.0},
        "min_final_probability": 0.95,
        "out": "out",
    },
    "baseline-compare": {
        "seed": 20240801,
        "reps": 10_000,
        "n": 500,
        "dgp": {"kind": "normal_mean", "theta": [0.0], "sigma": 1.0},
        "grid": {"start": -1.5, "stop": 1.5, "step": 0.05, "coordinate": 0},
        "schedule": {"a_exponent": -0.25, "r_exponent": 0.5, "a_scale": 1.0},
        "lambda": 0.5,
        "scad_a": 3.7,
        "workers": 1,
        "out": "out",
    },
    "simulate": {
        "seed": 20240801,
        "n": 100,
        "dgp": {"kind": "normal_mean", "theta": [0.0], "sigma": 1.0},
        "out": "out",
        "filename": "dataset.csv",
    },
}


# ---------------------------------------------------------------------------
# Config plumbing
# ---------------------------------------------------------------------------


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    config = json.loads(json.dumps(DEFAULTS[command]))  # deep copy
    if args.config is not None:
        try:
            with open(args.config) as fh:
                file_config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ContractViolation(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_config, dict):
            raise ContractViolation("config file must hold a JSON object")
        config.update(file_config)
    for flag in ("seed", "workers", "out"):
        value = getattr(args, flag, None)
        if value is not None:
            config[flag] = value
    config["command"] = command
    return config


def _out_dir(config: dict) -> Path:
    out = Path(config["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _build_dgp(spec: dict, n: int):
    kind = spec.get("kind")
    if kind == "normal_mean":
        theta = np.atleast_1d(np.asarray(spec["theta"], dtype=float))
        sigma = spec.get("sigma", 1.0)
        sigma = np.eye(theta.size) * float(sigma) if np.isscalar(sigma) else np.asarray(sigma, float)
        return NormalMeanDGP(theta=theta, sigma=sigma)
    if kind == "uniform_box":
        return UniformBoxDGP(theta=np.asarray(spec["theta"], dtype=float))
    if kind == "linear_model":
        beta = np.atleast_1d(np.asarray(spec["beta"], dtype=float))
        design = spec.get("design", "orthonormal")
        if isinstance(design, str):
            if design != "orthonormal":
                raise ContractViolation(f"unknown design rule {design!r}")
            X = orthonormal_design(n, beta.size, seed=int(spec.get("design_seed", 0)))
        else:
            X = np.asarray(design, dtype=float)
        return LinearModelDGP(beta=beta, sigma2=float(spec.get("sigma2", 1.0)), design=X)
    raise ContractViolation(f"unknown dgp kind {kind!r}")


def _build_schedule(spec: dict, d: int) -> ThresholdSchedule:
    return power_schedule(
        d,
        a_exponent=float(spec.get("a_exponent", -0.25)),
        r_exponent=float(spec.get("r_exponent", 0.5)),
        a_scale=float(spec.get("a_scale", 1.0)),
    )


def _build_grid(spec: dict, base_theta: np.ndarray) -> np.ndarray:
    if "values" in spec:
        grid = np.atleast_2d(np.asarray(spec["values"], dtype=float))
        if grid.shape[1] != base_theta.size:
            grid = grid.reshape(-1, base_theta.size)
        return grid
    step = float(spec.get("step", 0.05))
    if step <= 0.0:
        raise ContractViolation(f"grid step must be positive, got {step}")
    start, stop = float(spec["start"]), float(spec["stop"])
    count = int(round((stop - start) / step)) + 1
    values = np.linspace(start, stop, count)
    coord = int(spec.get("coordinate", 0))
    grid = np.tile(base_theta, (count, 1))
    grid[:, coord] = values
    return grid


def _build_estimator(spec: dict, d: int, center: np.ndarray, schedule: ThresholdSchedule,
                     lam: float = 0.5, scad_a: float = 3.7):
    kind = spec.get("kind", "base")
    if kind == "base":
        return BaseRule()
    if kind == "classical_hodges":
        return ClassicalHodgesRule(center=center, schedule=schedule)
    if kind == "oracle_hodges":
        return OracleHodgesRule(center=center, schedule=schedule)
    if kind == "smooth_oracle_hodges":
        return SmoothOracleHodgesRule(center=center,
                                      interp=spec.get("interp", "piecewise_linear"))
    if kind in ("hard", "soft", "scad"):
        pen = PenaltySpec(kind=kind, lam=float(spec.get("lambda", lam)),
                          a=float(spec.get("a", scad_a)))
        return ThresholdRule(pen=pen, center=center)
    raise ContractViolation(f"unknown estimator kind {kind!r}")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_fig1(config: dict) -> int:
    step = float(config["step"])
    if step <= 0.0:
        raise ContractViolation(f"grid step must be positive, got {step}")
    out = _out_dir(config)
    sweeps = scaled_mse_sweep(
        seed=int(config["seed"]), reps=int(config["reps"]), step=step,
        n_values=[int(n) for n in config["n_values"]],
        grid_limit=float(config["grid_limit"]), workers=int(config["workers"]),
    )
    all_curves = []
    for n, pair in sweeps.items():
        curves = [pair["mc"], pair["exact"]]
        write_risk_csv(curves, out / f"fig1_n{n}.csv", config=config)
        all_curves.extend(curves)
    write_risk_csv(all_curves, out / "fig1_combined.csv", config=config)
    print(f"wrote {len(sweeps)} per-n files and fig1_combined.csv under {out}")
    return EXIT_OK


def cmd_risk_sweep(config: dict) -> int:
    n = int(config["n"])
    dgp = _build_dgp(config["dgp"], n)
    d = np.atleast_1d(getattr(dgp, "theta", getattr(dgp, "beta", None))).size
    center = np.asarray(config.get("center", [0.0] * d), dtype=float)
    schedule = _build_schedule(config.get("schedule", {}), d)
    rules = [
        _build_estimator(spec, d, center, schedule)
        for spec in config["estimators"]
    ]
    loss_spec = config.get("loss", {"family": "scaled_mse"})
    loss = _build_loss(loss_spec)
    grid = _build_grid(config["grid"], np.atleast_1d(
        getattr(dgp, "theta", getattr(dgp, "beta", None))))
    curves = mc_risk_multi(rules, dgp, grid, n=n, reps=int(config["reps"]),
                           loss=loss, seed=int(config["seed"]),
                           workers=int(config["workers"]))
    out = _out_dir(config)
    path = out / "risk_sweep.csv"
    write_risk_csv(curves, path, config=config)
    print(f"wrote {path}")
    return EXIT_OK


def _build_loss(spec: dict):
    from .risk import IndicatorLoss, PowerLoss, RateLoss
    family = spec.get("family", "scaled_mse")
    if family == "scaled_mse":
        return ScaledMSE()
    if family == "power":
        return PowerLoss(p=float(spec.get("p", 2.0)))
    if family == "indicator":
        return IndicatorLoss(z=float(spec.get("z", 1.0)))
    if family == "rate_loss":
        raise ContractViolation("rate_loss requires a callable; use the library API")
    raise ContractViolation(f"unknown loss family {family!r}")


def cmd_verify_bounds(config: dict) -> int:
    seed = int(config["seed"])
    n = int(config["n"])
    k = float(config["k"])
    points = int(config["points"])
    realizations = int(config["realizations"])
    reports = []

    cl = config["classical"]
    d = int(cl.get("d", 1))
    schedule = _build_schedule(config.get("schedule", {}), d)
    sigma = np.eye(d) * float(cl.get("sigma", 1.0))
    reports.append(bounds_mod.classical_bound_sweep(
        n=n, k=k, schedule=schedule, c=np.zeros(d), sigma=sigma, seed=seed,
        n_points=points, realizations_per_point=realizations,
    ))

    for case in config["oracle"]:
        d = int(case["d"])
        schedule = _build_schedule(config.get("schedule", {}), d)
        V = np.eye(d) if case.get("V") == "identity" else np.asarray(case["V"], float)
        reports.append(bounds_mod.oracle_bound_sweep(
            n=n, k=k, schedule=schedule, c=np.zeros(d), V=CovSpec(V), seed=seed,
            n_points=points, realizations_per_point=realizations,
        ))

    worst = bounds_mod.worst_case_probe(
        _build_schedule(config.get("schedule", {}), 1),
        [int(x) for x in config["worst_case_n"]],
    )
    out = _out_dir(config)
    path = out / "bounds_report.json"
    payload = {
        "config": config,
        "reports": [r.to_json_dict() for r in reports],
        "worst_case_table": [
            {"n": row.n, "r_n": row.r_n, "a_min": row.a_min,
             "bound": row.bound, "bound_squared": row.bound_squared}
            for row in worst
        ],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
    bad = [r for r in reports if not r.ok]
    for r in reports:
        status = "OK" if r.ok else "VIOLATED"
        print(f"{r.theorem} bound (d={len(np.atleast_1d(r.region['center']))}, n={r.n}, "
              f"k={r.k}): {r.points_checked} points x {r.realizations_per_point} "
              f"realizations -> {status}")
    print(f"wrote {path}")
    return EXIT_VIOLATION if bad else EXIT_OK


def cmd_oracle_check(config: dict) -> int:
    seed = int(config["seed"])
    dgp_spec = config["dgp"]
    center = np.asarray(config["center"], dtype=float)
    d = center.size
    schedule = _build_schedule(config.get("schedule", {}), d)
    n_values = [int(n) for n in config["n_values"]]
    reps = int(config["selection_reps"])
    rule = OracleHodgesRule(center=center, schedule=schedule)

    rows = []
    for n in n_values:
        dgp = _build_dgp(dgp_spec, n)
        sel = selection_probability(rule, dgp, np.atleast_1d(
            getattr(dgp, "theta", getattr(dgp, "beta", None))), n=n, reps=reps, seed=seed)
        a = schedule.thresholds(n)
        exact = _exact_selection_probabilities(dgp, a, n)
        rows.append((n, sel, exact))

    theta_true = np.atleast_1d(np.asarray(
        dgp_spec.get("theta", dgp_spec.get("beta")), dtype=float))
    inactive = [j for j in range(d) if theta_true[j] == center[j]]

    ok = True
    checks = []
    prev = None
    for n, sel, exact in rows:
        for j in inactive:
            if exact is not None:
                se = max(sel.std_errors[j], np.sqrt(exact[j] * (1 - exact[j]) / reps))
                match = abs(sel.probabilities[j] - exact[j]) <= 3.0 * se + 1e-12
                ok &= match
                checks.append({"check": "matches_exact", "n": n, "coordinate": j,
                               "estimate": sel.probabilities[j], "exact": exact[j],
                               "pass": bool(match)})
        if prev is not None:
            for j in inactive:
                slack = 3.0 * float(np.hypot(prev.std_errors[j], sel.std_errors[j]))
                monotone = sel.probabilities[j] >= prev.probabilities[j] - slack
                ok &= monotone
                checks.append({"check": "monotone", "n": n, "coordinate": j,
                               "pass": bool(monotone)})
        prev = sel
    final = rows[-1][1]
    for j in inactive:
        passed = final.probabilities[j] >= float(config["min_final_probability"])
        ok &= passed
        checks.append({"check": "final_probability", "n": rows[-1][0], "coordinate": j,
                       "estimate": final.probabilities[j], "pass": bool(passed)})

    cov_summary = None
    cov_cfg = config.get("covariance")
    if cov_cfg:
        n_cov = int(cov_cfg["n"])
        V = np.asarray(cov_cfg["V"], dtype=float)
        sigma = np.linalg.inv(V)
        dgp = NormalMeanDGP(theta=theta_true, sigma=sigma)
        result = empirical_scaled_cov(rule, dgp, theta_true, n=n_cov,
                                      reps=int(cov_cfg["reps"]), seed=seed)
        from .partition import schur_asymptotic_cov
        b = list(result.true_active.b)
        oracle_cov = result.oracle_cov_active
        marginal_cov = schur_asymptotic_cov(CovSpec(V), result.true_active)
        emp = result.cov[np.ix_(b, b)]
        se = result.std_errors[np.ix_(b, b)]
        matches = np.all(np.abs(emp - oracle_cov) <= 5.0 * se)
        below = np.all(np.diag(emp) < np.diag(marginal_cov))
        gap_ok = np.all(np.abs((marginal_cov - emp) - (marginal_cov - oracle_cov))
                        <= 5.0 * se)
        ok &= bool(matches and below and gap_ok)
        cov_summary = {
            "n": n_cov,
            "active_set": b,
            "empirical": emp.tolist(),
            "reduced_model": oracle_cov.tolist(),
            "marginal": marginal_cov.tolist(),
            "n_matching": result.n_matching,
            "matches_reduced_model": bool(matches),
            "below_marginal": bool(below),
            "gap_matches": bool(gap_ok),
        }

    out = _out_dir(config)
    csv_path = out / "oracle_check.csv"
    with open(csv_path, "w") as fh:
        fh.write("# run_config: " + json.dumps(config, sort_keys=True) + "\n")
        fh.write("n,coordinate,probability,std_error,exact\n")
        for n, sel, exact in rows:
            for j in range(d):
                exact_j = "" if exact is None else f"{exact[j]:.17g}"
                fh.write(f"{n},{j},{sel.probabilities[j]:.17g},"
                         f"{sel.std_errors[j]:.17g},{exact_j}\n")
    json_path = out / "oracle_check.json"
    with open(json_path, "w") as fh:
        json.dump({"config": config, "checks": checks, "covariance": cov_summary,
                   "pass": bool(ok)}, fh, indent=2)
    print(f"wrote {csv_path} and {json_path}; overall: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VIOLATION


def _exact_selection_probabilities(dgp, a: np.ndarray, n: int):
    """Exact per-coordinate pin probabilities where available (normal mean)."""
    if isinstance(dgp, NormalMeanDGP):
        sd = np.sqrt(np.diag(dgp.sigma) / n)
        # coordinate pinned when the estimate stays within the threshold of c;
        # exact only when theta_j == c_j, which is where it is consulted
        return _norm.cdf(a / sd) - _norm.cdf(-a / sd)
    return None


def cmd_baseline_compare(config: dict) -> int:
    n = int(config["n"])
    dgp = _build_dgp(config["dgp"], n)
    theta0 = np.atleast_1d(getattr(dgp, "theta", getattr(dgp, "beta", None)))
    d = theta0.size
    center = np.asarray(config.get("center", [0.0] * d), dtype=float)
    schedule = _build_schedule(config.get("schedule", {}), d)
    lam = float(config["lambda"])
    scad_a = float(config["scad_a"])
    rules = [
        BaseRule(),
        ClassicalHodgesRule(center=center, schedule=schedule),
        OracleHodgesRule(center=center, schedule=schedule),
        ThresholdRule(pen=PenaltySpec("hard", lam), center=center),
        ThresholdRule(pen=PenaltySpec("soft", lam), center=center),
        ThresholdRule(pen=PenaltySpec("scad", lam, scad_a), center=center),
    ]
    grid = _build_grid(config["grid"], theta0)
    curves = mc_risk_multi(rules, dgp, grid, n=n, reps=int(config["reps"]),
                           loss=ScaledMSE(), seed=int(config["seed"]),
                           workers=int(config["workers"]))
    out = _out_dir(config)
    path = out / "baseline_compare.csv"
    write_risk_csv(curves, path, config=config)
    print(f"wrote {path}")
    return EXIT_OK


def cmd_simulate(config: dict) -> int:
    n = int(config["n"])
    dgp = _build_dgp(config["dgp"], n)
    data = simulate(dgp, n, int(config["seed"]))
    out = _out_dir(config)
    path = out / config.get("filename", "dataset.csv")
    dataset_to_csv(data, path)
    print(f"wrote {path}")
    return EXIT_OK


COMMANDS = {
    "fig1": cmd_fig1,
    "risk-sweep": cmd_risk_sweep,
    "verify-bounds": cmd_verify_bounds,
    "oracle-check": cmd_oracle_check,
    "baseline-compare": cmd_baseline_compare,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hodges",
        description="Collapse-rule estimators: risk curves, oracle-property "
                    "diagnostics and lower-bound verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        p.add_argument("--workers", type=int, default=None, help="parallel workers")
        p.add_argument("--out", type=str, default=None, help="output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args.command, args)
        return COMMANDS[args.command](config)
    except HodgesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
