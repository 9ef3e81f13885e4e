"""Risk-curve chart rendering.

Reads the risk-curve CSV interchange format (header row
``estimator_id, loss_id, n, theta_1..theta_d, risk, std_error, reps, seed``;
leading ``#`` lines are provenance comments), draws one line per
``(n, estimator_id)`` series with a legend naming each ``n``, a horizontal
reference line at 1, and optional shaded parameter-space regions taken from a
bound-verification JSON report. Purely presentational: no statistic is ever
recomputed, and a built-in round-trip check re-extracts every plotted point
from the figure and compares it against the source values.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

REQUIRED_COLUMNS = ("estimator_id", "loss_id", "n", "theta_1", "risk",
                    "std_error", "reps", "seed")


class SchemaError(ValueError):
    """The input file does not match the documented schema."""


@dataclass(frozen=True)
class ChartSpec:
    """What to draw and where to write it."""

    csv_paths: tuple[str, ...]
    out_path: str
    overlay_path: str | None = None
    group_column: str = "n"
    x_column: str = "theta_1"
    x_label: str = "true parameter"
    y_label: str = "scaled risk"
    title: str | None = None

    def __post_init__(self):
        if not self.csv_paths:
            raise SchemaError("at least one CSV path is required")
        for path in self.csv_paths:
            if not Path(path).is_file():
                raise SchemaError(f"input file does not exist: {path}")
        if self.overlay_path is not None and not Path(self.overlay_path).is_file():
            raise SchemaError(f"overlay file does not exist: {self.overlay_path}")


@dataclass(frozen=True)
class Series:
    """One plotted line."""

    label: str
    n: int
    estimator_id: str
    x: np.ndarray
    y: np.ndarray
    dashed: bool


@dataclass(frozen=True)
class RenderResult:
    """Round-trip record: exactly what ended up on the canvas."""

    out_path: str
    series: tuple[Series, ...]
    extracted_points: tuple[np.ndarray, ...] = field(repr=False, default=())


def read_curve_rows(path) -> list[dict]:
    """Parse one CSV file, skipping ``#`` comment lines, validating columns."""
    with open(path, newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: file is empty") from None
        missing = [col for col in REQUIRED_COLUMNS if col not in header]
        if missing:
            raise SchemaError(
                f"{path}: missing required columns {missing}; found {header}"
            )
        index = {col: header.index(col) for col in header}
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            rows.append({col: row[i] for col, i in index.items()})
    return rows


def build_series(rows: Sequence[dict], group_column: str, x_column: str) -> list[Series]:
    """Group rows into plottable series, one per (group value, estimator)."""
    if not rows:
        raise SchemaError("no data rows to plot")
    if group_column not in rows[0] or x_column not in rows[0]:
        raise SchemaError(
            f"grouping/x columns {group_column!r}, {x_column!r} not in the data"
        )
    groups: dict[tuple, list[dict]] = {}
    for row in rows:
        groups.setdefault((int(float(row["n"])), row["estimator_id"]), []).append(row)
    series = []
    for (n, estimator_id) in sorted(groups, key=lambda k: (k[0], k[1])):
        block = groups[(n, estimator_id)]
        x = np.array([float(r[x_column]) for r in block])
        y = np.array([float(r["risk"]) for r in block])
        order = np.argsort(x, kind="stable")
        exact = estimator_id.endswith("_exact")
        label = f"n={n} (exact)" if exact else f"n={n}"
        series.append(Series(label=label, n=n, estimator_id=estimator_id,
                             x=x[order], y=y[order], dashed=exact))
    return series


def _overlay_bands(overlay_path) -> list[tuple[float, float, str]]:
    """Shaded x-intervals from a bound-verification report (1-D regions only)."""
    with open(overlay_path) as fh:
        payload = json.load(fh)
    reports = payload.get("reports", [])
    bands = []
    for report in reports:
        region = report.get("region", {})
        center = region.get("center", [])
        if len(center) != 1:
            continue
        c = float(center[0])
        if region.get("kind") == "ring":
            inner = float(region["inner_radius"])
            outer = float(region["outer_radius"])
            bands.append((c - outer, c - inner, "checked ring"))
            bands.append((c + inner, c + outer, "checked ring"))
        elif region.get("kind") == "separated":
            a = float(region["thresholds"][0])
            tube = float(region["tube_radius"])
            bands.append((c - a + tube, c - tube, "checked band"))
            bands.append((c + tube, c + a - tube, "checked band"))
    return bands


def render_risk_curves(spec: ChartSpec) -> RenderResult:
    """Draw the chart, verify the round trip, and write the image file.

    Raises :class:`SchemaError` on malformed inputs and ``AssertionError`` if
    any plotted point differs from its source value by more than 1e-12.
    """
    rows = []
    for path in spec.csv_paths:
        rows.extend(read_curve_rows(path))
    series = build_series(rows, spec.group_column, spec.x_column)

    fig, ax = plt.subplots(figsize=(8, 5.5))
    lines = []
    for s in series:
        (line,) = ax.plot(s.x, s.y, linestyle="--" if s.dashed else "-",
                          linewidth=1.2, label=s.label)
        lines.append(line)
    ax.axhline(1.0, color="0.4", linewidth=0.8, zorder=0,
               label="base estimator (scaled risk 1)")
    if spec.overlay_path is not None:
        seen = set()
        for lo, hi, name in _overlay_bands(spec.overlay_path):
            ax.axvspan(lo, hi, alpha=0.12, color="0.3",
                       label=None if name in seen else name)
            seen.add(name)
    ax.set_xlabel(spec.x_label)
    ax.set_ylabel(spec.y_label)
    if spec.title:
        ax.set_title(spec.title)
    ax.legend()

    extracted = []
    for s, line in zip(series, lines):
        points = line.get_xydata()
        assert points.shape == (s.x.size, 2), "rendering dropped points"
        assert np.max(np.abs(points[:, 0] - s.x)) <= 1e-12
        assert np.max(np.abs(points[:, 1] - s.y)) <= 1e-12
        extracted.append(points)

    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)
    return RenderResult(out_path=str(spec.out_path), series=tuple(series),
                        extracted_points=tuple(extracted))
