"""Chart rendering for risk-curve CSVs and bound-region reports."""

from .charts import (
    ChartSpec,
    RenderResult,
    SchemaError,
    Series,
    build_series,
    read_curve_rows,
    render_risk_curves,
)

__version__ = "0.1.0"
