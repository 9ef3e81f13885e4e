"""Command-line entry point: ``plotkit <chart> --csv PATH... [--overlay PATH] --out PATH``."""

from __future__ import annotations

import argparse
import sys

from .charts import ChartSpec, SchemaError, render_risk_curves

CHARTS = {"risk-curves": render_risk_curves}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotkit",
        description="Render charts from risk-curve CSVs and bound reports.",
    )
    parser.add_argument("chart", choices=sorted(CHARTS), help="chart kind")
    parser.add_argument("--csv", nargs="+", required=True, help="input CSV file(s)")
    parser.add_argument("--overlay", default=None, help="bound-report JSON to shade")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", default=None)
    parser.add_argument("--x-label", default="true parameter")
    parser.add_argument("--y-label", default="scaled risk")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = ChartSpec(
            csv_paths=tuple(args.csv),
            out_path=args.out,
            overlay_path=args.overlay,
            title=args.title,
            x_label=args.x_label,
            y_label=args.y_label,
        )
        result = CHARTS[args.chart](spec)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {result.out_path} ({len(result.series)} series)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
