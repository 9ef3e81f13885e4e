import json

import numpy as np
import pytest

from plotkit import ChartSpec, SchemaError, read_curve_rows, render_risk_curves
from plotkit.cli import main

HEADER = "estimator_id,loss_id,n,theta_1,risk,std_error,reps,seed"


def write_curves_csv(path, n_values=(5, 50, 500), points=13, comment=True,
                     with_exact=False, seed=3):
    """Synthesize a file in the interchange schema with 17-digit values."""
    rng = np.random.default_rng(seed)
    lines = []
    if comment:
        lines.append('# run_config: {"seed": 3}')
    lines.append(HEADER)
    values = {}
    for n in n_values:
        thetas = np.linspace(-1.5, 1.5, points)
        risks = 1.0 + rng.uniform(0.0, 10.0, size=points)
        values[n] = (thetas, risks)
        for t, r in zip(thetas, risks):
            lines.append(f"classical,scaled_mse,{n},{t:.17g},{r:.17g},0.01,1000,3")
        if with_exact:
            for t, r in zip(thetas, risks):
                lines.append(
                    f"classical_exact,scaled_mse,{n},{t:.17g},{r * 0.99:.17g},0,0,3")
    path.write_text("\n".join(lines) + "\n")
    return values


class TestReader:
    def test_reads_rows_and_skips_comments(self, tmp_path):
        path = tmp_path / "curves.csv"
        write_curves_csv(path, n_values=(5,), points=4)
        rows = read_curve_rows(path)
        assert len(rows) == 4
        assert rows[0]["estimator_id"] == "classical"

    def test_missing_column_diagnostics(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("estimator_id,n,theta_1,risk\nclassical,5,0.0,1.0\n")
        with pytest.raises(SchemaError) as err:
            read_curve_rows(path)
        assert "loss_id" in str(err.value) and "std_error" in str(err.value)

    def test_ragged_row_rejected(self, tmp_path):
        path = tmp_path / "ragged.csv"
        path.write_text(HEADER + "\nclassical,scaled_mse,5,0.0\n")
        with pytest.raises(SchemaError):
            read_curve_rows(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(SchemaError):
            ChartSpec(csv_paths=(str(tmp_path / "nope.csv"),),
                      out_path=str(tmp_path / "o.png"))


class TestRender:
    def test_round_trip_to_1e_minus_12(self, tmp_path):
        path = tmp_path / "curves.csv"
        values = write_curves_csv(path)
        spec = ChartSpec(csv_paths=(str(path),), out_path=str(tmp_path / "o.png"))
        result = render_risk_curves(spec)
        assert (tmp_path / "o.png").is_file()
        by_n = {s.n: (s, pts) for s, pts in
                zip(result.series, result.extracted_points)}
        for n, (thetas, risks) in values.items():
            s, pts = by_n[n]
            assert np.max(np.abs(pts[:, 0] - thetas)) <= 1e-12
            assert np.max(np.abs(pts[:, 1] - risks)) <= 1e-12

    def test_one_series_per_n_with_reference_line(self, tmp_path):
        path = tmp_path / "curves.csv"
        write_curves_csv(path)
        spec = ChartSpec(csv_paths=(str(path),), out_path=str(tmp_path / "o.png"))
        result = render_risk_curves(spec)
        assert [s.label for s in result.series] == ["n=5", "n=50", "n=500"]

    def test_exact_series_styled_separately(self, tmp_path):
        path = tmp_path / "curves.csv"
        write_curves_csv(path, n_values=(500,), with_exact=True)
        spec = ChartSpec(csv_paths=(str(path),), out_path=str(tmp_path / "o.png"))
        result = render_risk_curves(spec)
        labels = [s.label for s in result.series]
        assert labels == ["n=500", "n=500 (exact)"]
        assert [s.dashed for s in result.series] == [False, True]

    def test_multiple_input_files(self, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_curves_csv(p1, n_values=(5,))
        write_curves_csv(p2, n_values=(50,))
        spec = ChartSpec(csv_paths=(str(p1), str(p2)),
                         out_path=str(tmp_path / "o.png"))
        result = render_risk_curves(spec)
        assert [s.n for s in result.series] == [5, 50]

    def test_overlay_bands(self, tmp_path):
        path = tmp_path / "curves.csv"
        write_curves_csv(path, n_values=(500,))
        overlay = tmp_path / "report.json"
        overlay.write_text(json.dumps({
            "reports": [{
                "theorem": "classical",
                "region": {"kind": "ring", "center": [0.0],
                           "inner_radius": 0.0447, "outer_radius": 0.1668},
            }],
        }))
        spec = ChartSpec(csv_paths=(str(path),), out_path=str(tmp_path / "o.png"),
                         overlay_path=str(overlay))
        result = render_risk_curves(spec)
        assert (tmp_path / "o.png").is_file()
        assert len(result.series) == 1

    def test_no_overlay_renders_without_bands(self, tmp_path):
        path = tmp_path / "curves.csv"
        write_curves_csv(path, n_values=(5,))
        spec = ChartSpec(csv_paths=(str(path),), out_path=str(tmp_path / "o.png"))
        render_risk_curves(spec)
        assert (tmp_path / "o.png").is_file()


class TestCLI:
    def test_renders_and_exits_zero(self, tmp_path, capsys):
        path = tmp_path / "curves.csv"
        write_curves_csv(path)
        out = tmp_path / "chart.png"
        rc = main(["risk-curves", "--csv", str(path), "--out", str(out)])
        assert rc == 0 and out.is_file()
        assert "3 series" in capsys.readouterr().out

    def test_schema_error_exits_two(self, tmp_path, capsys):
        path = tmp_path / "bad.csv"
        path.write_text("estimator_id,n\nclassical,5\n")
        rc = main(["risk-curves", "--csv", str(path),
                   "--out", str(tmp_path / "o.png")])
        assert rc == 2
        assert "missing required columns" in capsys.readouterr().err

    def test_overlay_flag(self, tmp_path):
        path = tmp_path / "curves.csv"
        write_curves_csv(path, n_values=(500,))
        overlay = tmp_path / "report.json"
        overlay.write_text(json.dumps({"reports": []}))
        rc = main(["risk-curves", "--csv", str(path), "--overlay", str(overlay),
                   "--out", str(tmp_path / "o.png")])
        assert rc == 0
