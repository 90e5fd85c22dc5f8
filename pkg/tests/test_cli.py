import json
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from tslens.cli import main

ECHO = str(Path(__file__).resolve().parent.parent / "scripts" / "echo_forecaster.py")


def run(capsys, *argv) -> tuple[int, str, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture()
def multi_csv(tmp_path):
    rng = np.random.default_rng(23)
    n = 240
    t = np.arange(n)
    a = 5.0 + np.sin(2 * np.pi * t / 6.0) + 0.05 * rng.standard_normal(n)
    b = -2.0 + np.cos(2 * np.pi * t / 6.0) + 0.05 * rng.standard_normal(n)
    path = tmp_path / "multi.csv"
    with open(path, "w", newline="\n") as handle:
        handle.write("alpha,beta\n")
        for i in range(n):
            handle.write(f"{float(a[i])!r},{float(b[i])!r}\n")
    return path


class TestExplainStep:
    def test_naive_point_scan_vector(self, capsys, desk_csv):
        # per window the naive ratio at t=b is +-1 (sign follows the last
        # standardized value); every other step is exactly zero
        code, out, err = run(
            capsys, "explain-step", "--data", str(desk_csv), "--model", "builtin:naive",
            "--property", "mean", "--width", "0", "--window-index", "0",
        )
        assert code == 0, err
        artifact = json.loads(out)
        assert artifact["kind"] == "timestep_importance"
        values = artifact["values"]
        assert len(values) == 20
        assert abs(values[-1]) == pytest.approx(1.0, abs=1e-9)
        assert max(abs(v) for v in values[:-1]) < 1e-12

    def test_signed_importances_for_max_property(self, capsys, desk_csv):
        code, out, err = run(
            capsys, "explain-step", "--data", str(desk_csv), "--model", "builtin:linear",
            "--property", "max", "--window-index", "0",
        )
        assert code == 0, err
        artifact = json.loads(out)
        assert artifact["sample_count"] == 1
        assert len(artifact["values"]) == 20

    def test_bad_property_token(self, capsys, desk_csv):
        code, out, err = run(
            capsys, "explain-step", "--data", str(desk_csv), "--model", "builtin:naive",
            "--property", "median",
        )
        assert code == 2
        diag = json.loads(err)
        assert diag["error"] == "usage"
        assert "median" in diag["message"] and "step:<n>" in diag["message"]


class TestExplainMatrix:
    def test_seasonal_naive_labeled_diagonals(self, capsys, desk_csv, tmp_path):
        out_path = tmp_path / "matrix.json"
        code, _out, err = run(
            capsys, "explain-matrix", "--data", str(desk_csv),
            "--model", "builtin:seasonal-naive:12", "--seasonality", "12",
            "--out", str(out_path),
        )
        assert code == 0, err
        artifact = json.loads(out_path.read_text())
        assert artifact["pattern"]["class"] == "diagonals"
        assert len(artifact["values"]) == 20 and len(artifact["values"][0]) == 20

    def test_naive_labeled_last_timestep(self, capsys, desk_csv):
        code, out, err = run(
            capsys, "explain-matrix", "--data", str(desk_csv), "--model", "builtin:naive",
        )
        assert code == 0, err
        assert json.loads(out)["pattern"]["class"] == "last_timestep"

    def test_byte_determinism_and_jobs(self, capsys, desk_csv, tmp_path):
        paths = [tmp_path / f"m{i}.json" for i in range(3)]
        jobs = ("1", "1", "4")
        for path, j in zip(paths, jobs):
            code, _out, err = run(
                capsys, "explain-matrix", "--data", str(desk_csv),
                "--model", "builtin:seasonal-naive:12", "--seasonality", "12",
                "--jobs", j, "--out", str(path),
            )
            assert code == 0, err
        first, second, parallel = (p.read_bytes() for p in paths)
        assert first == second
        assert first == parallel

    def test_channel_flags_must_pair(self, capsys, multi_csv):
        code, _out, err = run(
            capsys, "explain-matrix", "--data", str(multi_csv), "--model", "builtin:naive",
            "--lookback", "12", "--horizon", "6", "--to-channel", "1",
        )
        assert code == 2
        assert "together" in json.loads(err)["message"]

    def test_multivariate_channel_pair(self, capsys, multi_csv):
        code, out, err = run(
            capsys, "explain-matrix", "--data", str(multi_csv), "--model", "builtin:naive",
            "--lookback", "12", "--horizon", "6",
            "--from-channel", "0", "--to-channel", "1",
        )
        assert code == 0, err
        values = np.array(json.loads(out)["values"])
        np.testing.assert_array_equal(values, np.zeros((12, 6)))  # naive is separable

    def test_svg_with_sibling_json(self, capsys, desk_csv, tmp_path):
        svg_path = tmp_path / "heat.svg"
        code, _out, err = run(
            capsys, "explain-matrix", "--data", str(desk_csv), "--model", "builtin:naive",
            "--format", "svg", "--out", str(svg_path),
        )
        assert code == 0, err
        artifact = json.loads((tmp_path / "heat.json").read_text())
        root = ET.fromstring(svg_path.read_text())
        titles = [t.text for t in root.iter("{http://www.w3.org/2000/svg}title")]
        encoded = {t.split(": ")[1] for t in titles}
        expected = {f"{v:.17g}" for row in artifact["values"] for v in row}
        assert encoded == expected


class TestExplainSummary:
    def test_default_grid(self, capsys, desk_csv):
        code, out, err = run(
            capsys, "explain-summary", "--data", str(desk_csv), "--model", "builtin:linear",
            "--window-index", "3",
        )
        assert code == 0, err
        artifact = json.loads(out)
        assert artifact["row_labels"] == ["min", "max", "mean", "variance", "trend"]
        assert artifact["col_labels"] == ["min", "max", "mean", "variance", "trend"]
        values = np.array(artifact["values"])
        assert values.shape == (5, 5)
        assert np.isfinite(values).all()

    def test_multivariate_channel_pair(self, capsys, multi_csv):
        code, out, err = run(
            capsys, "explain-summary", "--data", str(multi_csv), "--model", "builtin:naive",
            "--lookback", "12", "--horizon", "6",
            "--from-channel", "1", "--to-channel", "1", "--window-index", "0",
        )
        assert code == 0, err
        artifact = json.loads(out)
        assert artifact["source_channel"] == 1
        assert artifact["col_labels"] == ["min@1", "max@1", "mean@1", "variance@1", "trend@1"]

    def test_stride_thins_the_window_set(self, capsys, desk_csv):
        code, out, err = run(
            capsys, "explain-summary", "--data", str(desk_csv), "--model", "builtin:naive",
            "--stride", "10",
        )
        assert code == 0, err
        assert json.loads(out)["sample_count"] == 9  # floor((120-40)/10) + 1


class TestExplainChannels:
    def test_univariate_rejected(self, capsys, desk_csv):
        code, _out, err = run(
            capsys, "explain-channels", "--data", str(desk_csv), "--model", "builtin:naive",
        )
        assert code == 2
        assert "multivariate" in json.loads(err)["message"]

    def test_separable_model_diagonal_graph(self, capsys, multi_csv, tmp_path):
        svg_path = tmp_path / "graph.svg"
        code, _out, err = run(
            capsys, "explain-channels", "--data", str(multi_csv), "--model", "builtin:naive",
            "--lookback", "12", "--horizon", "6", "--format", "svg", "--out", str(svg_path),
        )
        assert code == 0, err
        artifact = json.loads((tmp_path / "graph.json").read_text())
        values = np.array(artifact["values"])
        assert values[0, 1] == 0.0 and values[1, 0] == 0.0
        assert values[0, 0] > 0.0 and values[1, 1] > 0.0
        assert artifact["channel_names"] == ["alpha", "beta"]
        ET.fromstring(svg_path.read_text())  # valid XML


class TestBench:
    def test_reference_row_and_ordering(self, capsys, desk_csv):
        code, out, err = run(
            capsys, "bench", "--data", str(desk_csv), "--seasonality", "12",
            "--model", "builtin:naive", "--model", "builtin:seasonal-naive:12",
            "--model", "builtin:linear",
        )
        assert code == 0, err
        artifact = json.loads(out)
        rows = {row["model"]: row for row in artifact["rows"]}
        assert rows["builtin:naive"]["owa"] == 1.0
        assert rows["builtin:naive"]["e_norm"] == 1.0
        assert rows["builtin:linear"]["owa"] < 1.0
        assert rows["builtin:seasonal-naive:12"]["pattern"] == "diagonals"
        assert "model" in err  # aligned table goes to stderr

    def test_missing_model_is_usage_error(self, capsys, desk_csv):
        code, _out, err = run(capsys, "bench", "--data", str(desk_csv))
        assert code == 2
        assert "at least one --model" in json.loads(err)["message"]

    def test_csv_output(self, capsys, desk_csv):
        code, out, err = run(
            capsys, "bench", "--data", str(desk_csv), "--model", "builtin:naive",
            "--format", "csv",
        )
        assert code == 0, err
        lines = out.strip().splitlines()
        assert lines[0] == "model,mae,mse,smape,mase,owa,e_norm,pattern"
        assert lines[1].startswith("builtin:naive,")

    def test_linear_on_pure_ramp_is_near_exact(self, capsys, tmp_path):
        path = tmp_path / "ramp.csv"
        with open(path, "w", newline="\n") as handle:
            handle.write("v\n")
            for i in range(300):
                handle.write(f"{float(i)!r}\n")
        code, out, err = run(
            capsys, "bench", "--data", str(path), "--lookback", "8", "--horizon", "4",
            "--model", "builtin:linear",
        )
        assert code == 0, err
        row = json.loads(out)["rows"][0]
        assert row["mae"] < 1e-6
        assert row["owa"] < 1e-6

    def test_bench_with_bridged_model(self, capsys, desk_csv):
        code, out, err = run(
            capsys, "bench", "--data", str(desk_csv), "--window-index", "0",
            "--model", f"extern:{sys.executable} {ECHO}",
            "--model", "builtin:naive",
        )
        assert code == 0, err
        rows = {row["model"]: row for row in json.loads(out)["rows"]}
        bridged = rows[f"extern:{sys.executable} {ECHO}"]
        builtin = rows["builtin:naive"]
        for key in ("mae", "mse", "smape", "mase", "owa", "e_norm"):
            assert bridged[key] == builtin[key]  # same numbers, bit for bit
        assert bridged["pattern"] == builtin["pattern"]


class TestForecast:
    def test_plain_forecast(self, capsys, desk_csv):
        code, out, err = run(
            capsys, "forecast", "--data", str(desk_csv), "--model", "builtin:naive",
        )
        assert code == 0, err
        artifact = json.loads(out)
        assert artifact["kind"] == "forecast"
        assert len(artifact["forecast"][0]) == 20
        # naive repeats the last input value, in original data units
        assert artifact["forecast"][0][0] == pytest.approx(artifact["input"][0][-1], rel=1e-12)

    def test_perturb_overlay_data(self, capsys, desk_csv):
        code, out, err = run(
            capsys, "forecast", "--data", str(desk_csv), "--model", "builtin:naive",
            "--perturb", "min:+0.05",
        )
        assert code == 0, err
        artifact = json.loads(out)
        assert artifact["perturbation"]["family"] == "index"
        assert artifact["perturbation"]["alpha"] == 0.05
        assert artifact["perturbation"]["delta"] > 0
        assert len(artifact["perturbed_forecast"][0]) == 20
        assert artifact["perturbed_input"] != artifact["input"]

    def test_malformed_perturb_token(self, capsys, desk_csv):
        code, _out, err = run(
            capsys, "forecast", "--data", str(desk_csv), "--model", "builtin:naive",
            "--perturb", "wiggle:0.1",
        )
        assert code == 2
        assert "wiggle" in json.loads(err)["message"]


class TestModelSpecs:
    def test_extern_bridge(self, capsys, desk_csv):
        code, out, err = run(
            capsys, "forecast", "--data", str(desk_csv),
            "--model", f"extern:{sys.executable} {ECHO}",
        )
        assert code == 0, err
        artifact = json.loads(out)
        assert artifact["forecast"][0][0] == pytest.approx(artifact["input"][0][-1], rel=1e-12)

    def test_unknown_builtin(self, capsys, desk_csv):
        code, _out, err = run(
            capsys, "explain-step", "--data", str(desk_csv), "--model", "builtin:prophet",
        )
        assert code == 2
        assert "builtin:prophet" in json.loads(err)["message"]

    def test_runtime_error_is_machine_readable(self, capsys, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a\n1\nx\n")
        code, _out, err = run(capsys, "forecast", "--data", str(path), "--model", "builtin:naive")
        assert code == 1
        diag = json.loads(err)
        assert diag["error"] == "CsvFormatError"
        assert "line 3" in diag["message"]


class TestConfigFile:
    def test_defaults_from_file_and_flag_precedence(self, capsys, desk_csv, tmp_path):
        config = tmp_path / "run.conf"
        config.write_text(
            f"data={desk_csv}\nmodel=builtin:naive\nwidth=0\nproperty=mean\n"
            "window_index=0\n# comment\n",
            encoding="utf-8",
        )
        code, out, err = run(capsys, "explain-step", "--config", str(config))
        assert code == 0, err
        assert abs(json.loads(out)["values"][-1]) == pytest.approx(1.0, abs=1e-9)

        code, out, err = run(
            capsys, "explain-step", "--config", str(config), "--property", "step:1",
        )
        assert code == 0, err
        assert json.loads(out)["property"] == "step:1"  # flag beats file

    def test_unknown_key_rejected(self, capsys, tmp_path):
        config = tmp_path / "run.conf"
        config.write_text("turbo=yes\n", encoding="utf-8")
        code, _out, err = run(capsys, "explain-step", "--config", str(config))
        assert code == 2
        assert "turbo" in json.loads(err)["message"]
