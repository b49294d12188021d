import csv
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from condmedian.cli import (
    EXIT_CHECK_FAILED,
    EXIT_OK,
    EXIT_USAGE,
    grid_from,
    main,
    read_density_csv,
    render_csv,
    UsageError,
)
from condmedian.linearity import counterexample_frequency
from condmedian.models import CounterexampleParams, counterexample_prior, total_variation

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
FAST_CONFIGS = sorted(p.stem for p in CONFIGS.glob("*.json") if not p.stem.startswith("risk"))


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run_cli(tmp_path, cfg, *extra):
    out = tmp_path / "out"
    status = main([write_config(tmp_path, cfg), "--out", str(out), *extra])
    return status, out


def load(out, name):
    summary = json.loads((out / f"{name}.json").read_text())
    csv_path = out / f"{name}.csv"
    rows = list(csv.reader(csv_path.open(newline=""))) if csv_path.exists() else None
    return summary, rows


@pytest.mark.parametrize("name", FAST_CONFIGS)
def test_shipped_configs_pass(name, tmp_path):
    assert main([str(CONFIGS / f"{name}.json"), "--out", str(tmp_path)]) == EXIT_OK
    summary = json.loads((tmp_path / f"{name}.json").read_text())
    assert summary["schema"] == 1 and summary["status"] == 0 and summary["failed_checks"] == []
    assert (tmp_path / f"{name}.timing.json").exists()


class TestExamples:
    def test_poisson_demo(self, tmp_path):
        cfg = {"command": "poisson-demo", "shape": 1, "rate": 1, "y_grid": {"min": 0, "max": 20, "count": 21}, "output": "p"}
        status, out = run_cli(tmp_path, cfg)
        summary, rows = load(out, "p")
        assert status == EXIT_OK
        assert rows[0] == ["y", "mean", "median", "difference"]
        assert len(rows) == 22
        body = {int(r[0]): [float(v) for v in r[1:]] for r in rows[1:]}
        assert abs(body[0][1] - 0.346573590279973) <= 1e-6
        assert abs(body[10][1] - 5.33426120191816) <= 1e-6
        assert summary["reference_rows"] == 21 and summary["max_reference_gap"] <= 1e-6
        assert (out / "p.csv").read_bytes().count(b"\r\n") == 22

    def test_median_linearity_verdict(self, tmp_path):
        cfg = {"command": "check-median-linearity", "prior": {"kind": "matched_gaussian", "a": 0.5}, "a": 0.5,
               "y_grid": {"min": -4, "max": 4, "count": 17}, "output": "m"}
        status, out = run_cli(tmp_path, cfg)
        summary, _ = load(out, "m")
        assert status == EXIT_OK and summary["verdict"] is True

    def test_fp_roots_p4(self, tmp_path):
        status, out = run_cli(tmp_path, {"command": "fp-roots", "p": 4, "output": "r"})
        summary, rows = load(out, "r")
        assert status == EXIT_OK
        assert len(summary["roots"]) == 1 and abs(summary["roots"][0] - math.sqrt(6)) <= 1e-8
        assert abs(summary["hermite_bridge"][0] - math.sqrt(6)) <= 1e-12
        assert rows[0] == ["root", "bracket_lo", "bracket_hi", "residual"]

    def test_estimate_without_slope(self, tmp_path):
        cfg = {"command": "estimate", "prior": {"kind": "gaussian", "variance": 1}, "estimator": "mean",
               "y_grid": [0.0, 2.0], "output": "e"}
        status, out = run_cli(tmp_path, cfg)
        _, rows = load(out, "e")
        assert status == EXIT_OK
        assert float(rows[2][1]) == pytest.approx(1.0, abs=1e-8)

    def test_density_sets_default(self, tmp_path):
        status, out = run_cli(tmp_path, {"command": "counterexample-density", "output": "d"})
        summary, rows = load(out, "d")
        assert status == EXIT_OK
        assert rows[0] == ["x", "density_0", "density_1", "density_2", "density_3"]
        assert summary["omega"] == pytest.approx(math.sqrt(3), abs=1e-12)
        assert max(summary["lp_residual_sup"]) <= 1e-6

    def test_nef_prior(self, tmp_path):
        cfg = {"command": "estimate", "prior": {"kind": "nef_matched", "a": 0.5, "psi": {"name": "bump"}},
               "estimator": "median", "y_grid": [0.0, 1.0], "output": "n"}
        assert run_cli(tmp_path, cfg)[0] == EXIT_OK


class TestFailures:
    def test_failed_check_is_named(self, tmp_path):
        cfg = {"command": "check-median-linearity", "prior": {"kind": "two_point", "x1": -1, "x2": 1}, "a": 0.5,
               "y_grid": [0.5, 1.0], "output": "f"}
        status, out = run_cli(tmp_path, cfg)
        summary, _ = load(out, "f")
        assert status == EXIT_CHECK_FAILED
        assert summary["failed_checks"] == ["linear"] and summary["status"] == 1

    def test_expected_failure_passes(self, tmp_path):
        cfg = {"command": "check-median-linearity", "prior": {"kind": "two_point", "x1": -1, "x2": 1}, "a": 0.5,
               "y_grid": [0.5, 1.0], "expect": {"linear": False}, "output": "f"}
        assert run_cli(tmp_path, cfg)[0] == EXIT_OK

    def test_model_error_reported(self, tmp_path):
        cfg = {"command": "estimate", "prior": {"kind": "gaussian"}, "noise": {"kind": "poisson"}, "y_grid": [1, 2], "output": "g"}
        status, out = run_cli(tmp_path, cfg)
        summary, _ = load(out, "g")
        assert status == EXIT_CHECK_FAILED
        assert summary["failed_checks"] == ["estimate:ModelError"]

    @pytest.mark.parametrize(
        "cfg",
        [
            {"command": "no-such-command"},
            {"command": "fp-roots"},
            {"command": "fp-roots", "p": 4, "tolerances": {"ode": -1}},
            {"command": "fp-roots", "p": 4, "tolerances": {"bogus": 1}},
            {"command": "dawson-check", "w_grid": {"min": 0, "max": 1, "count": 1}},
            {"command": "estimate", "prior": {"kind": "cauchy"}, "y_grid": [0, 1]},
            {"command": "check-median-linearity", "prior": {"kind": "gaussian"}, "a": 1.5, "y_grid": [0, 1]},
            {"command": "fp-roots", "p": 4, "expect": {"missing_check": True}},
            {"command": "risk-scan", "prior": {"kind": "gaussian"}, "p": 2, "method": "monte-carlo", "a_grid": [0, 1]},
            [1, 2, 3],
        ],
        ids=["command", "missing_field", "negative_tol", "unknown_tol", "short_grid", "prior_kind", "slope", "expect", "seedless_mc", "not_object"],
    )
    def test_usage_errors(self, tmp_path, cfg):
        assert main([write_config(tmp_path, cfg), "--out", str(tmp_path)]) == EXIT_USAGE

    def test_unreadable_config(self, tmp_path):
        assert main([str(tmp_path / "missing.json")]) == EXIT_USAGE
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main([str(bad)]) == EXIT_USAGE

    def test_grid_from(self):
        assert grid_from({"min": 0, "max": 1, "count": 3}, "g").tolist() == [0.0, 0.5, 1.0]
        with pytest.raises(UsageError):
            grid_from("0:1", "g")


class TestArtifacts:
    def test_byte_identical_reruns(self, tmp_path):
        cfg = {"command": "risk-scan", "prior": {"kind": "two_point", "x1": -1, "x2": 1}, "p": 1.5, "method": "both",
               "a_grid": {"min": -0.5, "max": 1.5, "count": 9}, "n_samples": 50000, "seed": 5, "output": "r"}
        path = write_config(tmp_path, cfg)
        assert main([path, "--out", str(tmp_path / "a")]) == EXIT_OK
        assert main([path, "--out", str(tmp_path / "b")]) == EXIT_OK
        for ext in ("csv", "json"):
            assert (tmp_path / "a" / f"r.{ext}").read_bytes() == (tmp_path / "b" / f"r.{ext}").read_bytes()

    def test_jobs_do_not_change_output(self, tmp_path):
        cfg = {"command": "risk-scan", "prior": {"kind": "gaussian"}, "p": 2, "method": "monte-carlo",
               "a_grid": [0.0, 0.5, 1.0], "n_samples": 200000, "output": "j"}
        path = write_config(tmp_path, cfg)
        assert main([path, "--seed", "9", "--jobs", "1", "--out", str(tmp_path / "a")]) == EXIT_OK
        assert main([path, "--seed", "9", "--jobs", "4", "--out", str(tmp_path / "b")]) == EXIT_OK
        assert (tmp_path / "a" / "j.csv").read_bytes() == (tmp_path / "b" / "j.csv").read_bytes()
        assert json.loads((tmp_path / "a" / "j.json").read_text())["seed"] == 9

    def test_seed_flag_overrides_config(self, tmp_path):
        cfg = {"command": "risk-scan", "prior": {"kind": "gaussian"}, "p": 2, "method": "monte-carlo",
               "a_grid": [0.0, 1.0], "n_samples": 1000, "seed": 1, "output": "s"}
        path = write_config(tmp_path, cfg)
        main([path, "--seed", "2", "--out", str(tmp_path)])
        assert json.loads((tmp_path / "s.json").read_text())["seed"] == 2

    def test_env_output_directory(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CONDMEDIAN_OUT_DIR", str(tmp_path / "env"))
        path = write_config(tmp_path, {"command": "fp-roots", "p": 3, "output": "sub/roots"})
        assert main([path]) == EXIT_OK
        assert (tmp_path / "env" / "roots.json").exists()
        assert main([path, "--out", str(tmp_path / "flag")]) == EXIT_OK
        assert (tmp_path / "flag" / "roots.json").exists()

    def test_default_output_next_to_config(self, tmp_path, monkeypatch):
        monkeypatch.delenv("CONDMEDIAN_OUT_DIR", raising=False)
        path = write_config(tmp_path, {"command": "fp-roots", "p": 3, "output": "results/roots"})
        assert main([path]) == EXIT_OK
        assert (tmp_path / "results" / "roots.csv").exists()

    def test_json_is_sorted(self, tmp_path):
        status, out = run_cli(tmp_path, {"command": "fp-roots", "p": 5, "output": "k"})
        text = (out / "k.json").read_text()
        assert json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n" == text

    def test_csv_round_trip(self, tmp_path):
        cfg = {"command": "counterexample-density", "prior": {"kind": "counterexample", "a": 0.5, "rho": 1, "omega_from_p": 4},
               "output": "d"}
        status, out = run_cli(tmp_path, cfg)
        assert status == EXIT_OK
        again = read_density_csv(str(out / "d.csv"))
        ref = counterexample_prior(CounterexampleParams(0.5, 1.0, 0.0, counterexample_frequency(4.0)))
        assert np.array_equal(again.x, ref.x)
        assert total_variation(again, ref) <= 1e-8

    def test_csv_prior_kind(self, tmp_path):
        cfg = {"command": "counterexample-density", "prior": {"kind": "counterexample", "a": 0.5, "rho": 0.5, "omega": 1.0},
               "output": "d"}
        run_cli(tmp_path, cfg)
        chk = {"command": "check-median-linearity", "prior": {"kind": "csv", "path": "out/d.csv"}, "a": 0.5,
               "y_grid": [0.0, 1.0], "expect": {"linear": False}, "output": "c"}
        assert run_cli(tmp_path, chk)[0] == EXIT_OK

    def test_float_formatting_is_lossless(self):
        v = 0.1 + 0.2
        text = render_csv(["v"], [[v]])
        assert float(text.split("\r\n")[1]) == v


def test_module_entry_point(tmp_path):
    path = write_config(tmp_path, {"command": "fp-roots", "p": 4, "output": "m"})
    proc = subprocess.run([sys.executable, "-m", "condmedian", path, "--out", str(tmp_path)], capture_output=True)
    assert proc.returncode == EXIT_OK
    bad = subprocess.run([sys.executable, "-m", "condmedian", path, "--jobs", "0"], capture_output=True)
    assert bad.returncode == EXIT_USAGE
