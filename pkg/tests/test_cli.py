import csv
import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from feecalib.cli import main

FAST_CONFIG = {
    "calibration": {"solver": {"n_starts": 2, "max_iterations": 300}},
}


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def workdir(tmp_path_factory, runner):
    """One simulate + calibrate + predict chain shared by the module."""
    root = tmp_path_factory.mktemp("cli")
    config = root / "fast.json"
    config.write_text(json.dumps(FAST_CONFIG))
    out = root / "run"
    res = runner.invoke(main, ["simulate", "--out", str(out)])
    assert res.exit_code == 0, res.output
    res = runner.invoke(main, ["calibrate", str(out / "cycle.csv"),
                               "--config", str(config), "--method", "multi",
                               "--out", str(out)])
    assert res.exit_code == 0, res.output
    res = runner.invoke(main, ["predict", str(out / "report.json"),
                               "--scenario", str(out / "scenario.json"),
                               "--out", str(out)])
    assert res.exit_code == 0, res.output
    return root


class TestSimulate:
    def test_default_run_has_281_rows(self, workdir):
        lines = (workdir / "run" / "cycle.csv").read_text().splitlines()
        assert len(lines) == 282  # header + samples
        assert lines[0] == "t_s,x_m,z_m,rho_rad,ft_obs_N,fn_obs_N"

    def test_deterministic_given_seed(self, runner, tmp_path, workdir):
        out = tmp_path / "again"
        res = runner.invoke(main, ["simulate", "--out", str(out)])
        assert res.exit_code == 0
        assert (out / "cycle.csv").read_bytes() == \
            (workdir / "run" / "cycle.csv").read_bytes()

    def test_noise_seed_controls_output(self, runner, tmp_path):
        outs = []
        for name, seed in (("a", 1), ("b", 1), ("c", 2)):
            out = tmp_path / name
            res = runner.invoke(main, ["simulate", "--noise", "0.05",
                                       "--seed", str(seed), "--out",
                                       str(out)])
            assert res.exit_code == 0
            outs.append((out / "cycle.csv").read_bytes())
        assert outs[0] == outs[1]
        assert outs[0] != outs[2]

    def test_malformed_config_exits_2_without_files(self, runner, tmp_path):
        config = tmp_path / "bad.json"
        config.write_text('{"scenario": {"surface": {"type": "dome"}}}')
        out = tmp_path / "never"
        res = runner.invoke(main, ["simulate", "--config", str(config),
                                   "--out", str(out)])
        assert res.exit_code == 2
        assert not out.exists()

    def test_unknown_key_rejected(self, runner, tmp_path):
        config = tmp_path / "extra.json"
        config.write_text('{"scenaro": {}}')
        res = runner.invoke(main, ["simulate", "--config", str(config),
                                   "--out", str(tmp_path / "x")])
        assert res.exit_code == 2
        assert "scenaro" in res.output

    def test_preset_flag(self, runner, tmp_path):
        out = tmp_path / "preset"
        res = runner.invoke(main, ["simulate", "--preset",
                                   "Clay of low plasticity", "--out",
                                   str(out)])
        assert res.exit_code == 0
        doc = json.loads((out / "scenario.json").read_text())
        assert doc["soil"]["cohesion_c_N_m2"] == 20000.0


class TestCalibrate:
    def test_report_quality_and_fields(self, workdir):
        doc = json.loads((workdir / "run" / "report.json").read_text())
        assert doc["method"] == "multi-stage"
        assert doc["rmse"]["fr_pct"] <= 1.0
        assert [s["name"] for s in doc["stages"]] == ["stage1", "stage2",
                                                      "stage3"]
        assert doc["function_evaluations"] > 0
        assert doc["wall_time_s"] > 0.0

    def test_missing_force_column_exits_2(self, runner, workdir, tmp_path):
        src = (workdir / "run" / "cycle.csv").read_text().splitlines()
        header = src[0].replace(",fn_obs_N", "")
        rows = [",".join(line.split(",")[:-1]) for line in src[1:]]
        broken = tmp_path / "broken.csv"
        broken.write_text("\n".join([header] + rows) + "\n")
        res = runner.invoke(main, ["calibrate", str(broken), "--scenario",
                                   str(workdir / "run" / "scenario.json"),
                                   "--out", str(tmp_path)])
        assert res.exit_code == 2
        assert "fn_obs_N" in res.output

    def test_missing_scenario_exits_2(self, runner, workdir, tmp_path):
        res = runner.invoke(main, ["calibrate",
                                   str(workdir / "run" / "cycle.csv"),
                                   "--scenario", str(tmp_path / "no.json"),
                                   "--out", str(tmp_path)])
        assert res.exit_code == 2


class TestPredict:
    def test_training_scenario_reproduces_report_errors(self, runner,
                                                        workdir, tmp_path):
        # evaluating the prediction against the training cycle must give
        # exactly the report's final errors (file round-trip is bit-exact)
        run = workdir / "run"
        res = runner.invoke(main, ["evaluate", str(run / "predicted.csv"),
                                   str(run / "cycle.csv"), "--out",
                                   str(tmp_path)])
        assert res.exit_code == 0, res.output
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        report = json.loads((run / "report.json").read_text())
        assert metrics["ft"]["rmse_N"] == report["rmse"]["ft_N"]
        assert metrics["fn"]["rmse_N"] == report["rmse"]["fn_N"]
        assert metrics["fr"]["rmse_N"] == report["rmse"]["fr_N"]

    def test_prior_cycle_changes_depth_column(self, runner, workdir,
                                              tmp_path):
        run = workdir / "run"
        # second pass digging deeper through the carved face
        scenario = json.loads((run / "scenario.json").read_text())
        scenario["path"] = {"type": "quadratic_bezier",
                            "p0_m": [-0.4, 0.0], "p1_m": [1.0, -0.55],
                            "p2_m": [2.3, 1.3]}
        scenario.pop("soil", None)
        scenario.pop("noise", None)
        pass2 = tmp_path / "pass2.json"
        pass2.write_text(json.dumps(scenario))
        naive = tmp_path / "naive"
        adaptive = tmp_path / "adaptive"
        res = runner.invoke(main, ["predict", str(run / "report.json"),
                                   "--scenario", str(pass2), "--out",
                                   str(naive)])
        assert res.exit_code == 0, res.output
        res = runner.invoke(main, ["predict", str(run / "report.json"),
                                   "--scenario", str(pass2),
                                   "--prior-cycle", str(run / "cycle.csv"),
                                   "--out", str(adaptive)])
        assert res.exit_code == 0, res.output

        def depths(path):
            with open(path, newline="") as handle:
                return np.array([float(r["d_m"])
                                 for r in csv.DictReader(handle)])

        d_naive = depths(naive / "predicted.csv")
        d_adaptive = depths(adaptive / "predicted.csv")
        assert np.any(d_adaptive < d_naive - 1e-6)
        assert not np.any(d_adaptive > d_naive + 1e-9)

    def test_empty_scenario_exits_2(self, runner, workdir, tmp_path):
        scenario = json.loads(
            (workdir / "run" / "scenario.json").read_text())
        scenario["path"] = {"type": "explicit", "samples": []}
        scenario.pop("soil", None)
        scenario.pop("noise", None)
        empty = tmp_path / "empty.json"
        empty.write_text(json.dumps(scenario))
        res = runner.invoke(main, ["predict",
                                   str(workdir / "run" / "report.json"),
                                   "--scenario", str(empty), "--out",
                                   str(tmp_path)])
        assert res.exit_code == 2


class TestEvaluate:
    def test_identical_series_all_zero(self, runner, workdir, tmp_path):
        run = workdir / "run"
        # build a "prediction" that equals the observation
        rows = list(csv.DictReader(
            (run / "cycle.csv").open(newline="")))
        pred = tmp_path / "copy.csv"
        with pred.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["t_s", "x_m", "z_m", "rho_rad", "d_m",
                             "beta_rad", "ft_N", "fn_N", "fr_N"])
            for r in rows:
                fr = math.hypot(float(r["ft_obs_N"]), float(r["fn_obs_N"]))
                writer.writerow([r["t_s"], r["x_m"], r["z_m"],
                                 r["rho_rad"], "0.0", "0.0", r["ft_obs_N"],
                                 r["fn_obs_N"], repr(fr)])
        res = runner.invoke(main, ["evaluate", str(pred),
                                   str(run / "cycle.csv"), "--out",
                                   str(tmp_path)])
        assert res.exit_code == 0
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        assert metrics["ft"]["rmse_N"] == 0.0
        assert metrics["fn"]["rmse_N"] == 0.0
        assert metrics["fr"]["rmse_N"] == 0.0

    def test_constant_offset_rmse(self, runner, workdir, tmp_path):
        run = workdir / "run"
        rows = list(csv.DictReader((run / "cycle.csv").open(newline="")))
        pred = tmp_path / "offset.csv"
        with pred.open("w", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["t_s", "x_m", "z_m", "rho_rad", "d_m",
                             "beta_rad", "ft_N", "fn_N", "fr_N"])
            for r in rows:
                ft = float(r["ft_obs_N"]) + 10.0
                fn = float(r["fn_obs_N"])
                writer.writerow([r["t_s"], r["x_m"], r["z_m"],
                                 r["rho_rad"], "0.0", "0.0", repr(ft),
                                 repr(fn), repr(math.hypot(ft, fn))])
        res = runner.invoke(main, ["evaluate", str(pred),
                                   str(run / "cycle.csv"), "--out",
                                   str(tmp_path)])
        assert res.exit_code == 0
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        assert metrics["ft"]["rmse_N"] == pytest.approx(10.0, rel=1e-12)

    def test_independent_recomputation(self, runner, workdir, tmp_path):
        # spreadsheet-style recomputation straight from the files
        run = workdir / "run"
        res = runner.invoke(main, ["evaluate", str(run / "predicted.csv"),
                                   str(run / "cycle.csv"), "--out",
                                   str(tmp_path)])
        assert res.exit_code == 0
        pred = list(csv.DictReader((run / "predicted.csv").open(newline="")))
        obs = list(csv.DictReader((run / "cycle.csv").open(newline="")))
        sq = peak = 0.0
        for p, o in zip(pred, obs):
            sq += (float(o["ft_obs_N"]) - float(p["ft_N"])) ** 2
            peak = max(peak, abs(float(o["ft_obs_N"])))
        want = math.sqrt(sq / len(pred))
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        assert metrics["ft"]["rmse_N"] == pytest.approx(want, rel=1e-12)
        assert metrics["ft"]["rmse_pct"] == pytest.approx(
            100.0 * want / peak, rel=1e-12)

    def test_length_mismatch_exits_2(self, runner, workdir, tmp_path):
        run = workdir / "run"
        short = tmp_path / "short.csv"
        lines = (run / "predicted.csv").read_text().splitlines()
        short.write_text("\n".join(lines[:-5]) + "\n")
        res = runner.invoke(main, ["evaluate", str(short),
                                   str(run / "cycle.csv")])
        assert res.exit_code == 2
