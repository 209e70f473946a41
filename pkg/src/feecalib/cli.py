"""Command-line workflow: simulate, calibrate, predict, evaluate.

Exit codes: 0 ok, 2 input/config error, 3 computation error. The log
level is taken from the FEE_CALIB_LOG environment variable.
"""

from __future__ import annotations

import logging
import os
import sys
from pathlib import Path

import click
import numpy as np

from . import io as fio
from .calibration import (calibrate_multi_stage, calibrate_single_stage,
                          predict_next_cycle, resultant, rmse)
from .errors import ConfigError, EmptySeries, FeeCalibError
from .geometry import CycleDataset, surface_after_cycle
from .synthetic import add_noise, simulate_cycle

log = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_COMPUTE = 3


def _setup_logging() -> None:
    level = os.environ.get("FEE_CALIB_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
def main() -> None:
    """Excavation force prediction and soil parameter calibration."""
    _setup_logging()


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Run configuration JSON.")
@click.option("--preset", default=None, help="Soil preset name override.")
@click.option("--noise", type=float, default=None,
              help="Relative noise sigma override.")
@click.option("--seed", type=int, default=None, help="Noise seed override.")
@click.option("--out", "out_dir", type=click.Path(), default="out",
              show_default=True, help="Output directory.")
def simulate(config_path, preset, noise, seed, out_dir) -> None:
    """Generate a synthetic loading cycle (cycle.csv + scenario.json)."""
    try:
        config = fio.load_config(config_path, preset=preset, noise=noise,
                                 seed=seed)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    try:
        dataset = simulate_cycle(config.scenario, config.truth)
        if config.relative_sigma > 0.0:
            dataset = add_noise(dataset, config.relative_sigma, config.seed)
    except FeeCalibError as exc:
        _fail(EXIT_COMPUTE, f"simulation failed: {exc}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fio.write_cycle_csv(out / "cycle.csv", dataset.samples,
                        dataset.f_t_obs, dataset.f_n_obs)
    fio.write_scenario_json(out / "scenario.json", config.scenario,
                            config.truth, config.relative_sigma, config.seed)
    click.echo(f"wrote {out / 'cycle.csv'} ({dataset.n} rows) and "
               f"{out / 'scenario.json'}")


@main.command()
@click.argument("cycle_csv", type=click.Path())
@click.option("--scenario", "scenario_path", type=click.Path(), default=None,
              help="Scenario JSON (default: scenario.json next to the CSV).")
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Run configuration JSON (calibration options).")
@click.option("--method", type=click.Choice(["single", "multi"]),
              default="multi", show_default=True)
@click.option("--seed", type=int, default=None, help="Solver seed override.")
@click.option("--out", "out_dir", type=click.Path(), default="out",
              show_default=True, help="Output directory.")
def calibrate(cycle_csv, scenario_path, config_path, method, seed,
              out_dir) -> None:
    """Fit soil parameters to one cycle's force data (report.json)."""
    try:
        samples, ft, fn = fio.read_cycle_csv(cycle_csv)
        if scenario_path is None:
            scenario_path = Path(cycle_csv).parent / "scenario.json"
        scenario = fio.read_scenario_json(scenario_path)
        config = fio.load_config(config_path)
        options = config.calibration
        if seed is not None:
            from dataclasses import replace
            options = replace(options, solver=replace(options.solver,
                                                      seed=seed))
        dataset = CycleDataset(samples=tuple(samples), f_t_obs=ft,
                               f_n_obs=fn, surface=scenario.surface,
                               loader=scenario.loader)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    except ValueError as exc:
        _fail(EXIT_CONFIG, f"invalid cycle data: {exc}")
    try:
        if method == "single":
            report = calibrate_single_stage(dataset, options=options)
        else:
            report = calibrate_multi_stage(dataset, options=options)
    except FeeCalibError as exc:
        _fail(EXIT_COMPUTE, f"calibration failed: {exc}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fio.write_report_json(out / "report.json", report)
    click.echo(f"wrote {out / 'report.json'}: method={report.method} "
               f"F_R RMSE {report.rmse_fr_n:.1f} N "
               f"({report.rmse_fr_pct:.2f}%), "
               f"{report.function_evaluations} objective evaluations, "
               f"{report.wall_time_s:.1f} s")


@main.command()
@click.argument("report_json", type=click.Path())
@click.option("--scenario", "scenario_path", type=click.Path(),
              required=True, help="Scenario JSON describing the new pass.")
@click.option("--prior-cycle", "prior_path", type=click.Path(), default=None,
              help="Cycle CSV whose trajectory carved the surface.")
@click.option("--out", "out_dir", type=click.Path(), default="out",
              show_default=True, help="Output directory.")
def predict(report_json, scenario_path, prior_path, out_dir) -> None:
    """Predict forces along a scenario using fitted parameters."""
    try:
        theta = fio.read_report_theta(report_json)
        scenario = fio.read_scenario_json(scenario_path)
        if scenario.n_samples == 0:
            raise ConfigError("scenario has no samples")
        prior = None
        if prior_path is not None:
            prior, _, _ = fio.read_cycle_csv(prior_path)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    try:
        prediction = predict_next_cycle(theta, scenario, prior_cycle=prior)
    except FeeCalibError as exc:
        _fail(EXIT_COMPUTE, f"prediction failed: {exc}")
    if prediction.issues:
        for issue in prediction.issues:
            log.warning("sample %d: %s", issue.index, issue.reason)
        click.echo(f"note: {len(prediction.issues)} samples were "
                   "infeasible and carry NaN forces", err=True)

    surface = scenario.surface
    if prior is not None:
        surface = surface_after_cycle(surface, prior)
    trajectory = scenario.trajectory(surface=surface)
    xs = np.array([s.x for s in trajectory])
    zs = np.array([s.z for s in trajectory])
    depth = np.asarray(surface.depth_of(xs, zs))
    beta = np.array([w.beta for w in prediction.wedges])
    f_t, f_n = prediction.arrays()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fio.write_prediction_csv(out / "predicted.csv", trajectory, depth,
                             beta, f_t, f_n)
    click.echo(f"wrote {out / 'predicted.csv'} ({len(trajectory)} rows)")


@main.command()
@click.argument("predicted_csv", type=click.Path())
@click.argument("observed_csv", type=click.Path())
@click.option("--out", "out_dir", type=click.Path(), default=None,
              help="Directory for metrics.json (default: print only).")
def evaluate(predicted_csv, observed_csv, out_dir) -> None:
    """Force errors of a prediction against an observed cycle."""
    try:
        predicted = fio.read_prediction_csv(predicted_csv)
        _, ft_obs, fn_obs = fio.read_cycle_csv(observed_csv)
        if predicted["ft_N"].size != ft_obs.size:
            raise ConfigError(
                f"length mismatch: {predicted['ft_N'].size} predicted vs "
                f"{ft_obs.size} observed samples")
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    try:
        ft_pair = rmse(ft_obs, predicted["ft_N"])
        fn_pair = rmse(fn_obs, predicted["fn_N"])
        fr_pair = rmse(resultant(ft_obs, fn_obs),
                       resultant(predicted["ft_N"], predicted["fn_N"]))
    except EmptySeries as exc:
        _fail(EXIT_CONFIG, str(exc))
    click.echo(f"F^T RMSE {ft_pair[0]:.3f} N ({ft_pair[1]:.3f}%)")
    click.echo(f"F^N RMSE {fn_pair[0]:.3f} N ({fn_pair[1]:.3f}%)")
    click.echo(f"F_R RMSE {fr_pair[0]:.3f} N ({fr_pair[1]:.3f}%)")
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        fio.write_metrics_json(out / "metrics.json", int(ft_obs.size),
                               ft_pair, fn_pair, fr_pair)
        click.echo(f"wrote {out / 'metrics.json'}")


if __name__ == "__main__":
    main()
