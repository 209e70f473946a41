"""On-disk formats: cycle CSV, scenario/report/metrics JSON, run config.

CSV files are UTF-8 with LF line endings and shortest-round-trip float
formatting, so a written file reloads bit-exactly. JSON documents carry a
schema_version field and unit-suffixed keys; configs reject unknown keys
before any computation starts.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .calibration import CalibrationOptions, CalibrationReport
from .errors import ConfigError
from .geometry import Polyline, SlopedLine, Surface, TrajectorySample
from .optimizer import SolverOptions
from .soil import LoaderParameters, SoilParameters
from .synthetic import Scenario, default_loader, default_scenario, find_preset

SCHEMA_VERSION = 1

CYCLE_COLUMNS = ("t_s", "x_m", "z_m", "rho_rad", "ft_obs_N", "fn_obs_N")
PREDICTION_COLUMNS = ("t_s", "x_m", "z_m", "rho_rad", "d_m", "beta_rad",
                      "ft_N", "fn_N", "fr_N")

_SOIL_KEYS = {
    "gamma": "gamma_kg_m3",
    "cohesion_c": "cohesion_c_N_m2",
    "adhesion_ca": "adhesion_ca_N_m2",
    "phi": "phi_rad",
    "delta": "delta_rad",
    "kc": "kc_N_m_n1",
    "kphi": "kphi_N_m_n2",
    "n": "n",
}
_ANGLE_FIELDS = {"phi", "delta"}


def _fmt(value: float) -> str:
    return repr(float(value))


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------

def write_cycle_csv(path: str | Path, samples: Sequence[TrajectorySample],
                    f_t_obs, f_n_obs) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CYCLE_COLUMNS)
        for s, ft, fn in zip(samples, f_t_obs, f_n_obs):
            writer.writerow([_fmt(s.t), _fmt(s.x), _fmt(s.z), _fmt(s.rho),
                             _fmt(ft), _fmt(fn)])


def read_cycle_csv(path: str | Path):
    """Returns (samples, f_t_obs, f_n_obs); column set is checked strictly."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for column in CYCLE_COLUMNS:
            if column not in header:
                raise ConfigError(f"{path}: missing column '{column}'")
        samples = []
        ft = []
        fn = []
        for lineno, row in enumerate(reader, start=2):
            try:
                samples.append(TrajectorySample(
                    t=float(row["t_s"]), x=float(row["x_m"]),
                    z=float(row["z_m"]), rho=float(row["rho_rad"])))
                ft.append(float(row["ft_obs_N"]))
                fn.append(float(row["fn_obs_N"]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path}:{lineno}: bad value ({exc})")
    return samples, np.array(ft), np.array(fn)


def write_prediction_csv(path: str | Path,
                         samples: Sequence[TrajectorySample],
                         depth, beta, f_t, f_n) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(PREDICTION_COLUMNS)
        for i, s in enumerate(samples):
            fr = math.hypot(f_t[i], f_n[i])
            writer.writerow([_fmt(s.t), _fmt(s.x), _fmt(s.z), _fmt(s.rho),
                             _fmt(depth[i]), _fmt(beta[i]), _fmt(f_t[i]),
                             _fmt(f_n[i]), _fmt(fr)])


def read_prediction_csv(path: str | Path) -> dict[str, np.ndarray]:
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for column in PREDICTION_COLUMNS:
            if column not in header:
                raise ConfigError(f"{path}: missing column '{column}'")
        rows = {c: [] for c in PREDICTION_COLUMNS}
        for row in reader:
            for c in PREDICTION_COLUMNS:
                rows[c].append(float(row[c]))
    return {c: np.array(v) for c, v in rows.items()}


# ---------------------------------------------------------------------------
# Strict config / JSON helpers
# ---------------------------------------------------------------------------

def _check_keys(obj: dict, allowed: Sequence[str], context: str) -> None:
    for key in obj:
        if key not in allowed:
            raise ConfigError(f"unknown key '{key}' in {context}")


def _need(obj: dict, key: str, context: str):
    if key not in obj:
        raise ConfigError(f"missing key '{key}' in {context}")
    return obj[key]


def _as_float(value, context: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{context} must be a number, got {value!r}")
    return float(value)


def _as_point(value, context: str) -> tuple[float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{context} must be an [x, z] pair")
    return (_as_float(value[0], context), _as_float(value[1], context))


def _angle_from(obj: dict, base: str, context: str,
                default: float | None = None) -> float:
    rad_key, deg_key = f"{base}_rad", f"{base}_deg"
    if rad_key in obj and deg_key in obj:
        raise ConfigError(f"give only one of '{rad_key}'/'{deg_key}' "
                          f"in {context}")
    if rad_key in obj:
        return _as_float(obj[rad_key], f"{context}.{rad_key}")
    if deg_key in obj:
        return math.radians(_as_float(obj[deg_key], f"{context}.{deg_key}"))
    if default is None:
        raise ConfigError(f"missing '{rad_key}' (or '{deg_key}') "
                          f"in {context}")
    return default


# ---------------------------------------------------------------------------
# Soil parameters
# ---------------------------------------------------------------------------

def soil_to_json(soil: SoilParameters) -> dict:
    return {json_key: getattr(soil, attr)
            for attr, json_key in _SOIL_KEYS.items()}


def soil_from_json(obj: dict, context: str = "soil") -> SoilParameters:
    allowed = list(_SOIL_KEYS.values()) + ["phi_deg", "delta_deg"]
    _check_keys(obj, allowed, context)
    values: dict[str, float] = {}
    for attr, json_key in _SOIL_KEYS.items():
        if attr in _ANGLE_FIELDS:
            values[attr] = _angle_from(obj, attr, context)
        else:
            values[attr] = _as_float(_need(obj, json_key, context),
                                     f"{context}.{json_key}")
    try:
        return SoilParameters(**values)
    except ValueError as exc:
        raise ConfigError(f"{context}: {exc}")


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------

def surface_to_json(surface: Surface) -> dict:
    if isinstance(surface, SlopedLine):
        return {"type": "sloped_line",
                "origin_m": list(surface.origin),
                "alpha_rad": surface.alpha}
    if isinstance(surface, Polyline):
        return {"type": "polyline",
                "vertices_m": surface.vertices.tolist(),
                "nominal_alpha_rad": surface.nominal_alpha}
    raise TypeError(f"unsupported surface {type(surface)!r}")


def surface_from_json(obj: dict, context: str = "surface") -> Surface:
    kind = _need(obj, "type", context)
    if kind == "sloped_line":
        _check_keys(obj, ("type", "origin_m", "alpha_rad", "alpha_deg"),
                    context)
        origin = _as_point(obj.get("origin_m", [0.0, 0.0]),
                           f"{context}.origin_m")
        alpha = _angle_from(obj, "alpha", context, default=0.0)
        try:
            return SlopedLine(origin=origin, alpha=alpha)
        except ValueError as exc:
            raise ConfigError(f"{context}: {exc}")
    if kind == "polyline":
        _check_keys(obj, ("type", "vertices_m", "nominal_alpha_rad",
                          "nominal_alpha_deg"), context)
        vertices = _need(obj, "vertices_m", context)
        alpha = _angle_from(obj, "nominal_alpha", context, default=0.0)
        try:
            return Polyline(np.asarray(vertices, dtype=float),
                            nominal_alpha=alpha)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"{context}: {exc}")
    raise ConfigError(f"{context}.type must be 'sloped_line' or 'polyline', "
                      f"got {kind!r}")


def loader_to_json(loader: LoaderParameters) -> dict:
    return {"omega_m": loader.omega, "b_m": loader.b, "wb_kg": loader.wb}


def loader_from_json(obj: dict, context: str = "loader") -> LoaderParameters:
    _check_keys(obj, ("omega_m", "b_m", "wb_kg"), context)
    defaults = default_loader()
    try:
        return LoaderParameters(
            omega=_as_float(obj.get("omega_m", defaults.omega),
                            f"{context}.omega_m"),
            b=_as_float(obj.get("b_m", defaults.b), f"{context}.b_m"),
            wb=_as_float(obj.get("wb_kg", defaults.wb), f"{context}.wb_kg"))
    except ValueError as exc:
        raise ConfigError(f"{context}: {exc}")


def scenario_to_json(scenario: Scenario) -> dict:
    doc: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "surface": surface_to_json(scenario.surface),
        "loader": loader_to_json(scenario.loader),
        "sample_rate_hz": scenario.sample_rate,
        "duration_s": scenario.duration,
    }
    if scenario.control_points is not None:
        p0, p1, p2 = scenario.control_points
        doc["path"] = {"type": "quadratic_bezier", "p0_m": list(p0),
                       "p1_m": list(p1), "p2_m": list(p2)}
    else:
        doc["path"] = {"type": "explicit",
                       "samples": [[s.t, s.x, s.z, s.rho]
                                   for s in scenario.samples]}
    return doc


def scenario_from_json(obj: dict, context: str = "scenario") -> Scenario:
    _check_keys(obj, ("schema_version", "surface", "loader", "path",
                      "sample_rate_hz", "duration_s", "soil", "noise"),
                context)
    surface = surface_from_json(_need(obj, "surface", context),
                                f"{context}.surface")
    loader = loader_from_json(obj.get("loader", {}), f"{context}.loader")
    path = _need(obj, "path", context)
    kind = _need(path, "type", f"{context}.path")
    rate = _as_float(obj.get("sample_rate_hz", 60.0),
                     f"{context}.sample_rate_hz")
    duration = _as_float(obj.get("duration_s", 4.67),
                         f"{context}.duration_s")
    try:
        if kind == "quadratic_bezier":
            _check_keys(path, ("type", "p0_m", "p1_m", "p2_m"),
                        f"{context}.path")
            points = tuple(_as_point(_need(path, k, f"{context}.path"),
                                     f"{context}.path.{k}")
                           for k in ("p0_m", "p1_m", "p2_m"))
            return Scenario(surface=surface, loader=loader,
                            control_points=points, sample_rate=rate,
                            duration=duration)
        if kind == "explicit":
            _check_keys(path, ("type", "samples"), f"{context}.path")
            rows = _need(path, "samples", f"{context}.path")
            samples = tuple(TrajectorySample(t=float(r[0]), x=float(r[1]),
                                             z=float(r[2]), rho=float(r[3]))
                            for r in rows)
            return Scenario(surface=surface, loader=loader, samples=samples,
                            sample_rate=rate, duration=duration)
    except (ValueError, TypeError, IndexError) as exc:
        raise ConfigError(f"{context}.path: {exc}")
    raise ConfigError(f"{context}.path.type must be 'quadratic_bezier' or "
                      f"'explicit', got {kind!r}")


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Validated input for the simulate/calibrate commands."""

    scenario: Scenario
    truth: SoilParameters
    relative_sigma: float
    seed: int
    calibration: CalibrationOptions


def _solver_from_json(obj: dict, context: str) -> SolverOptions:
    _check_keys(obj, ("max_iterations", "gradient_tolerance",
                      "finite_difference_step", "n_starts", "seed"), context)
    defaults = SolverOptions()
    try:
        return SolverOptions(
            max_iterations=int(obj.get("max_iterations",
                                       defaults.max_iterations)),
            gradient_tolerance=_as_float(
                obj.get("gradient_tolerance", defaults.gradient_tolerance),
                f"{context}.gradient_tolerance"),
            finite_difference_step=_as_float(
                obj.get("finite_difference_step",
                        defaults.finite_difference_step),
                f"{context}.finite_difference_step"),
            n_starts=int(obj.get("n_starts", defaults.n_starts)),
            seed=int(obj.get("seed", defaults.seed)))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{context}: {exc}")


def calibration_options_from_json(obj: dict,
                                  context: str = "calibration"
                                  ) -> CalibrationOptions:
    _check_keys(obj, ("lambda_weight", "gaussian_sigma", "solver"), context)
    defaults = CalibrationOptions()
    solver = _solver_from_json(obj.get("solver", {}), f"{context}.solver")
    try:
        return CalibrationOptions(
            lambda_weight=_as_float(obj.get("lambda_weight",
                                            defaults.lambda_weight),
                                    f"{context}.lambda_weight"),
            gaussian_sigma=_as_float(obj.get("gaussian_sigma",
                                             defaults.gaussian_sigma),
                                     f"{context}.gaussian_sigma"),
            solver=solver)
    except ValueError as exc:
        raise ConfigError(f"{context}: {exc}")


def run_config_from_json(obj: dict, preset: str | None = None,
                         noise: float | None = None,
                         seed: int | None = None) -> RunConfig:
    """Build a validated run config; CLI flags override file values."""
    if not isinstance(obj, dict):
        raise ConfigError("config root must be a JSON object")
    _check_keys(obj, ("schema_version", "scenario", "soil", "noise",
                      "calibration"), "config")
    if "scenario" in obj:
        scenario = scenario_from_json(obj["scenario"], "config.scenario")
    else:
        scenario = default_scenario()

    soil_obj = obj.get("soil", {})
    _check_keys(soil_obj, ("preset", "truth"), "config.soil")
    if "preset" in soil_obj and "truth" in soil_obj:
        raise ConfigError("config.soil: give either 'preset' or 'truth'")
    if preset is not None:
        truth = _truth_from_preset(preset)
    elif "truth" in soil_obj:
        truth = soil_from_json(soil_obj["truth"], "config.soil.truth")
    elif "preset" in soil_obj:
        truth = _truth_from_preset(soil_obj["preset"])
    else:
        from .synthetic import default_truth
        truth = default_truth()

    noise_obj = obj.get("noise", {})
    _check_keys(noise_obj, ("relative_sigma", "seed"), "config.noise")
    relative_sigma = _as_float(noise_obj.get("relative_sigma", 0.0),
                               "config.noise.relative_sigma")
    if noise is not None:
        relative_sigma = noise
    if relative_sigma < 0.0:
        raise ConfigError("config.noise.relative_sigma must be nonnegative")
    seed_value = int(noise_obj.get("seed", 0))
    if seed is not None:
        seed_value = seed

    calibration = calibration_options_from_json(obj.get("calibration", {}))
    return RunConfig(scenario=scenario, truth=truth,
                     relative_sigma=relative_sigma, seed=seed_value,
                     calibration=calibration)


def _truth_from_preset(name: str) -> SoilParameters:
    try:
        preset = find_preset(name)
        if preset.kc is None:
            from .synthetic import find_preset as _find
            preset = preset.merged(_find("Heavy Clay WES 40"))
        elif preset.gamma is None:
            from .synthetic import find_preset as _find
            preset = _find("Clay of low plasticity, lean clay").merged(preset)
        return preset.soil_parameters()
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"preset: {exc}")


def load_config(path: str | Path | None, preset: str | None = None,
                noise: float | None = None,
                seed: int | None = None) -> RunConfig:
    if path is None:
        return run_config_from_json({}, preset=preset, noise=noise,
                                    seed=seed)
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as handle:
            obj = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}")
    return run_config_from_json(obj, preset=preset, noise=noise, seed=seed)


# ---------------------------------------------------------------------------
# Scenario sidecar and report
# ---------------------------------------------------------------------------

def write_scenario_json(path: str | Path, scenario: Scenario,
                        truth: SoilParameters, relative_sigma: float,
                        seed: int) -> None:
    doc = scenario_to_json(scenario)
    doc["soil"] = soil_to_json(truth)
    doc["noise"] = {"relative_sigma": relative_sigma, "seed": seed}
    _dump_json(path, doc)


def read_scenario_json(path: str | Path) -> Scenario:
    obj = _load_json(path)
    return scenario_from_json(obj, str(path))


def _dump_json(path: str | Path, doc: dict) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        json.dump(doc, handle, indent=2)
        handle.write("\n")


def _load_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as handle:
            return json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}")


def report_to_json(report: CalibrationReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "method": report.method,
        "theta_star": soil_to_json(report.theta_star),
        "stages": [{
            "name": s.name,
            "parameters": s.parameters,
            "objective_value": s.objective_value,
            "iterations": s.iterations,
            "function_evaluations": s.function_evaluations,
            "starts_tried": s.starts_tried,
            "converged": s.converged,
            "gradient_norm": s.gradient_norm,
            "wall_time_s": s.wall_time_s,
            "dropped_samples": s.dropped_samples,
            "rmse_N": None if math.isnan(s.rmse_n) else s.rmse_n,
            "rmse_pct": None if math.isnan(s.rmse_pct) else s.rmse_pct,
            "rmse_series": s.rmse_series,
        } for s in report.stages],
        "rmse": {
            "ft_N": report.rmse_ft_n, "ft_pct": report.rmse_ft_pct,
            "fn_N": report.rmse_fn_n, "fn_pct": report.rmse_fn_pct,
            "fr_N": report.rmse_fr_n, "fr_pct": report.rmse_fr_pct,
        },
        "function_evaluations": report.function_evaluations,
        "wall_time_s": report.wall_time_s,
        "n_samples": report.n_samples,
        "dropped_samples": report.dropped_samples,
        "options": {
            "lambda_weight": report.lambda_weight,
            "gaussian_sigma": report.gaussian_sigma,
            "seed": report.seed,
        },
    }


def write_report_json(path: str | Path, report: CalibrationReport) -> None:
    _dump_json(path, report_to_json(report))


def read_report_theta(path: str | Path) -> SoilParameters:
    obj = _load_json(path)
    if "theta_star" not in obj:
        raise ConfigError(f"{path}: missing 'theta_star'")
    return soil_from_json(obj["theta_star"], f"{path}:theta_star")


def write_metrics_json(path: str | Path, n_samples: int,
                       ft: tuple[float, float], fn: tuple[float, float],
                       fr: tuple[float, float]) -> None:
    _dump_json(path, {
        "schema_version": SCHEMA_VERSION,
        "n_samples": n_samples,
        "ft": {"rmse_N": ft[0], "rmse_pct": ft[1]},
        "fn": {"rmse_N": fn[0], "rmse_pct": fn[1]},
        "fr": {"rmse_N": fr[0], "rmse_pct": fr[1]},
    })
