"""Excavation force prediction and soil parameter calibration.

Predicts resistive forces on a wheel-loader bucket with the fundamental
earthmoving equation plus a pressure-sinkage compaction term, and
calibrates the eight governing soil parameters from one loading cycle's
force data via bound-constrained nonlinear least squares (single-stage
baseline or the faster staged pipeline).
"""

from .calibration import (CalibrationOptions, CalibrationReport, StageResult,
                          calibrate_multi_stage, calibrate_single_stage,
                          calibrate_stage1, calibrate_stage2,
                          calibrate_stage3, gaussian_filter,
                          predict_next_cycle, resultant, rmse)
from .errors import (ConfigError, DegenerateDepths, DegenerateRegion,
                     EmptyFeasibleSet, EmptySeries, FeeCalibError,
                     InfeasibleGeometry, NonFiniteObjective, NonMonotonePath,
                     SingularGeometry, SolverFailure)
from .geometry import (CycleDataset, Polyline, SlopedLine, Surface,
                       TrajectorySample, cycle_wedges, penetration_depth,
                       quadratic_bezier_path, surface_after_cycle,
                       swept_area_profile, swept_load_weight,
                       wedge_from_sample)
from .optimizer import (SolveResult, SolverOptions,
                        finite_difference_gradient, minimize_bounded,
                        multi_start)
from .soil import (DEFAULT_MARGINS, GRAVITY, PARAM_NAMES, BearingFactors,
                   CyclePrediction, ForcePrediction, LoaderParameters,
                   Margins, ParameterBounds, SoilParameters, WedgeState,
                   bearing_factors_canonical, bearing_factors_original,
                   bekker_pressure, bucket_forces, fee_force,
                   predict_cycle_forces, solve_beta)
from .synthetic import (Scenario, SoilPreset, add_noise, default_loader,
                        default_scenario, default_truth, find_preset,
                        heldout_scenario, preset_catalog, simulate_cycle)

__version__ = "0.1.0"
