"""Soil-tool force model for a planar cutting blade.

Implements the fundamental earthmoving equation with the four bearing
capacity factors in both their cotangent form and the numerically stable
sine-cosine form, the constrained failure-angle minimization, the Bekker
pressure-sinkage law, and the composition of tangential/normal bucket
forces. All quantities are base SI (N, m, rad, kg/m^3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator, Sequence

import numpy as np

from .errors import EmptyFeasibleSet, InfeasibleGeometry, SingularGeometry

GRAVITY = 9.80665  # m/s^2

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

#: Ordering of the eight soil parameters used everywhere a flat vector is
#: exchanged with the optimizer or serialized to disk.
PARAM_NAMES = ("gamma", "cohesion_c", "adhesion_ca", "phi", "delta",
               "kc", "kphi", "n")


@dataclass(frozen=True)
class Margins:
    """Feasibility margins guarding the wedge trigonometry.

    eps1 and eps2 bound the failure-angle search window, sin_margin is the
    minimum magnitude allowed for every sine/cosine denominator, rho_min is
    the smallest blade angle for which the wedge assumption holds and
    alpha_max caps the stockpile inclination (angle of repose).
    """

    eps1: float = math.radians(5.0)
    eps2: float = math.radians(5.0)
    sin_margin: float = math.sin(math.radians(1.0))
    rho_min: float = math.radians(10.0)
    alpha_max: float = math.radians(45.0)

    def __post_init__(self) -> None:
        for name in ("eps1", "eps2", "sin_margin", "rho_min", "alpha_max"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"margin {name} must be positive")
        if self.sin_margin >= 1.0:
            raise ValueError("sin_margin must be below 1")

    @property
    def angle_margin(self) -> float:
        """sin_margin expressed as an angle offset from 0/pi."""
        return math.asin(self.sin_margin)


DEFAULT_MARGINS = Margins()


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class SoilParameters:
    """The eight soil parameters governing the force model."""

    gamma: float        # soil density, kg/m^3
    cohesion_c: float   # cohesion along the failure surface, N/m^2
    adhesion_ca: float  # adhesion along the blade, N/m^2
    phi: float          # internal friction angle, rad
    delta: float        # external (soil-tool) friction angle, rad
    kc: float           # cohesive modulus of deformation, N/m^(n+1)
    kphi: float         # frictional modulus of deformation, N/m^(n+2)
    n: float            # sinkage exponent, dimensionless

    def __post_init__(self) -> None:
        for name in PARAM_NAMES:
            _require_finite(name, getattr(self, name))
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")
        for name in ("cohesion_c", "adhesion_ca", "kc", "kphi"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("phi", "delta"):
            angle = getattr(self, name)
            if not 0.0 <= angle < math.pi / 2.0:
                raise ValueError(f"{name} must lie in [0, pi/2)")
        if self.n <= 0.0:
            raise ValueError("n must be positive")

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, k) for k in PARAM_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "SoilParameters":
        values = np.asarray(values, dtype=float)
        if values.shape != (len(PARAM_NAMES),):
            raise ValueError(f"expected {len(PARAM_NAMES)} values")
        return cls(**dict(zip(PARAM_NAMES, values.tolist())))

    def replace(self, **changes: float) -> "SoilParameters":
        return replace(self, **changes)


@dataclass(frozen=True)
class ParameterBounds:
    """Closed per-parameter intervals used as hard optimization constraints.

    Defaults follow literature ranges for diggable soils; kc/kphi are
    stored in base SI (the common catalog unit is kN).
    """

    gamma: tuple[float, float] = (1297.0, 2345.0)
    cohesion_c: tuple[float, float] = (0.0, 50_000.0)
    adhesion_ca: tuple[float, float] = (0.0, 50_000.0)
    phi: tuple[float, float] = (0.0, 0.785)
    delta: tuple[float, float] = (0.0, 0.785)
    kc: tuple[float, float] = (0.0, 10_000.0)
    kphi: tuple[float, float] = (0.0, 5_000_000.0)
    n: tuple[float, float] = (0.11, 1.53)

    def __post_init__(self) -> None:
        for name in PARAM_NAMES:
            lo, hi = getattr(self, name)
            _require_finite(name + ".min", lo)
            _require_finite(name + ".max", hi)
            if lo > hi:
                raise ValueError(f"{name}: min {lo} exceeds max {hi}")

    def lower(self, names: Sequence[str] = PARAM_NAMES) -> np.ndarray:
        return np.array([getattr(self, k)[0] for k in names], dtype=float)

    def upper(self, names: Sequence[str] = PARAM_NAMES) -> np.ndarray:
        return np.array([getattr(self, k)[1] for k in names], dtype=float)

    def center(self, names: Sequence[str] = PARAM_NAMES) -> np.ndarray:
        return 0.5 * (self.lower(names) + self.upper(names))

    def contains(self, soil: SoilParameters, rtol: float = 1e-9) -> bool:
        for name in PARAM_NAMES:
            lo, hi = getattr(self, name)
            pad = rtol * max(1.0, abs(lo), abs(hi))
            if not lo - pad <= getattr(soil, name) <= hi + pad:
                return False
        return True

    def clip(self, soil: SoilParameters) -> SoilParameters:
        clipped = {k: min(max(getattr(soil, k), getattr(self, k)[0]),
                          getattr(self, k)[1]) for k in PARAM_NAMES}
        return SoilParameters(**clipped)


@dataclass(frozen=True)
class LoaderParameters:
    """Geometry and mass of the bucket acting as the cutting blade."""

    omega: float  # blade/bucket width, m
    b: float      # cutting-edge thickness, m
    wb: float     # bucket weight, kg

    def __post_init__(self) -> None:
        for name in ("omega", "b", "wb"):
            _require_finite(name, getattr(self, name))
        if self.omega <= 0.0:
            raise ValueError("omega must be positive")
        if self.b <= 0.0:
            raise ValueError("b must be positive")
        if self.wb < 0.0:
            raise ValueError("wb must be nonnegative")


@dataclass(frozen=True)
class BearingFactors:
    """The four dimensionless bearing capacity factors."""

    n_gamma: float
    n_c: float
    n_a: float
    n_q: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.n_gamma, self.n_c, self.n_a, self.n_q)


@dataclass(frozen=True)
class WedgeState:
    """Per-sample wedge geometry.

    beta and lf may be NaN for a wedge whose failure angle has not been
    solved yet; the prediction pipeline fills them in, since beta depends
    on the candidate soil friction angles.
    """

    depth_d: float  # perpendicular penetration depth, m
    rho: float      # blade angle relative to the stockpile surface, rad
    lt: float       # blade length in soil, m
    lf: float       # failure-surface length, m
    beta: float     # failure-surface angle, rad (NaN when unsolved)
    w_load: float   # surcharge weight of swept soil, N

    def __post_init__(self) -> None:
        for name in ("depth_d", "rho", "lt", "w_load"):
            _require_finite(name, getattr(self, name))
        if self.depth_d < 0.0:
            raise ValueError("depth_d must be nonnegative")
        if self.lt < 0.0:
            raise ValueError("lt must be nonnegative")
        if self.w_load < 0.0:
            raise ValueError("w_load must be nonnegative")
        if not 0.0 < self.rho < math.pi:
            raise ValueError("rho must lie in (0, pi)")
        if math.isfinite(self.beta) and self.beta <= 0.0:
            raise ValueError("beta must be positive when set")

    @property
    def solved(self) -> bool:
        return math.isfinite(self.beta)


@dataclass(frozen=True)
class ForcePrediction:
    """Forces acting on the bucket blade at one sample."""

    fee_force_f: float  # total wedge reaction force, N
    pressure_p: float   # penetration pressure, N/m^2
    f_t: float          # tangential bucket force, N
    f_n: float          # normal bucket force, N

    def __post_init__(self) -> None:
        for name in ("fee_force_f", "pressure_p", "f_t", "f_n"):
            _require_finite(name, getattr(self, name))


# ---------------------------------------------------------------------------
# Bearing capacity factors
# ---------------------------------------------------------------------------

def _factor_arrays(alpha, beta, rho, phi, delta):
    """Sine-cosine bearing factors; inputs broadcast as numpy arrays."""
    s_beta = np.sin(beta)
    s_chain = np.sin(rho + delta + beta + phi)
    n_gamma = (np.cos(alpha + beta) * np.sin(alpha + beta + phi)
               / (2.0 * np.cos(alpha) * s_beta * s_chain))
    n_c = np.cos(phi) / (s_beta * s_chain)
    n_a = -np.cos(rho + beta + phi) / (np.sin(rho) * s_chain)
    n_q = np.sin(alpha + beta + phi) / s_chain
    return n_gamma, n_c, n_a, n_q


def _ngamma_array(alpha, beta, rho, phi, delta):
    return (np.cos(alpha + beta) * np.sin(alpha + beta + phi)
            / (2.0 * np.cos(alpha) * np.sin(beta)
               * np.sin(rho + delta + beta + phi)))


def bearing_factors_original(alpha: float, beta: float, rho: float,
                             phi: float, delta: float,
                             denom_eps: float = 1e-12) -> BearingFactors:
    """Bearing factors from the cotangent-form expressions.

    Kept verbatim as a cross-check path; raises SingularGeometry when any
    denominator magnitude drops below ``denom_eps``.
    """
    checks = (
        (math.sin(beta), "sin(beta)"),
        (math.sin(beta + phi), "sin(beta+phi)"),
        (math.sin(rho), "sin(rho)"),
        (math.cos(alpha), "cos(alpha)"),
    )
    for value, label in checks:
        if abs(value) < denom_eps:
            raise SingularGeometry(f"{label} is singular ({value:.3e})")
    cot_beta = math.cos(beta) / math.sin(beta)
    cot_bf = math.cos(beta + phi) / math.sin(beta + phi)
    cot_rho = math.cos(rho) / math.sin(rho)
    tan_alpha = math.sin(alpha) / math.cos(alpha)
    denom = math.cos(rho + delta) + math.sin(rho + delta) * cot_bf
    if abs(denom) < denom_eps:
        raise SingularGeometry(f"common denominator is singular ({denom:.3e})")
    n_gamma = ((cot_beta - tan_alpha)
               * (math.cos(alpha) + math.sin(alpha) * cot_bf)
               / (2.0 * denom))
    n_c = (1.0 + cot_beta * cot_bf) / denom
    n_a = (1.0 - cot_rho * cot_bf) / denom
    n_q = (math.cos(alpha) + math.sin(alpha) * cot_bf) / denom
    return BearingFactors(n_gamma, n_c, n_a, n_q)


def bearing_factors_canonical(alpha: float, beta: float, rho: float,
                              phi: float, delta: float,
                              margins: Margins = DEFAULT_MARGINS
                              ) -> BearingFactors:
    """Bearing factors in the sine-cosine canonical form.

    This is the production path. Every sine/cosine denominator must clear
    ``margins.sin_margin``; the failing term is named in the exception.
    """
    checks = (
        (math.sin(beta), "sin(beta)"),
        (math.sin(rho), "sin(rho)"),
        (math.cos(alpha), "cos(alpha)"),
        (math.sin(beta + phi), "sin(beta+phi)"),
        (math.sin(rho + delta + beta + phi), "sin(rho+delta+beta+phi)"),
    )
    for value, label in checks:
        if abs(value) <= margins.sin_margin:
            raise SingularGeometry(
                f"|{label}| = {abs(value):.4e} below margin "
                f"{margins.sin_margin:.4e}")
    n_gamma, n_c, n_a, n_q = (
        float(np.asarray(v)) for v in _factor_arrays(alpha, beta, rho,
                                                     phi, delta))
    return BearingFactors(n_gamma, n_c, n_a, n_q)


# ---------------------------------------------------------------------------
# Failure-angle minimization
# ---------------------------------------------------------------------------

def beta_window(alpha: float, rho, phi: float, delta: float,
                margins: Margins = DEFAULT_MARGINS):
    """Feasible interval [lo, hi] for the failure angle, per sample.

    The window keeps beta above eps1, the angle chain rho+delta+beta+phi
    at least eps2 short of pi (a physical wedge keeps the chain below pi),
    and sin(beta+phi) clear of its margin. It is additionally capped at
    pi/2 - alpha, where the wedge cross-section factor cot(beta)-tan(alpha)
    changes sign: beyond it the unit-weight factor goes negative and its
    minimization would chase nonphysical inverted wedges. hi <= lo marks
    infeasibility.
    """
    rho = np.asarray(rho, dtype=float)
    lo = np.full(rho.shape, margins.eps1, dtype=float)
    hi = np.minimum(math.pi - rho - delta - phi - margins.eps2,
                    math.pi - phi - margins.angle_margin)
    hi = np.minimum(hi, math.pi - margins.angle_margin)
    hi = np.minimum(hi, math.pi / 2.0 - alpha)
    return lo, hi


def _solve_beta_array(alpha: float, rho, phi: float, delta: float,
                      margins: Margins = DEFAULT_MARGINS,
                      n_grid: int = 768, refine_iters: int = 56):
    """Vectorized failure-angle solve: coarse scan plus golden refinement.

    Returns (beta, feasible) arrays; beta is NaN where the window is empty.
    The coarse grid locates the global basin (the objective is a smooth
    low-frequency trig ratio, so basins are wide), the golden stage
    polishes to ~1e-12 rad, and exact ties snap to the smallest feasible
    angle.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    lo, hi = beta_window(alpha, rho, phi, delta, margins)
    feasible = hi > lo
    beta = np.full(rho.shape, np.nan)
    if not np.any(feasible):
        return beta, feasible

    lo_f = lo[feasible]
    hi_f = hi[feasible]
    rho_f = rho[feasible]
    span = hi_f - lo_f

    u = np.linspace(0.0, 1.0, n_grid)
    grid = lo_f[:, None] + span[:, None] * u[None, :]
    values = _ngamma_array(alpha, grid, rho_f[:, None], phi, delta)
    j = np.argmin(values, axis=1)
    rows = np.arange(j.size)
    a = grid[rows, np.maximum(j - 1, 0)]
    b = grid[rows, np.minimum(j + 1, n_grid - 1)]

    x1 = b - _INV_GOLDEN * (b - a)
    x2 = a + _INV_GOLDEN * (b - a)
    f1 = _ngamma_array(alpha, x1, rho_f, phi, delta)
    f2 = _ngamma_array(alpha, x2, rho_f, phi, delta)
    for _ in range(refine_iters):
        left = f1 < f2
        a_new = np.where(left, a, x1)
        b_new = np.where(left, x2, b)
        width = b_new - a_new
        x1_new = np.where(left, b_new - _INV_GOLDEN * width, x2)
        x2_new = np.where(left, x1, a_new + _INV_GOLDEN * width)
        x_eval = np.where(left, x1_new, x2_new)
        f_eval = _ngamma_array(alpha, x_eval, rho_f, phi, delta)
        f1_new = np.where(left, f_eval, f2)
        f2_new = np.where(left, f1, f_eval)
        a, b, x1, x2, f1, f2 = a_new, b_new, x1_new, x2_new, f1_new, f2_new

    best = np.clip(0.5 * (a + b), lo_f, hi_f)
    f_best = _ngamma_array(alpha, best, rho_f, phi, delta)
    # flat objectives tie-break to the smallest feasible angle
    f_lo = _ngamma_array(alpha, lo_f, rho_f, phi, delta)
    snap = f_lo <= f_best + 1e-12 * np.maximum(1.0, np.abs(f_best))
    best = np.where(snap, lo_f, best)

    beta[feasible] = best
    return beta, feasible


def solve_beta(alpha: float, rho: float, phi: float, delta: float,
               margins: Margins = DEFAULT_MARGINS) -> float:
    """Failure angle minimizing the unit-weight factor over its window.

    Raises EmptyFeasibleSet when the constraints exclude every angle and
    SingularGeometry when the fixed angles already violate their margins.
    """
    if abs(math.cos(alpha)) <= margins.sin_margin:
        raise SingularGeometry("cos(alpha) below margin")
    lo, hi = beta_window(alpha, np.array([rho]), phi, delta, margins)
    if not hi[0] > lo[0]:
        raise EmptyFeasibleSet(
            f"no feasible failure angle: window [{lo[0]:.4f}, {hi[0]:.4f}] "
            f"for rho={rho:.4f}, phi={phi:.4f}, delta={delta:.4f}")
    beta, _ = _solve_beta_array(alpha, np.array([rho]), phi, delta, margins)
    return float(beta[0])


# ---------------------------------------------------------------------------
# Forces
# ---------------------------------------------------------------------------

def bekker_pressure(depth_d: float, soil: SoilParameters,
                    loader: LoaderParameters) -> float:
    """Penetration pressure (kc/b + kphi) * d^n."""
    if depth_d < 0.0:
        raise ValueError("depth_d must be nonnegative")
    return (soil.kc / loader.b + soil.kphi) * depth_d ** soil.n


def fee_force(wedge: WedgeState, soil: SoilParameters,
              loader: LoaderParameters, alpha: float,
              margins: Margins = DEFAULT_MARGINS) -> float:
    """Total reaction force on the blade from the soil wedge."""
    if not wedge.solved:
        raise InfeasibleGeometry("wedge failure angle has not been solved")
    factors = bearing_factors_canonical(alpha, wedge.beta, wedge.rho,
                                        soil.phi, soil.delta, margins)
    d = wedge.depth_d
    return (d * d * loader.omega * soil.gamma * GRAVITY * factors.n_gamma
            + soil.cohesion_c * loader.omega * d * factors.n_c
            + soil.adhesion_ca * loader.omega * d * factors.n_a
            + wedge.w_load * factors.n_q)


def bucket_forces(fee_force_f: float, pressure_p: float, lt: float,
                  soil: SoilParameters,
                  loader: LoaderParameters) -> ForcePrediction:
    """Tangential/normal force pair on the bucket blade."""
    f_t = (loader.omega * loader.b * pressure_p
           + fee_force_f * math.sin(soil.delta)
           + soil.adhesion_ca * loader.omega * lt)
    f_n = fee_force_f * math.cos(soil.delta)
    return ForcePrediction(fee_force_f, pressure_p, f_t, f_n)


# ---------------------------------------------------------------------------
# Cycle-level prediction engine
# ---------------------------------------------------------------------------

# per-sample status codes used by the vectorized engine
_OK = 0
_OUT_OF_SOIL = 1
_EMPTY_WINDOW = 2
_SINGULAR_RHO = 3
_RHO_BELOW_MIN = 4

_STATUS_TEXT = {
    _EMPTY_WINDOW: "empty failure-angle window",
    _SINGULAR_RHO: "sin(rho) below margin",
    _RHO_BELOW_MIN: "blade angle below minimum",
}


@dataclass(frozen=True)
class CycleForceArrays:
    """Vectorized per-sample force results for one cycle."""

    beta: np.ndarray      # solved failure angle (NaN where not applicable)
    fee: np.ndarray       # wedge reaction force, N
    pressure: np.ndarray  # penetration pressure, N/m^2
    f_t: np.ndarray       # tangential force, N
    f_n: np.ndarray       # normal force, N
    status: np.ndarray    # per-sample status code
    in_soil: np.ndarray   # depth > 0
    valid: np.ndarray     # in-soil samples that evaluated cleanly

    @property
    def n(self) -> int:
        return self.f_t.size


def predict_force_arrays(depth, rho, lt, w_load, soil: SoilParameters,
                         loader: LoaderParameters, alpha: float,
                         margins: Margins = DEFAULT_MARGINS
                         ) -> CycleForceArrays:
    """Evaluate the full force chain over parallel per-sample arrays.

    Out-of-soil samples (depth <= 0) yield zero forces. In-soil samples
    that violate a margin are flagged in ``status`` with NaN forces rather
    than aborting the cycle.
    """
    depth = np.asarray(depth, dtype=float)
    rho = np.asarray(rho, dtype=float)
    lt = np.asarray(lt, dtype=float)
    w_load = np.asarray(w_load, dtype=float)
    if abs(math.cos(alpha)) <= margins.sin_margin:
        raise SingularGeometry("cos(alpha) below margin")

    n = depth.size
    status = np.full(n, _OK, dtype=np.int8)
    in_soil = depth > 0.0
    status[~in_soil] = _OUT_OF_SOIL
    status[in_soil & (rho < margins.rho_min)] = _RHO_BELOW_MIN
    status[in_soil & (np.abs(np.sin(rho)) <= margins.sin_margin)] = \
        _SINGULAR_RHO

    solve = in_soil & (status == _OK)
    beta = np.full(n, np.nan)
    if np.any(solve):
        beta_s, feasible = _solve_beta_array(alpha, rho[solve], soil.phi,
                                             soil.delta, margins)
        beta[solve] = beta_s
        bad = np.zeros(n, dtype=bool)
        bad[solve] = ~feasible
        status[bad] = _EMPTY_WINDOW

    valid = in_soil & (status == _OK)
    fee = np.zeros(n)
    pressure = np.zeros(n)
    f_t = np.zeros(n)
    f_n = np.zeros(n)
    if np.any(valid):
        d_v = depth[valid]
        n_gamma, n_c, n_a, n_q = _factor_arrays(alpha, beta[valid],
                                                rho[valid], soil.phi,
                                                soil.delta)
        fee_v = (d_v * d_v * loader.omega * soil.gamma * GRAVITY * n_gamma
                 + soil.cohesion_c * loader.omega * d_v * n_c
                 + soil.adhesion_ca * loader.omega * d_v * n_a
                 + w_load[valid] * n_q)
        p_v = (soil.kc / loader.b + soil.kphi) * d_v ** soil.n
        fee[valid] = fee_v
        pressure[valid] = p_v
        f_t[valid] = (loader.omega * loader.b * p_v
                      + fee_v * math.sin(soil.delta)
                      + soil.adhesion_ca * loader.omega * lt[valid])
        f_n[valid] = fee_v * math.cos(soil.delta)

    failed = in_soil & ~valid
    for arr in (fee, pressure, f_t, f_n):
        arr[failed] = np.nan
    return CycleForceArrays(beta=beta, fee=fee, pressure=pressure,
                            f_t=f_t, f_n=f_n, status=status,
                            in_soil=in_soil, valid=valid)


@dataclass(frozen=True)
class SampleIssue:
    index: int
    reason: str


@dataclass(frozen=True)
class CyclePrediction(Sequence):
    """Sequence of per-sample force predictions plus solved wedges.

    Entries are None for samples that hit a margin (see ``issues``);
    out-of-soil samples carry all-zero predictions.
    """

    forces: tuple
    wedges: tuple
    issues: tuple

    def __len__(self) -> int:
        return len(self.forces)

    def __getitem__(self, i):
        return self.forces[i]

    def __iter__(self) -> Iterator:
        return iter(self.forces)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(f_t, f_n) arrays with NaN at failed samples."""
        f_t = np.array([np.nan if p is None else p.f_t for p in self.forces])
        f_n = np.array([np.nan if p is None else p.f_n for p in self.forces])
        return f_t, f_n


def predict_cycle_forces(samples: Sequence[WedgeState],
                         soil: SoilParameters, loader: LoaderParameters,
                         alpha: float,
                         margins: Margins = DEFAULT_MARGINS
                         ) -> CyclePrediction:
    """Predict bucket forces along a cycle of wedge samples.

    Re-solves the failure angle per sample for the given soil (the angle
    depends on phi and delta), composes the force chain, and collects
    per-sample issues instead of aborting on a singular sample.
    """
    if len(samples) == 0:
        return CyclePrediction(forces=(), wedges=(), issues=())
    depth = np.array([w.depth_d for w in samples])
    rho = np.array([w.rho for w in samples])
    lt = np.array([w.lt for w in samples])
    w_load = np.array([w.w_load for w in samples])
    out = predict_force_arrays(depth, rho, lt, w_load, soil, loader,
                               alpha, margins)

    forces = []
    wedges = []
    issues = []
    for i, wedge in enumerate(samples):
        if out.valid[i]:
            forces.append(ForcePrediction(float(out.fee[i]),
                                          float(out.pressure[i]),
                                          float(out.f_t[i]),
                                          float(out.f_n[i])))
            beta = float(out.beta[i])
            wedges.append(replace(wedge, beta=beta,
                                  lf=wedge.depth_d / math.sin(beta)))
        elif not out.in_soil[i]:
            forces.append(ForcePrediction(0.0, 0.0, 0.0, 0.0))
            wedges.append(wedge)
        else:
            forces.append(None)
            wedges.append(wedge)
            issues.append(SampleIssue(i, _STATUS_TEXT.get(
                int(out.status[i]), "infeasible sample")))
    return CyclePrediction(forces=tuple(forces), wedges=tuple(wedges),
                           issues=tuple(issues))
