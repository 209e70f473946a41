"""Trajectories, stockpile surfaces and per-sample wedge geometry.

Surfaces come in two flavors: an infinite sloped line (undisturbed pile
face) and an x-monotone polyline (pile face carved by a previous pass).
All coordinates are planar (x horizontal along the dig, z up), in meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (DegenerateRegion, InfeasibleGeometry, NonMonotonePath)
from .soil import (DEFAULT_MARGINS, GRAVITY, LoaderParameters, Margins,
                   WedgeState)


class Surface:
    """Common interface for stockpile surface models."""

    nominal_alpha: float

    def height_at(self, x):
        raise NotImplementedError

    def direction_angle_at(self, x):
        raise NotImplementedError

    def depth_of(self, x, z):
        raise NotImplementedError

    def vertex_xs(self) -> np.ndarray:
        """Interior breakpoints of the surface (empty for a line)."""
        return np.empty(0)


@dataclass(frozen=True)
class SlopedLine(Surface):
    """Straight pile face through ``origin`` rising at angle ``alpha``."""

    origin: tuple[float, float] = (0.0, 0.0)
    alpha: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.alpha < math.radians(45.0):
            raise ValueError("alpha must lie in [0 deg, 45 deg)")

    @property
    def nominal_alpha(self) -> float:
        return self.alpha

    def height_at(self, x):
        x = np.asarray(x, dtype=float)
        return self.origin[1] + math.tan(self.alpha) * (x - self.origin[0])

    def direction_angle_at(self, x):
        return np.full(np.shape(x), self.alpha)

    def depth_of(self, x, z):
        # perpendicular distance below the line; zero on or above it
        gap = self.height_at(x) - np.asarray(z, dtype=float)
        return np.maximum(gap, 0.0) * math.cos(self.alpha)


@dataclass(frozen=True)
class Polyline(Surface):
    """Piecewise-linear surface with strictly increasing vertex x.

    Outside the vertex span the end segments are extended with their own
    slopes. ``nominal_alpha`` carries the inclination of the undisturbed
    pile for the bearing-factor evaluation (the wedge model keeps the
    nominal pile angle; only depth adapts to the carved shape).
    """

    vertices: np.ndarray
    nominal_alpha: float = 0.0

    def __post_init__(self) -> None:
        verts = np.array(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 2:
            raise ValueError("vertices must be an (n>=2, 2) array")
        if not np.all(np.diff(verts[:, 0]) > 0.0):
            raise ValueError("vertex x must be strictly increasing")
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)

    def vertex_xs(self) -> np.ndarray:
        return self.vertices[:, 0]

    def height_at(self, x):
        x = np.asarray(x, dtype=float)
        xs, zs = self.vertices[:, 0], self.vertices[:, 1]
        z = np.interp(x, xs, zs)
        slope0 = (zs[1] - zs[0]) / (xs[1] - xs[0])
        slope1 = (zs[-1] - zs[-2]) / (xs[-1] - xs[-2])
        z = np.where(x < xs[0], zs[0] + slope0 * (x - xs[0]), z)
        z = np.where(x > xs[-1], zs[-1] + slope1 * (x - xs[-1]), z)
        return z

    def direction_angle_at(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xs, zs = self.vertices[:, 0], self.vertices[:, 1]
        seg = np.clip(np.searchsorted(xs, x, side="right") - 1,
                      0, xs.size - 2)
        dx = xs[seg + 1] - xs[seg]
        dz = zs[seg + 1] - zs[seg]
        return np.arctan2(dz, dx)

    def depth_of(self, x, z):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        z = np.atleast_1d(np.asarray(z, dtype=float))
        below = z < self.height_at(x)
        dist = self._min_segment_distance(x, z)
        return np.where(below, dist, 0.0)

    def _min_segment_distance(self, x, z):
        a = self.vertices[:-1]
        b = self.vertices[1:]
        ab = b - a                              # (k, 2)
        p = np.stack([x, z], axis=-1)           # (m, 2)
        ap = p[:, None, :] - a[None, :, :]      # (m, k, 2)
        denom = np.einsum("kj,kj->k", ab, ab)
        t = np.einsum("mkj,kj->mk", ap, ab) / denom
        t = np.clip(t, 0.0, 1.0)
        closest = a[None, :, :] + t[..., None] * ab[None, :, :]
        d2 = np.sum((p[:, None, :] - closest) ** 2, axis=-1)
        return np.sqrt(np.min(d2, axis=1))


def penetration_depth(tip: tuple[float, float], surface: Surface) -> float:
    """Perpendicular (line) or minimum (polyline) distance below the surface."""
    x, z = tip
    if not (math.isfinite(x) and math.isfinite(z)):
        raise ValueError("tip coordinates must be finite")
    return float(np.asarray(surface.depth_of(np.array([x]),
                                             np.array([z])))[0])


@dataclass(frozen=True)
class TrajectorySample:
    """Bucket tip state at one time instant."""

    t: float    # s
    x: float    # m
    z: float    # m
    rho: float  # blade angle relative to the stockpile surface, rad

    def __post_init__(self) -> None:
        for name in ("t", "x", "z", "rho"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def tip(self) -> tuple[float, float]:
        return (self.x, self.z)


@dataclass(frozen=True)
class CycleDataset:
    """One loading cycle: trajectory plus observed force series."""

    samples: tuple[TrajectorySample, ...]
    f_t_obs: np.ndarray
    f_n_obs: np.ndarray
    surface: Surface
    loader: LoaderParameters

    def __post_init__(self) -> None:
        samples = tuple(self.samples)
        ft = np.array(self.f_t_obs, dtype=float)
        fn = np.array(self.f_n_obs, dtype=float)
        if not (len(samples) == ft.size == fn.size):
            raise ValueError("samples and force series must have equal length")
        times = [s.t for s in samples]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("sample times must be nondecreasing")
        ft.setflags(write=False)
        fn.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "f_t_obs", ft)
        object.__setattr__(self, "f_n_obs", fn)

    @property
    def n(self) -> int:
        return len(self.samples)

    def tip_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return (np.array([s.x for s in self.samples]),
                np.array([s.z for s in self.samples]))

    def rho_array(self) -> np.ndarray:
        return np.array([s.rho for s in self.samples])

    def t_array(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])


def wedge_from_sample(sample: TrajectorySample, surface: Surface,
                      beta: float, w_load: float,
                      margins: Margins = DEFAULT_MARGINS) -> WedgeState:
    """Build the wedge geometry for one in-soil sample.

    Uses the planar right-triangle relations lt = d/sin(rho) and
    lf = d/sin(beta).
    """
    d = penetration_depth(sample.tip, surface)
    if d <= 0.0:
        raise InfeasibleGeometry("tip is on or above the surface")
    if sample.rho < margins.rho_min:
        raise InfeasibleGeometry(
            f"blade angle {sample.rho:.4f} below minimum "
            f"{margins.rho_min:.4f}")
    if not beta > 0.0 or math.sin(beta) <= margins.sin_margin:
        raise InfeasibleGeometry(f"failure angle {beta:.4f} below margins")
    return WedgeState(depth_d=d, rho=sample.rho,
                      lt=d / math.sin(sample.rho),
                      lf=d / math.sin(beta), beta=beta, w_load=w_load)


# ---------------------------------------------------------------------------
# Swept soil load
# ---------------------------------------------------------------------------

def _positive_gap_integral(surface: Surface, x0: float, z0: float,
                           x1: float, z1: float) -> float:
    """Integral of max(surface - path, 0) dx over one path segment."""
    if x1 <= x0:
        return 0.0
    inner = surface.vertex_xs()
    inner = inner[(inner > x0) & (inner < x1)]
    xs = np.concatenate([[x0], inner, [x1]])
    path_z = z0 + (z1 - z0) * (xs - x0) / (x1 - x0)
    gap = np.asarray(surface.height_at(xs)) - path_z
    total = 0.0
    for a, b, ga, gb in zip(xs[:-1], xs[1:], gap[:-1], gap[1:]):
        w = b - a
        if ga >= 0.0 and gb >= 0.0:
            total += 0.5 * (ga + gb) * w
        elif ga <= 0.0 and gb <= 0.0:
            continue
        else:
            # single sign change on a linear piece
            cross = ga / (ga - gb)
            if ga > 0.0:
                total += 0.5 * ga * cross * w
            else:
                total += 0.5 * gb * (1.0 - cross) * w
    return total


def swept_area_profile(samples: Sequence[TrajectorySample],
                       surface: Surface) -> np.ndarray:
    """Cumulative area between the trajectory prefix and the surface.

    Entry/exit crossings are handled by clipping the gap to its positive
    part, so the profile is nondecreasing along an x-monotone dig. Raises
    DegenerateRegion when the trajectory doubles back in x.
    """
    n = len(samples)
    area = np.zeros(n)
    if n == 0:
        return area
    xs = np.array([s.x for s in samples])
    zs = np.array([s.z for s in samples])
    span = max(float(xs.max() - xs.min()), 1e-12)
    if np.any(np.diff(xs) < -1e-9 * span):
        raise DegenerateRegion("trajectory x decreases; swept region would "
                               "self-intersect")
    running = 0.0
    for i in range(n - 1):
        running += _positive_gap_integral(surface, xs[i], zs[i],
                                          xs[i + 1], zs[i + 1])
        area[i + 1] = running
    return area


def swept_load_weight(samples_so_far: Sequence[TrajectorySample],
                      surface: Surface, gamma: float, omega: float) -> float:
    """Weight of the soil swept between the trajectory prefix and surface."""
    if gamma <= 0.0 or omega <= 0.0:
        raise ValueError("gamma and omega must be positive")
    profile = swept_area_profile(samples_so_far, surface)
    if profile.size == 0:
        return 0.0
    return gamma * GRAVITY * omega * float(profile[-1])


def cycle_wedges(samples: Sequence[TrajectorySample], surface: Surface,
                 gamma: float, loader: LoaderParameters) -> list[WedgeState]:
    """Unsolved wedge states (beta NaN) for a whole trajectory.

    Per-sample surcharge is the weight of soil swept so far scaled by the
    given density; the failure angle is left to the force pipeline, which
    needs the candidate friction angles.
    """
    xs = np.array([s.x for s in samples])
    zs = np.array([s.z for s in samples])
    if xs.size == 0:
        return []
    depth = np.asarray(surface.depth_of(xs, zs))
    area = swept_area_profile(samples, surface)
    w_load = gamma * GRAVITY * loader.omega * area
    wedges = []
    for i, s in enumerate(samples):
        d = float(depth[i])
        lt = d / math.sin(s.rho) if d > 0.0 else 0.0
        wedges.append(WedgeState(depth_d=d, rho=s.rho, lt=lt, lf=math.nan,
                                 beta=math.nan, w_load=float(w_load[i])))
    return wedges


# ---------------------------------------------------------------------------
# Path generation and surface update
# ---------------------------------------------------------------------------

def quadratic_bezier_path(p0: tuple[float, float], p1: tuple[float, float],
                          p2: tuple[float, float], n_samples: int,
                          duration: float, surface: Surface | None = None,
                          rho_min: float = DEFAULT_MARGINS.rho_min
                          ) -> list[TrajectorySample]:
    """Sample a quadratic Bezier tip path at uniform parameter values.

    The blade angle at each sample is the angle between the path tangent
    and the local surface direction (horizontal when no surface is given),
    clamped to [rho_min, pi/2].
    """
    if n_samples < 2:
        raise ValueError("n_samples must be at least 2")
    if duration <= 0.0:
        raise ValueError("duration must be positive")
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    u = np.linspace(0.0, 1.0, n_samples)
    w = u[:, None]
    pts = (1.0 - w) ** 2 * p0 + 2.0 * w * (1.0 - w) * p1 + w ** 2 * p2
    tangent = 2.0 * (1.0 - w) * (p1 - p0) + 2.0 * w * (p2 - p1)
    theta_t = np.arctan2(tangent[:, 1], tangent[:, 0])
    if surface is None:
        theta_s = np.zeros(n_samples)
    else:
        theta_s = np.asarray(surface.direction_angle_at(pts[:, 0]))
    diff = np.arctan2(np.sin(theta_t - theta_s), np.cos(theta_t - theta_s))
    rho = np.clip(np.abs(diff), rho_min, math.pi / 2.0)
    return [TrajectorySample(t=float(ui * duration), x=float(pts[i, 0]),
                             z=float(pts[i, 1]), rho=float(rho[i]))
            for i, ui in enumerate(u)]


def _collapse_vertical_moves(xs: np.ndarray, zs: np.ndarray, tol: float):
    """Reduce duplicate-x path points to their lowest z (envelope view)."""
    out_x, out_z = [xs[0]], [zs[0]]
    for x, z in zip(xs[1:], zs[1:]):
        if x - out_x[-1] <= tol:
            out_z[-1] = min(out_z[-1], z)
        else:
            out_x.append(x)
            out_z.append(z)
    return np.array(out_x), np.array(out_z)


def _prune_collinear(xs: np.ndarray, zs: np.ndarray, tol: float):
    keep = [0]
    for i in range(1, xs.size - 1):
        x0, z0 = xs[keep[-1]], zs[keep[-1]]
        cross = ((xs[i] - x0) * (zs[i + 1] - z0)
                 - (zs[i] - z0) * (xs[i + 1] - x0))
        scale = max(1.0, abs(xs[i + 1] - x0), abs(zs[i + 1] - z0))
        if abs(cross) > tol * scale:
            keep.append(i)
    keep.append(xs.size - 1)
    return xs[keep], zs[keep]


def surface_after_cycle(prior_surface: Surface,
                        cycle_trajectory: Sequence[TrajectorySample]
                        ) -> Polyline:
    """Surface left behind by a pass: the lower envelope of prior surface
    and trajectory inside the excavated span, the prior surface outside.

    The soil is assumed to retain the carved shape (no collapse to the
    angle of repose). Raises NonMonotonePath when the trajectory doubles
    back in x beyond tolerance.
    """
    xs = np.array([s.x for s in cycle_trajectory], dtype=float)
    zs = np.array([s.z for s in cycle_trajectory], dtype=float)
    if xs.size < 2:
        raise ValueError("trajectory needs at least two samples")
    span = max(float(xs.max() - xs.min()), 1e-12)
    tol = 1e-9 * span
    if np.any(np.diff(xs) < -tol):
        raise NonMonotonePath("trajectory x decreases beyond tolerance")
    xs, zs = _collapse_vertical_moves(xs, zs, tol)

    pad = max(1.0, 0.5 * span)
    lo = xs[0] - pad
    hi = xs[-1] + pad
    inner = prior_surface.vertex_xs()
    inner = inner[(inner > lo) & (inner < hi)]
    bx = np.unique(np.concatenate([[lo, hi], inner, xs]))

    prior_z = np.asarray(prior_surface.height_at(bx), dtype=float)
    path_z = np.interp(bx, xs, zs, left=np.inf, right=np.inf)
    env = np.minimum(prior_z, path_z)

    # insert exact crossings where prior and path swap order
    gap = prior_z - path_z
    out_x, out_z = [bx[0]], [env[0]]
    for i in range(bx.size - 1):
        ga, gb = gap[i], gap[i + 1]
        if np.isfinite(ga) and np.isfinite(gb) and (ga > 0) != (gb > 0) \
                and ga != 0.0 and gb != 0.0:
            xc = bx[i] + ga / (ga - gb) * (bx[i + 1] - bx[i])
            zc = float(np.asarray(prior_surface.height_at(xc)))
            if out_x[-1] + tol < xc < bx[i + 1] - tol:
                out_x.append(xc)
                out_z.append(zc)
        out_x.append(bx[i + 1])
        out_z.append(env[i + 1])
    out_x = np.array(out_x)
    out_z = np.array(out_z)
    out_x, out_z = _prune_collinear(out_x, out_z, 1e-12)
    return Polyline(np.column_stack([out_x, out_z]),
                    nominal_alpha=prior_surface.nominal_alpha)
