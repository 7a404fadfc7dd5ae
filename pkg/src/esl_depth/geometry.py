"""Rectified camera/projector geometry, scan timing and scene primitives.

All timestamps are in microseconds, all lengths in meters and all image
coordinates in pixels. The camera sits at the origin looking down +Z; the
projector is translated by ``baseline`` along +X, so a scene point at depth
``Z`` lands ``baseline * fx / Z`` columns further left in the projector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError, DomainError

__all__ = [
    "ScanTiming",
    "PinholeIntrinsics",
    "StereoRig",
    "FrontoPlane",
    "SlantedPlane",
    "Sphere",
    "StepEdge",
    "ScenePrimitive",
    "projector_timestamp",
    "transfer_camera_to_projector",
    "disparity_from_depth",
    "depth_from_disparity",
    "intersect_camera_ray",
    "intersect_projector_ray",
    "camera_rays",
    "projector_rays",
    "intersect_rays",
]


@dataclass(frozen=True)
class ScanTiming:
    """Raster-scan timing of a point projector.

    Attributes:
        f: Scan frequency in Hz (one full pass per ``1/f`` seconds).
        lines: Number of raster lines.
        pixels_per_line: Pixels swept along each raster line.
        t0: Start of the scan pass in microseconds.
    """

    f: float
    lines: int
    pixels_per_line: int
    t0: float = 0.0

    def __post_init__(self):
        if not self.f > 0:
            raise ConfigError(f"scan frequency must be positive, got {self.f}")
        if self.lines <= 0 or self.pixels_per_line <= 0:
            raise ConfigError("lines and pixels_per_line must be positive")
        if not math.isfinite(self.t0):
            raise ConfigError("t0 must be finite")

    def dt(self) -> float:
        """Dwell time per projector pixel, in microseconds."""
        return 1e6 / (self.f * self.lines * self.pixels_per_line)

    def dt_line(self) -> float:
        """Time to sweep one raster line, in microseconds."""
        return 1e6 / (self.f * self.lines)

    def pass_duration(self) -> float:
        """Duration of one full scan pass, in microseconds."""
        return 1e6 / self.f


@dataclass(frozen=True)
class PinholeIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ConfigError("focal lengths must be positive")
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("sensor size must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ConfigError("principal point must lie inside the sensor")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def contains(self, col, row):
        """Bounds test on continuous pixel coordinates (pixel centers at integers)."""
        col = np.asarray(col)
        row = np.asarray(row)
        return (col > -0.5) & (col < self.width - 0.5) & (row > -0.5) & (row < self.height - 0.5)


@dataclass(frozen=True)
class StereoRig:
    """Canonical (rectified) camera + projector pair.

    The focal length used for triangulation is ``camera.fx``; projector maps
    are resampled to the camera focal scale before any matching.
    """

    camera: PinholeIntrinsics
    projector: PinholeIntrinsics
    baseline: float
    rectified: bool = True

    def __post_init__(self):
        if not self.baseline > 0:
            raise ConfigError(f"baseline must be positive, got {self.baseline}")

    @property
    def focal(self) -> float:
        return self.camera.fx

    @property
    def bf(self) -> float:
        return self.baseline * self.camera.fx

    def projector_column_to_camera_scale(self, col_p):
        """Map a projector column to the camera-scale rectified column."""
        p, c = self.projector, self.camera
        return (np.asarray(col_p, dtype=float) - p.cx) * (c.fx / p.fx) + c.cx

    def projector_row_to_camera_scale(self, row_p):
        p, c = self.projector, self.camera
        return (np.asarray(row_p, dtype=float) - p.cy) * (c.fy / p.fy) + c.cy

    def camera_column_to_projector_scale(self, col_c):
        p, c = self.projector, self.camera
        return (np.asarray(col_c, dtype=float) - c.cx) * (p.fx / c.fx) + p.cx

    def camera_row_to_projector_scale(self, row_c):
        p, c = self.projector, self.camera
        return (np.asarray(row_c, dtype=float) - c.cy) * (p.fy / c.fy) + p.cy

    def project_to_camera(self, points):
        """Project camera-frame points (..., 3) to camera pixel (col, row)."""
        points = np.asarray(points, dtype=float)
        c = self.camera
        z = points[..., 2]
        return c.fx * points[..., 0] / z + c.cx, c.fy * points[..., 1] / z + c.cy


# --- scene primitives -------------------------------------------------------


@dataclass(frozen=True)
class FrontoPlane:
    z0: float

    def __post_init__(self):
        if not self.z0 > 0:
            raise ConfigError("plane depth must be positive")


@dataclass(frozen=True)
class SlantedPlane:
    """Plane ``normal . X = d`` in the camera frame."""

    normal: tuple[float, float, float]
    d: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = float(np.linalg.norm(n))
        if norm == 0 or abs(n[2]) < 1e-12:
            raise ConfigError("plane normal needs a nonzero z-component")
        object.__setattr__(self, "normal", tuple(float(v) for v in n / norm))
        object.__setattr__(self, "d", float(self.d) / norm)
        if self.d / self.normal[2] <= 0:
            raise ConfigError("plane must cross the optical axis at positive depth")


@dataclass(frozen=True)
class Sphere:
    center: tuple[float, float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ConfigError("sphere radius must be positive")
        if not self.center[2] > 0:
            raise ConfigError("sphere center must be in front of the camera")


@dataclass(frozen=True)
class StepEdge:
    """Two fronto-parallel half-planes split along a camera column.

    Camera pixels with column < ``split_column`` see ``z_near``; the rest see
    ``z_far``. The riser joining both halves lies on the camera ray plane
    through the split, so it is invisible to the camera but can catch
    projector light. Ray casting needs the rig to place the split plane.
    """

    z_near: float
    z_far: float
    split_column: float

    def __post_init__(self):
        if not (0 < self.z_near < self.z_far):
            raise ConfigError("step edge needs 0 < z_near < z_far")


ScenePrimitive = Union[FrontoPlane, SlantedPlane, Sphere, StepEdge]


# --- timing -----------------------------------------------------------------


def projector_timestamp(timing: ScanTiming, line_index, pixel_in_line):
    """Time (µs) at which the laser reaches ``pixel_in_line`` of raster ``line_index``."""
    line_index = np.asarray(line_index)
    pixel_in_line = np.asarray(pixel_in_line)
    if np.any(line_index < 0) or np.any(line_index >= timing.lines):
        raise DomainError(f"line index out of range [0, {timing.lines})")
    if np.any(pixel_in_line < 0) or np.any(pixel_in_line >= timing.pixels_per_line):
        raise DomainError(f"pixel index out of range [0, {timing.pixels_per_line})")
    t = timing.t0 + line_index * timing.dt_line() + pixel_in_line * timing.dt()
    return float(t) if t.ndim == 0 else t


# --- disparity / depth ------------------------------------------------------


def disparity_from_depth(rig: StereoRig, z):
    z_arr = np.asarray(z, dtype=float)
    if np.any(~(z_arr > 0)):
        raise DomainError("depth must be positive")
    d = rig.bf / z_arr
    return float(d) if d.ndim == 0 else d


def depth_from_disparity(rig: StereoRig, d):
    """Triangulate depth from disparity; nonpositive or NaN disparity gives ``inf``."""
    d_arr = np.asarray(d, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(d_arr > 0, rig.bf / np.where(d_arr > 0, d_arr, 1.0), np.inf)
    return float(z) if z.ndim == 0 else z


def transfer_camera_to_projector(rig: StereoRig, x_c, z: float):
    """Transfer camera pixel ``(col, row)`` at depth ``z`` onto the projector.

    Returns ``(col_p, row_p, inside)`` in camera-scale rectified coordinates;
    ``inside`` is False when the point falls outside the projector frustum.
    """
    if not rig.rectified:
        raise DomainError("point transfer requires a rectified rig")
    if not z > 0:
        raise DomainError("depth must be positive")
    col, row = x_c
    if not rig.camera.contains(col, row):
        raise DomainError(f"camera pixel {x_c} out of bounds")
    col_p = col - rig.bf / z
    row_p = row
    pcol = rig.camera_column_to_projector_scale(col_p)
    prow = rig.camera_row_to_projector_scale(row_p)
    inside = bool(rig.projector.contains(pcol, prow))
    return col_p, row_p, inside


# --- ray casting ------------------------------------------------------------


def camera_rays(rig: StereoRig, cols, rows):
    """Unnormalized camera ray directions with unit z-component."""
    c = rig.camera
    cols = np.asarray(cols, dtype=float)
    rows = np.asarray(rows, dtype=float)
    return np.stack([(cols - c.cx) / c.fx, (rows - c.cy) / c.fy, np.ones_like(cols)], axis=-1)


def projector_rays(rig: StereoRig, cols, rows):
    """Origins and unit-z directions of rays through projector pixels."""
    p = rig.projector
    cols = np.asarray(cols, dtype=float)
    rows = np.asarray(rows, dtype=float)
    dirs = np.stack([(cols - p.cx) / p.fx, (rows - p.cy) / p.fy, np.ones_like(cols)], axis=-1)
    origin = np.array([rig.baseline, 0.0, 0.0])
    return origin, dirs


def _step_slope(prim: StepEdge, rig: StereoRig | None) -> float:
    if rig is None:
        raise ConfigError("step edge needs the rig's camera intrinsics")
    return (prim.split_column - 0.5 - rig.camera.cx) / rig.camera.fx


def _intersect_one(prim: ScenePrimitive, origin, dirs, rig) -> np.ndarray:
    """Ray parameter ``s`` of the nearest positive hit (point = origin + s*dir).

    Directions have unit z-component, so ``s`` is the depth increment.
    Misses return ``inf``.
    """
    o = np.asarray(origin, dtype=float)
    shape = dirs.shape[:-1]
    dx, dy, dz = dirs[..., 0], dirs[..., 1], dirs[..., 2]
    inf = np.full(shape, np.inf)

    if isinstance(prim, FrontoPlane):
        s = (prim.z0 - o[2]) / dz
        return np.where(s > 0, s, inf)

    if isinstance(prim, SlantedPlane):
        n = np.asarray(prim.normal)
        denom = dirs @ n
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (prim.d - o @ n) / denom
        return np.where((np.abs(denom) > 1e-15) & (s > 0), s, inf)

    if isinstance(prim, Sphere):
        c = np.asarray(prim.center)
        oc = o - c
        a = np.einsum("...i,...i->...", dirs, dirs)
        b = 2.0 * (dirs @ oc)
        cc = oc @ oc - prim.radius**2
        disc = b * b - 4 * a * cc
        ok = disc >= 0
        sq = np.sqrt(np.where(ok, disc, 0.0))
        s1 = (-b - sq) / (2 * a)
        s2 = (-b + sq) / (2 * a)
        s = np.where(s1 > 0, s1, np.where(s2 > 0, s2, np.inf))
        return np.where(ok, s, inf)

    if isinstance(prim, StepEdge):
        k = _step_slope(prim, rig)
        best = inf.copy()
        # near half-plane: X < k Z at Z = z_near
        s = (prim.z_near - o[2]) / dz
        x = o[0] + s * dx
        best = np.where((s > 0) & (x < k * prim.z_near), np.minimum(best, s), best)
        # far half-plane: X >= k Z at Z = z_far
        s = (prim.z_far - o[2]) / dz
        x = o[0] + s * dx
        best = np.where((s > 0) & (x >= k * prim.z_far), np.minimum(best, s), best)
        # riser on the plane X = k Z between the two depths
        denom = dx - k * dz
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (k * o[2] - o[0]) / denom
        z = o[2] + s * dz
        hit = (np.abs(denom) > 1e-15) & (s > 0) & (z >= prim.z_near) & (z <= prim.z_far)
        best = np.where(hit, np.minimum(best, s), best)
        return best

    raise TypeError(f"unknown primitive {prim!r}")


def intersect_rays(primitives, origin, dirs, rig=None) -> np.ndarray:
    """Nearest positive hit over a list of primitives; ``inf`` on miss."""
    if not isinstance(primitives, (list, tuple)):
        primitives = [primitives]
    best = np.full(dirs.shape[:-1], np.inf)
    for prim in primitives:
        best = np.minimum(best, _intersect_one(prim, origin, dirs, rig))
    return best


def intersect_camera_ray(primitive, rig: StereoRig, x_c):
    """Depth of the nearest hit along the camera ray through ``x_c``, or None."""
    col, row = x_c
    if not rig.camera.contains(col, row):
        raise DomainError(f"camera pixel {x_c} out of bounds")
    dirs = camera_rays(rig, col, row)
    s = float(intersect_rays(primitive, np.zeros(3), dirs, rig))
    return s if math.isfinite(s) else None


def intersect_projector_ray(primitive, rig: StereoRig, x_p):
    """Camera-frame 3D point hit by the projector ray through ``x_p``, or None."""
    col, row = x_p
    if not rig.projector.contains(col, row):
        raise DomainError(f"projector pixel {x_p} out of bounds")
    origin, dirs = projector_rays(rig, col, row)
    s = float(intersect_rays(primitive, origin, dirs, rig))
    if not math.isfinite(s):
        return None
    return origin + s * dirs
