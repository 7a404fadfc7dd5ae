"""Comparison methods: point-wise MC3D and semi-global matching on time maps."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .events import POSITIVE_ONLY, EventStream, TimeMap, build_camera_time_map
from .geometry import PinholeIntrinsics, ScanTiming, StereoRig, depth_from_disparity

# timestamps are stored with nanosecond resolution; an event that was
# rounded down by up to half a nanosecond still belongs to its dwell slot
_TIMESTAMP_RESOLUTION_US = 1e-3


# --- MC3D --------------------------------------------------------------------


def mc3d_disparity(tau_c: TimeMap, timing: ScanTiming, rig: StereoRig, latency_est: float = 0.0):
    """Disparity from inverting the raster scan at each pixel's last event (NaN = invalid)."""
    t_rel = np.where(tau_c.valid, tau_c.values, np.nan) - timing.t0 - latency_est
    dt = timing.dt()
    slack = 0.5 * _TIMESTAMP_RESOLUTION_US / dt + 1e-9
    with np.errstate(invalid="ignore"):
        n = np.floor(t_rel / dt + slack)
    ppl = timing.pixels_per_line
    line = np.floor_divide(n, ppl)
    ok = np.isfinite(n) & (line >= 0) & (line < timing.lines)
    col_p = rig.projector_column_to_camera_scale(np.where(ok, line, 0))
    cols = np.arange(tau_c.width)[None, :]
    disp = np.where(ok, cols - col_p, np.nan)
    with np.errstate(invalid="ignore"):
        disp[~(disp > 0)] = np.nan
    return disp


def mc3d_estimate(stream: EventStream, timing: ScanTiming, rig: StereoRig,
                  projector: PinholeIntrinsics | None = None, latency_est: float = 0.0,
                  polarity_filter: str = POSITIVE_ONLY) -> np.ndarray:
    """Point-wise depth: each pixel's last event timestamp names the projector pixel.

    ``latency_est`` is subtracted before inverting the scan model. The
    projector intrinsics default to the rig's.
    """
    if projector is not None and projector != rig.projector:
        rig = StereoRig(rig.camera, projector, rig.baseline, rig.rectified)
    if (stream.width, stream.height) != (rig.camera.width, rig.camera.height):
        raise ConfigError("event stream does not match the camera sensor size")
    tau_c = build_camera_time_map(stream, polarity_filter)
    disp = mc3d_disparity(tau_c, timing, rig, latency_est)
    return np.where(np.isnan(disp), np.nan, depth_from_disparity(rig, np.nan_to_num(disp, nan=1.0)))


@dataclass(frozen=True)
class TwoPlaneCalib:
    """Disparity maps of two reference planes at known depths."""

    d_n: np.ndarray
    d_f: np.ndarray
    z_n: float
    z_f: float

    def __post_init__(self):
        if not self.z_n < self.z_f:
            raise ConfigError("near plane must be closer than the far plane")
        d_n = np.asarray(self.d_n, dtype=float)
        d_f = np.asarray(self.d_f, dtype=float)
        both = np.isfinite(d_n) & np.isfinite(d_f)
        if np.any(d_n[both] <= d_f[both]):
            raise ConfigError("near-plane disparity must exceed far-plane disparity")


def mc3d_legacy_interpolate(d, calib: TwoPlaneCalib, corrected: bool = False) -> np.ndarray:
    """Depth by linear interpolation between two scanned reference planes.

    The default form is ``Z = Z_n + Z_f (d - d_n) / (d_f - d_n)``, as it was
    originally published. ``corrected=True`` uses ``Z_f - Z_n`` as the span,
    which hits ``Z_f`` exactly at ``d = d_f``.
    """
    d = np.asarray(d, dtype=float)
    d_n = np.asarray(calib.d_n, dtype=float)
    d_f = np.asarray(calib.d_f, dtype=float)
    span = d_f - d_n
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = (d - d_n) / span
    scale = calib.z_f - calib.z_n if corrected else calib.z_f
    z = calib.z_n + scale * ratio
    bad = (span == 0) | ~np.isfinite(z)
    return np.where(bad, np.nan, z)


# --- SGM ---------------------------------------------------------------------

_DIRECTIONS = {
    1: [(0, 1)],
    2: [(0, 1), (0, -1)],
    4: [(0, 1), (0, -1), (1, 0), (-1, 0)],
    8: [(0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1)],
}


@dataclass(frozen=True)
class SgmConfig:
    """Penalties are in the units of the matching cost (µs)."""

    p1: float = 5.0
    p2: float = 40.0
    directions: int = 4
    disparity_min: int = 0
    disparity_max: int = 64
    subpixel: bool = False

    def __post_init__(self):
        if not 0 <= self.p1 <= self.p2:
            raise ConfigError("need 0 <= p1 <= p2")
        if self.directions not in _DIRECTIONS:
            raise ConfigError(f"directions must be one of {sorted(_DIRECTIONS)}")
        if not 0 <= self.disparity_min < self.disparity_max:
            raise ConfigError("need 0 <= disparity_min < disparity_max")

    @property
    def disparities(self) -> np.ndarray:
        return np.arange(self.disparity_min, self.disparity_max + 1)


def sgm_raw_cost(tau_c: TimeMap, tau_p: TimeMap, cfg: SgmConfig):
    """Absolute timestamp difference per candidate, shape ``(D, H, W)``.

    Invalid candidates get ten times the 99th percentile of the finite costs.
    Returns the cost volume and the mask of valid entries.
    """
    if tau_c.shape != tau_p.shape:
        raise ConfigError(f"time maps differ in shape: {tau_c.shape} vs {tau_p.shape}")
    if cfg.disparity_max >= tau_c.width:
        raise ConfigError("disparity_max must be smaller than the image width")
    h, w = tau_c.shape
    ds = cfg.disparities
    cost = np.zeros((len(ds), h, w))
    ok = np.zeros((len(ds), h, w), bool)
    tc = np.where(tau_c.valid, tau_c.values, 0.0)
    tp = np.where(tau_p.valid, tau_p.values, 0.0)
    for i, d in enumerate(ds):
        d = int(d)
        if d:
            ok[i, :, d:] = tau_c.valid[:, d:] & tau_p.valid[:, :-d]
            cost[i, :, d:] = np.abs(tc[:, d:] - tp[:, :-d])
        else:
            ok[i] = tau_c.valid & tau_p.valid
            cost[i] = np.abs(tc - tp)
    finite = cost[ok]
    big = 10.0 * float(np.percentile(finite, 99)) if finite.size else 1.0
    if big <= 0:
        big = 1.0
    cost[~ok] = big
    return cost, ok


def _path_step(cost_here, prev, p1, p2):
    """One step of the path recursion; ``prev`` is ``(D, n)``, returns ``(D, n)``."""
    prev_min = prev.min(axis=0)
    up = np.full_like(prev, np.inf)
    down = np.full_like(prev, np.inf)
    up[1:] = prev[:-1] + p1
    down[:-1] = prev[1:] + p1
    best = np.minimum(np.minimum(prev, np.minimum(up, down)), prev_min + p2)
    # subtract first so zero penalties give back the raw cost exactly
    return cost_here + (best - prev_min)


def _aggregate(cost, dy, dx, p1, p2):
    """Path costs along direction ``(dy, dx)`` over the whole volume."""
    n_d, h, w = cost.shape
    agg = np.empty_like(cost)
    if dy == 0:
        cols = range(w) if dx > 0 else range(w - 1, -1, -1)
        first = True
        for x in cols:
            if first:
                agg[:, :, x] = cost[:, :, x]
                first = False
            else:
                agg[:, :, x] = _path_step(cost[:, :, x], agg[:, :, x - dx], p1, p2)
        return agg
    rows = range(h) if dy > 0 else range(h - 1, -1, -1)
    first = True
    for y in rows:
        if first:
            agg[:, y, :] = cost[:, y, :]
            first = False
            continue
        prev_row = agg[:, y - dy, :]
        if dx == 0:
            agg[:, y, :] = _path_step(cost[:, y, :], prev_row, p1, p2)
            continue
        # predecessor of column x is x - dx on the previous row
        xs = np.arange(w)
        src = xs - dx
        has = (src >= 0) & (src < w)
        row = cost[:, y, :].copy()
        row[:, has] = _path_step(cost[:, y, has], prev_row[:, src[has]], p1, p2)
        agg[:, y, :] = row
    return agg


def sgm_aggregate(cost: np.ndarray, cfg: SgmConfig, threads: int = 1) -> np.ndarray:
    """Sum of path costs over the configured directions, in fixed order."""
    dirs = _DIRECTIONS[cfg.directions]
    if threads > 1 and len(dirs) > 1:
        with ThreadPoolExecutor(max_workers=min(threads, len(dirs))) as pool:
            parts = list(pool.map(lambda r: _aggregate(cost, r[0], r[1], cfg.p1, cfg.p2), dirs))
    else:
        parts = [_aggregate(cost, dy, dx, cfg.p1, cfg.p2) for dy, dx in dirs]
    total = parts[0].copy()
    for part in parts[1:]:
        total += part
    return total


def sgm_disparity(tau_c: TimeMap, tau_p: TimeMap, cfg: SgmConfig, threads: int = 1) -> np.ndarray:
    cost, ok = sgm_raw_cost(tau_c, tau_p, cfg)
    total = sgm_aggregate(cost, cfg, threads)
    idx = np.argmin(total, axis=0)
    disp = cfg.disparities[idx].astype(np.float64)
    if cfg.subpixel:
        n = total.shape[0]
        lo, hi = np.clip(idx - 1, 0, n - 1), np.clip(idx + 1, 0, n - 1)
        cm = np.take_along_axis(total, lo[None], 0)[0]
        c0 = np.take_along_axis(total, idx[None], 0)[0]
        cp = np.take_along_axis(total, hi[None], 0)[0]
        denom = cm - 2 * c0 + cp
        inner = (idx > 0) & (idx < n - 1) & (denom > 0)
        with np.errstate(invalid="ignore", divide="ignore"):
            off = np.where(inner, 0.5 * (cm - cp) / np.where(inner, denom, 1.0), 0.0)
        disp += np.clip(off, -0.5, 0.5)
    usable = tau_c.valid & ok.any(axis=0)
    disp[~usable] = np.nan
    return disp


def sgm_estimate(tau_c: TimeMap, tau_p: TimeMap, rig: StereoRig, cfg: SgmConfig,
                 threads: int = 1) -> np.ndarray:
    """Semi-global matching on time maps, triangulated to depth (NaN = invalid)."""
    if tau_c.shape != rig.camera.shape:
        raise ConfigError("time maps must live on the camera grid")
    disp = sgm_disparity(tau_c, tau_p, cfg, threads)
    return np.where(np.isnan(disp), np.nan, depth_from_disparity(rig, np.nan_to_num(disp, nan=1.0)))
