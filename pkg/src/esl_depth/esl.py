"""Depth from spatio-temporal consistency between camera and projector time maps.

For every camera pixel the projector time map is searched along the
(horizontal) epipolar line for the window whose timestamps agree best with
the camera's window, in the least-squares sense. Disparities are searched on
the integer grid and optionally refined with a parabola through the three
costs around the minimum.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .events import TimeMap
from .geometry import StereoRig, depth_from_disparity


@dataclass(frozen=True)
class TvRefine:
    lam: float = 0.1
    iterations: int = 100


@dataclass(frozen=True)
class EslConfig:
    """Search parameters.

    Attributes:
        window: Odd side length of the square matching window (pixels).
        disparity_min, disparity_max: Inclusive integer search range.
        min_valid_fraction: Fraction of window cells that must be valid in
            both maps for a cost to count.
        subpixel: Parabolic refinement of the integer minimum.
        tv_refine: Optional TV denoising of the resulting depth map.
        init_radius: When an initial disparity map is supplied, only
            candidates within this many pixels of it are searched.
    """

    window: int = 7
    disparity_min: int = 0
    disparity_max: int = 64
    min_valid_fraction: float = 0.5
    subpixel: bool = True
    tv_refine: Optional[TvRefine] = None
    init_radius: int = 5

    def __post_init__(self):
        if self.window < 1 or self.window % 2 == 0:
            raise ConfigError(f"window must be odd and >= 1, got {self.window}")
        if not 0 <= self.disparity_min < self.disparity_max:
            raise ConfigError("need 0 <= disparity_min < disparity_max")
        if not 0 < self.min_valid_fraction <= 1:
            raise ConfigError("min_valid_fraction must lie in (0, 1]")
        if self.init_radius < 0:
            raise ConfigError("init_radius must be >= 0")

    @property
    def disparities(self) -> np.ndarray:
        return np.arange(self.disparity_min, self.disparity_max + 1)

    @property
    def min_count(self) -> int:
        return int(np.ceil(self.min_valid_fraction * self.window * self.window - 1e-9))


@dataclass(frozen=True)
class CostProfile:
    disparities: np.ndarray
    costs: np.ndarray  # inf where the candidate is invalid
    argmin: int
    valid: bool

    @property
    def best_disparity(self):
        return int(self.disparities[self.argmin]) if self.valid else None


def _check_maps(tau_c: TimeMap, tau_p: TimeMap, cfg: EslConfig):
    if tau_c.shape != tau_p.shape:
        raise ConfigError(f"time maps differ in shape: {tau_c.shape} vs {tau_p.shape}")
    if cfg.disparity_max >= tau_c.width:
        raise ConfigError("disparity_max must be smaller than the image width")


def _shifted(arr, d, fill):
    """``out[:, x] = arr[:, x - d]`` for integer ``d >= 0``."""
    out = np.full_like(arr, fill)
    if d == 0:
        out[:] = arr
    elif d < arr.shape[1]:
        out[:, d:] = arr[:, :-d]
    return out


def _box_sum(band, half, n_rows, width):
    """Window sums over a zero-padded band.

    ``band`` has ``n_rows + 2*half`` rows and ``width + 2*half`` columns.
    Summed as rows-of-columns in a fixed left-to-right, top-to-bottom order
    so results do not depend on how the image is split into row blocks.
    """
    n = 2 * half + 1
    horiz = np.zeros((band.shape[0], width), dtype=band.dtype)
    for dx in range(n):
        horiz += band[:, dx : dx + width]
    acc = np.zeros((n_rows, width), dtype=band.dtype)
    for dy in range(n):
        acc += horiz[dy : dy + n_rows]
    return acc


def _padded_band(arr, rows, half, fill):
    """Rows ``rows.start - half .. rows.stop + half`` of ``arr``, padded with ``fill`` outside."""
    h, w = arr.shape
    out = np.full((rows.stop - rows.start + 2 * half, w + 2 * half), fill, dtype=arr.dtype)
    lo, hi = max(rows.start - half, 0), min(rows.stop + half, h)
    out[lo - (rows.start - half) : hi - (rows.start - half), half : half + w] = arr[lo:hi]
    return out


def _cost_slice(tc, vc, tp, vp, d, half, min_count, rows):
    """Costs at disparity ``d`` for output ``rows``; cells outside either frame count as invalid."""
    w = tc.shape[1]
    n_rows = rows.stop - rows.start
    tcb = _padded_band(tc, rows, half, 0.0)
    vcb = _padded_band(vc, rows, half, False)
    tpb = _shifted(_padded_band(tp, rows, half, 0.0), d, 0.0)
    vpb = _shifted(_padded_band(vp, rows, half, False), d, False)
    both = vcb & vpb
    diff = np.where(both, tcb - tpb, 0.0)
    s = _box_sum(diff * diff, half, n_rows, w)
    cnt = _box_sum(both.astype(np.int64), half, n_rows, w)
    ok = cnt >= max(min_count, 1)
    cost = np.full(s.shape, np.inf)
    cost[ok] = s[ok] / cnt[ok]
    return cost


def _prepared(tau: TimeMap):
    return np.where(tau.valid, tau.values, 0.0), np.asarray(tau.valid)


def cost_volume(tau_c: TimeMap, tau_p: TimeMap, cfg: EslConfig, rows: slice | None = None) -> np.ndarray:
    """Mean squared timestamp difference for every candidate disparity.

    Returns an array of shape ``(n_disparities, rows, width)`` with ``inf``
    for invalid candidates.
    """
    _check_maps(tau_c, tau_p, cfg)
    tc, vc = _prepared(tau_c)
    tp, vp = _prepared(tau_p)
    rows = rows or slice(0, tau_c.height)
    half = cfg.window // 2
    return np.stack([
        _cost_slice(tc, vc, tp, vp, int(d), half, cfg.min_count, rows) for d in cfg.disparities
    ])


def window_cost(tau_c: TimeMap, tau_p: TimeMap, x_c, d: int, cfg: EslConfig):
    """Matching cost at camera pixel ``x_c = (col, row)`` and disparity ``d``; None if invalid."""
    col, row = x_c
    if not (0 <= col < tau_c.width and 0 <= row < tau_c.height):
        raise ConfigError(f"pixel {x_c} out of bounds")
    if not cfg.disparity_min <= d <= cfg.disparity_max:
        raise ConfigError(f"disparity {d} outside the search range")
    _check_maps(tau_c, tau_p, cfg)
    tc, vc = _prepared(tau_c)
    tp, vp = _prepared(tau_p)
    c = _cost_slice(tc, vc, tp, vp, int(d), cfg.window // 2, cfg.min_count, slice(row, row + 1))
    v = float(c[0, col])
    return v if np.isfinite(v) else None


def _restrict(costs, disparities, init, radius):
    if init is None:
        return costs
    init = np.asarray(init, dtype=float)
    seeded = np.isfinite(init)
    lo = np.where(seeded, init - radius, -np.inf)
    hi = np.where(seeded, init + radius, np.inf)
    d = disparities[:, None, None]
    return np.where((d >= lo) & (d <= hi), costs, np.inf)


def _argmin_rows(tau_c, tau_p, cfg, rows, init):
    costs = cost_volume(tau_c, tau_p, cfg, rows)
    if init is not None:
        costs = _restrict(costs, cfg.disparities, init[rows], cfg.init_radius)
    # first minimum along the disparity axis = smallest disparity on ties
    idx = np.argmin(costs, axis=0)
    best = np.take_along_axis(costs, idx[None], axis=0)[0]
    valid = np.isfinite(best)
    disp = cfg.disparities[idx].astype(np.float64)
    if cfg.subpixel:
        disp += _parabola_offset(costs, idx, valid)
    disp[~valid] = np.nan
    return disp


def _parabola_offset(costs, idx, valid):
    n = costs.shape[0]
    lo = np.clip(idx - 1, 0, n - 1)
    hi = np.clip(idx + 1, 0, n - 1)
    cm = np.take_along_axis(costs, lo[None], axis=0)[0]
    c0 = np.take_along_axis(costs, idx[None], axis=0)[0]
    cp = np.take_along_axis(costs, hi[None], axis=0)[0]
    ok = valid & (idx > 0) & (idx < n - 1) & np.isfinite(cm) & np.isfinite(cp)
    with np.errstate(invalid="ignore", divide="ignore"):
        denom = cm - 2.0 * c0 + cp
        off = 0.5 * (cm - cp) / denom
    ok &= denom > 0
    return np.where(ok, np.clip(off, -0.5, 0.5), 0.0)


def _row_blocks(height, threads):
    n = max(1, min(threads, height))
    edges = np.linspace(0, height, n + 1).astype(int)
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def estimate_disparity(tau_c: TimeMap, tau_p: TimeMap, cfg: EslConfig, init=None, threads: int = 1):
    """Disparity map (float, NaN where no candidate is valid).

    ``init`` optionally seeds a per-pixel search window of ``cfg.init_radius``.
    Rows are independent, so ``threads`` only changes wall time.
    """
    _check_maps(tau_c, tau_p, cfg)
    if init is not None and np.shape(init) != tau_c.shape:
        raise ConfigError("initial disparity map has the wrong shape")
    blocks = _row_blocks(tau_c.height, threads)
    if len(blocks) == 1:
        return _argmin_rows(tau_c, tau_p, cfg, blocks[0], init)
    with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
        parts = list(pool.map(lambda r: _argmin_rows(tau_c, tau_p, cfg, r, init), blocks))
    return np.vstack(parts)


def estimate_depth(tau_c: TimeMap, tau_p: TimeMap, rig: StereoRig, cfg: EslConfig, init=None,
                   threads: int = 1) -> np.ndarray:
    """Depth map on the camera grid; non-finite values mark invalid pixels."""
    if tau_c.shape != rig.camera.shape:
        raise ConfigError("time maps must live on the camera grid")
    disp = estimate_disparity(tau_c, tau_p, cfg, init=init, threads=threads)
    depth = np.where(np.isnan(disp), np.nan, depth_from_disparity(rig, np.nan_to_num(disp, nan=1.0)))
    if cfg.tv_refine is not None:
        from .postproc import tv_denoise

        depth = tv_denoise(depth, cfg.tv_refine.lam, cfg.tv_refine.iterations)
    return depth


def cost_profile(tau_c: TimeMap, tau_p: TimeMap, x_c, cfg: EslConfig) -> CostProfile:
    """All candidate costs at one pixel, for inspection and plotting."""
    col, row = x_c
    if not (0 <= col < tau_c.width and 0 <= row < tau_c.height):
        raise ConfigError(f"pixel {x_c} out of bounds")
    costs = cost_volume(tau_c, tau_p, cfg, slice(row, row + 1))[:, 0, col]
    idx = int(np.argmin(costs))
    return CostProfile(cfg.disparities, costs, idx, bool(np.isfinite(costs[idx])))
