"""Depth-map clean-up: median filtering, hole filling and TV denoising.

Depth maps are float arrays where non-finite entries are invalid. None of
the steps here can push a valid depth outside the range of its input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .errors import ConfigError


@dataclass(frozen=True)
class PostprocConfig:
    median: bool = True
    median_kernel: int = 5
    inpaint: bool = True
    max_hole_radius: float = 4.0
    tv: bool = True
    tv_lambda: float = 0.1
    tv_iterations: int = 100


def median_filter(depth, kernel: int = 5) -> np.ndarray:
    """Median of the valid neighbors of each valid pixel; invalid pixels stay invalid."""
    if kernel < 3 or kernel % 2 == 0:
        raise ConfigError(f"median kernel must be odd and >= 3, got {kernel}")
    depth = np.asarray(depth, dtype=float)
    valid = np.isfinite(depth)
    if not valid.any():
        return np.full(depth.shape, np.nan)
    half = kernel // 2
    padded = np.pad(np.where(valid, depth, np.nan), half, constant_values=np.nan)
    windows = sliding_window_view(padded, (kernel, kernel))[valid]
    out = np.full(depth.shape, np.nan)
    out[valid] = np.nanmedian(windows.reshape(len(windows), -1), axis=1)
    return out


def inpaint_holes(depth, max_hole_radius: float = 4.0, tol: float = 1e-6,
                  max_iterations: int = 1000) -> np.ndarray:
    """Fill small holes by harmonic (neighbor-average) interpolation.

    Only invalid pixels within ``max_hole_radius`` of a valid pixel are
    filled; they are relaxed with Jacobi sweeps over their 4-neighbors
    until the largest update drops below ``tol`` meters.
    """
    if max_hole_radius < 0:
        raise ConfigError("max_hole_radius must be >= 0")
    depth = np.asarray(depth, dtype=float)
    valid = np.isfinite(depth)
    if valid.all() or not valid.any():
        return depth.copy()
    dist, (iy, ix) = ndimage.distance_transform_edt(~valid, return_indices=True)
    fill = ~valid & (dist <= max_hole_radius)
    out = np.where(valid, depth, np.nan)
    if not fill.any():
        return out
    out[fill] = depth[iy[fill], ix[fill]]
    known = valid | fill
    vals = np.where(known, out, 0.0)
    w = known.astype(float)
    for _ in range(max_iterations):
        pv = np.pad(vals, 1)
        pw = np.pad(w, 1)
        num = pv[:-2, 1:-1] + pv[2:, 1:-1] + pv[1:-1, :-2] + pv[1:-1, 2:]
        den = pw[:-2, 1:-1] + pw[2:, 1:-1] + pw[1:-1, :-2] + pw[1:-1, 2:]
        upd = fill & (den > 0)
        new = vals.copy()
        new[upd] = num[upd] / den[upd]
        change = np.max(np.abs(new[upd] - vals[upd])) if upd.any() else 0.0
        vals = new
        if change < tol:
            break
    out[fill] = vals[fill]
    return out


def _grad(u, mx, my):
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:, :-1] = (u[:, 1:] - u[:, :-1]) * mx[:, :-1]
    gy[:-1, :] = (u[1:, :] - u[:-1, :]) * my[:-1, :]
    return gx, gy


def _div(px, py, mx, my):
    """Negative adjoint of the masked forward-difference gradient."""
    px = px * mx
    py = py * my
    d = np.zeros_like(px)
    d[:, :-1] += px[:, :-1]
    d[:, 1:] -= px[:, :-1]
    d[:-1, :] += py[:-1, :]
    d[1:, :] -= py[:-1, :]
    return d


def _edge_masks(valid):
    mx = np.zeros(valid.shape)
    my = np.zeros(valid.shape)
    mx[:, :-1] = valid[:, :-1] & valid[:, 1:]
    my[:-1, :] = valid[:-1, :] & valid[1:, :]
    return mx, my


def total_variation(depth) -> float:
    """Isotropic TV summed over pixel pairs that are both valid."""
    depth = np.asarray(depth, dtype=float)
    valid = np.isfinite(depth)
    mx, my = _edge_masks(valid)
    gx, gy = _grad(np.where(valid, depth, 0.0), mx, my)
    return float(np.sum(np.sqrt(gx * gx + gy * gy)))


def tv_denoise(depth, lam: float = 0.1, iterations: int = 100) -> np.ndarray:
    """ROF denoising ``min_u sum (u - z)^2 / (2 lam) + TV(u)`` by dual projection.

    Invalid pixels take no part in either term and stay invalid. The
    returned map never has more total variation than the input.
    """
    if not lam > 0:
        raise ConfigError("TV lambda must be positive")
    if iterations < 1:
        raise ConfigError("TV iterations must be >= 1")
    z_in = np.asarray(depth, dtype=float)
    valid = np.isfinite(z_in)
    if not valid.any():
        return z_in.copy()
    mx, my = _edge_masks(valid)
    # work relative to the mean so the dual step is scale-free in offsets
    base = float(np.mean(z_in[valid]))
    z = np.where(valid, z_in - base, 0.0)
    px = np.zeros_like(z)
    py = np.zeros_like(z)
    tau = 0.125
    for _ in range(iterations):
        gx, gy = _grad(_div(px, py, mx, my) - z / lam, mx, my)
        norm = 1.0 + tau * np.sqrt(gx * gx + gy * gy)
        px = (px + tau * gx) / norm
        py = (py + tau * gy) / norm
    u = z - lam * _div(px, py, mx, my)
    out = np.where(valid, u + base, np.nan)
    # clamp to the input range; projection keeps the result in it up to rounding
    lo, hi = float(np.min(z_in[valid])), float(np.max(z_in[valid]))
    out[valid] = np.clip(out[valid], lo, hi)
    if total_variation(out) > total_variation(z_in):
        return z_in.copy()
    return out


def postprocess(depth, cfg: PostprocConfig = PostprocConfig()) -> np.ndarray:
    """Median, then inpainting, then TV, each step switchable."""
    out = np.asarray(depth, dtype=float)
    if cfg.median:
        out = median_filter(out, cfg.median_kernel)
    if cfg.inpaint:
        out = inpaint_holes(out, cfg.max_hole_radius)
    if cfg.tv:
        out = tv_denoise(out, cfg.tv_lambda, cfg.tv_iterations)
    return out
