"""Pseudocolor images of depth and time maps, written as binary PPM."""

from __future__ import annotations

import numpy as np

from .errors import DomainError, IOFailure, ParseError
from .events import TimeMap
from .palette import TURBO

PALETTE = np.array(TURBO, dtype=np.uint8)
_MID = len(PALETTE) // 2


def _values(m):
    if isinstance(m, TimeMap):
        return np.where(m.valid, m.values, np.nan)
    return np.asarray(m, dtype=float)


def palette_index(m, vrange=None) -> np.ndarray:
    """Palette index per cell, -1 for invalid (non-finite) cells.

    Args:
        m: Depth map array or TimeMap.
        vrange: ``(lo, hi)``; defaults to the min and max of the valid cells.
    """
    v = _values(m)
    if v.ndim != 2 or v.size == 0:
        raise DomainError(f"expected a nonempty 2-D map, got shape {v.shape}")
    ok = np.isfinite(v)
    idx = np.full(v.shape, -1, dtype=np.int64)
    if not ok.any():
        return idx
    lo, hi = (float(np.min(v[ok])), float(np.max(v[ok]))) if vrange is None else map(float, vrange)
    if not hi > lo:
        idx[ok] = _MID
        return idx
    top = len(PALETTE) - 1
    scaled = (v[ok] - lo) / (hi - lo) * top
    idx[ok] = np.clip(np.floor(scaled + 0.5), 0, top).astype(np.int64)
    return idx


def colorize(m, vrange=None) -> np.ndarray:
    """``(H, W, 3)`` uint8 image: blue for low values, red for high, black for invalid."""
    idx = palette_index(m, vrange)
    img = np.zeros(idx.shape + (3,), dtype=np.uint8)
    ok = idx >= 0
    img[ok] = PALETTE[idx[ok]]
    return img


def render_profile(costs, argmin=None, height: int = 96) -> np.ndarray:
    """Bar chart of a cost vector: one column per candidate, the argmin in red.

    Invalid (non-finite) candidates are left black.
    """
    c = np.asarray(costs, dtype=float)
    img = np.zeros((height, len(c), 3), dtype=np.uint8)
    ok = np.isfinite(c)
    if not ok.any():
        return img
    lo, hi = float(np.min(c[ok])), float(np.max(c[ok]))
    frac = np.zeros_like(c)
    if hi > lo:
        frac[ok] = (c[ok] - lo) / (hi - lo)
    bars = np.where(ok, np.maximum(1, np.round(frac * (height - 1))).astype(int), 0)
    rows = np.arange(height)[::-1, None]
    img[rows < bars[None, :]] = (200, 200, 200)
    if argmin is not None and ok[argmin]:
        img[rows[:, 0] < bars[argmin], argmin] = PALETTE[-1]
    return img


def write_ppm(path, img) -> None:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3 or img.dtype != np.uint8:
        raise DomainError("expected an (H, W, 3) uint8 image")
    h, w = img.shape[:2]
    try:
        with open(path, "wb") as fh:
            fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
            fh.write(np.ascontiguousarray(img).tobytes())
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def read_ppm(path) -> np.ndarray:
    """Minimal P6 reader (8-bit, no comments), used to check written files."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    parts = raw.split(maxsplit=4)
    if len(parts) < 5 or parts[0] != b"P6" or parts[3] != b"255":
        raise ParseError(f"{path}: not an 8-bit P6 image")
    w, h = int(parts[1]), int(parts[2])
    data = raw[len(raw) - w * h * 3:]
    return np.frombuffer(data, dtype=np.uint8).reshape(h, w, 3).copy()
