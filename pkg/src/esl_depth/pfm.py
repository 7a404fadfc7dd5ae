"""Little-endian PFM reading and writing for depth and time maps.

Maps are single-channel (``Pf``) float32 with scale ``-1.0``. Invalid cells
are stored as NaN. Rows are written bottom-up, as the format prescribes.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, IOFailure, ParseError


def write_pfm(path, data) -> None:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise DomainError(f"expected a nonempty 2-D map, got shape {arr.shape}")
    # +-inf is kept; it marks e.g. zero-disparity pixels
    body = np.ascontiguousarray(np.flipud(arr).astype("<f4"))
    h, w = arr.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"Pf\n{w} {h}\n-1.0\n".encode("ascii"))
            fh.write(body.tobytes())
    except OSError as exc:
        raise IOFailure(f"cannot write {path}: {exc}") from exc


def _tokens(raw: bytes, count: int):
    """First ``count`` whitespace-separated header tokens and the offset after them."""
    out = []
    pos = 0
    n = len(raw)
    while len(out) < count:
        while pos < n and raw[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while pos < n and not raw[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError("truncated PFM header")
        out.append(raw[start:pos].decode("ascii", errors="replace"))
    # exactly one whitespace byte separates the header from the data
    return out, pos + 1


def read_pfm(path) -> np.ndarray:
    """Load a single-channel PFM as float64 (top row first)."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    (magic, w, h, scale), offset = _tokens(raw, 4)
    if magic != "Pf":
        raise ParseError(f"{path}: expected a single-channel 'Pf' map, got {magic!r}")
    try:
        w, h, scale = int(w), int(h), float(scale)
    except ValueError as exc:
        raise ParseError(f"{path}: bad PFM header") from exc
    if w <= 0 or h <= 0 or scale == 0:
        raise ParseError(f"{path}: bad PFM dimensions or scale")
    dtype = "<f4" if scale < 0 else ">f4"
    need = w * h * 4
    if len(raw) - offset != need:
        raise ParseError(f"{path}: expected {need} data bytes, found {len(raw) - offset}")
    data = np.frombuffer(raw, dtype=dtype, count=w * h, offset=offset).reshape(h, w)
    return np.flipud(data).astype(np.float64)
