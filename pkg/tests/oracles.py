"""Slow, loop-based reference implementations used as test oracles.

None of these import the package's numerical kernels; they restate each
definition directly, one pixel (or event, or path step) at a time.
"""

from __future__ import annotations

import math

import numpy as np


def window_cost(tc, vc, tp, vp, col, row, d, window, min_count):
    """Mean squared difference over cells valid in both maps (None if too few)."""
    h, w = tc.shape
    half = window // 2
    total = 0.0
    n = 0
    for dy in range(-half, half + 1):
        for dx in range(-half, half + 1):
            y, xc = row + dy, col + dx
            xp = xc - d
            if not (0 <= y < h and 0 <= xc < w and 0 <= xp < w):
                continue
            if vc[y, xc] and vp[y, xp]:
                diff = tc[y, xc] - tp[y, xp]
                total += diff * diff
                n += 1
    if n < max(min_count, 1):
        return None
    return total / n


def esl_argmin(tc, vc, tp, vp, window, dmin, dmax, min_count):
    """Integer disparity per pixel by exhaustive search; NaN where no candidate is valid."""
    h, w = tc.shape
    out = np.full((h, w), np.nan)
    for row in range(h):
        for col in range(w):
            best = None
            best_d = None
            for d in range(dmin, dmax + 1):
                c = window_cost(tc, vc, tp, vp, col, row, d, window, min_count)
                if c is not None and (best is None or c < best):
                    best, best_d = c, d
            if best_d is not None:
                out[row, col] = best_d
    return out


def sgm_raw_cost(tc, vc, tp, vp, disparities):
    """Per-candidate absolute difference; invalid entries get 10x the 99th percentile."""
    h, w = tc.shape
    cost = [[[None] * w for _ in range(h)] for _ in disparities]
    finite = []
    for i, d in enumerate(disparities):
        for y in range(h):
            for x in range(w):
                if x - d >= 0 and vc[y, x] and vp[y, x - d]:
                    c = abs(tc[y, x] - tp[y, x - d])
                    cost[i][y][x] = c
                    finite.append(c)
    big = 10.0 * float(np.percentile(finite, 99)) if finite else 1.0
    if big <= 0:
        big = 1.0
    return [[[big if c is None else c for c in line] for line in plane] for plane in cost], big


def sgm_path(cost, dy, dx, p1, p2):
    """Textbook path recursion L(p, d) = C(p, d) + min(...) - min_k L(p - r, k)."""
    n_d = len(cost)
    h, w = len(cost[0]), len(cost[0][0])
    L = [[[0.0] * w for _ in range(h)] for _ in range(n_d)]
    ys = range(h) if dy >= 0 else range(h - 1, -1, -1)
    xs = range(w) if dx >= 0 else range(w - 1, -1, -1)
    for y in ys:
        for x in xs:
            py, px = y - dy, x - dx
            if not (0 <= py < h and 0 <= px < w) or (dy == 0 and dx == 0):
                for i in range(n_d):
                    L[i][y][x] = cost[i][y][x]
                continue
            prev = [L[i][py][px] for i in range(n_d)]
            m = min(prev)
            for i in range(n_d):
                cands = [prev[i], m + p2]
                if i > 0:
                    cands.append(prev[i - 1] + p1)
                if i < n_d - 1:
                    cands.append(prev[i + 1] + p1)
                L[i][y][x] = cost[i][y][x] + min(cands) - m
    return L


DIRECTIONS = {
    1: [(0, 1)],
    2: [(0, 1), (0, -1)],
    4: [(0, 1), (0, -1), (1, 0), (-1, 0)],
    8: [(0, 1), (0, -1), (1, 0), (-1, 0), (1, 1), (1, -1), (-1, 1), (-1, -1)],
}


def sgm_disparity(tc, vc, tp, vp, disparities, p1, p2, directions):
    cost, _ = sgm_raw_cost(tc, vc, tp, vp, disparities)
    n_d = len(disparities)
    h, w = tc.shape
    total = [[[0.0] * w for _ in range(h)] for _ in range(n_d)]
    for dy, dx in DIRECTIONS[directions]:
        L = sgm_path(cost, dy, dx, p1, p2)
        for i in range(n_d):
            for y in range(h):
                for x in range(w):
                    total[i][y][x] += L[i][y][x]
    out = np.full((h, w), np.nan)
    for y in range(h):
        for x in range(w):
            if not vc[y, x]:
                continue
            if not any(x - d >= 0 and vp[y, x - d] for d in disparities):
                continue
            vals = [total[i][y][x] for i in range(n_d)]
            out[y, x] = disparities[vals.index(min(vals))]
    return out


def camera_time_map(xs, ys, ts, ps, width, height, positive_only=True):
    """Last (largest) timestamp per pixel by scanning every event for every pixel."""
    out = np.full((height, width), np.nan)
    for y in range(height):
        for x in range(width):
            best = None
            for ex, ey, et, ep in zip(xs, ys, ts, ps):
                if ex == x and ey == y and (ep > 0 or not positive_only):
                    best = et if best is None else max(best, et)
            if best is not None:
                out[y, x] = best
    return out


def median_filter(depth, kernel):
    h, w = depth.shape
    half = kernel // 2
    out = np.full((h, w), np.nan)
    for y in range(h):
        for x in range(w):
            if not math.isfinite(depth[y, x]):
                continue
            vals = sorted(
                depth[yy, xx]
                for yy in range(max(0, y - half), min(h, y + half + 1))
                for xx in range(max(0, x - half), min(w, x + half + 1))
                if math.isfinite(depth[yy, xx])
            )
            n = len(vals)
            out[y, x] = vals[n // 2] if n % 2 else 0.5 * (vals[n // 2 - 1] + vals[n // 2])
    return out


def rmse_cm(est, gt):
    total = 0.0
    n = 0
    for e, g in zip(np.ravel(est), np.ravel(gt)):
        if math.isfinite(e) and math.isfinite(g):
            total += ((e - g) * 100.0) ** 2
            n += 1
    return math.sqrt(total / n) if n else None


def fill_rate(est, gt, frac):
    vals = [g for g in np.ravel(gt) if math.isfinite(g)]
    tol = frac * sum(vals) / len(vals)
    good = sum(1 for e, g in zip(np.ravel(est), np.ravel(gt))
               if math.isfinite(g) and math.isfinite(e) and abs(e - g) <= tol)
    return good / len(vals)


def ray_march(f, direction, origin=(0.0, 0.0, 0.0), t_max=3.0, step=1e-5):
    """First sign change of the implicit function ``f`` along a ray; returns the ray parameter."""
    o = np.asarray(origin, float)
    d = np.asarray(direction, float)
    ts = np.arange(0.0, t_max, step)
    vals = f(o[None, :] + ts[:, None] * d[None, :])
    change = np.nonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))[0]
    if change.size == 0:
        return None
    i = change[0]
    # linear interpolation inside the bracketing step
    return ts[i] + step * vals[i] / (vals[i] - vals[i + 1])
