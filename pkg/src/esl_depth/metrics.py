"""Depth-map evaluation against ground truth.

Only pixels valid (finite) in both maps take part, which restricts every
metric to the overlap of estimate and ground truth.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError


class NoOverlap(DomainError):
    """Estimate and ground truth share no valid pixel."""


class NoGroundTruth(DomainError):
    """The ground-truth map has no valid pixel."""


def _pair(est, gt):
    est = np.asarray(est, dtype=float)
    gt = np.asarray(gt, dtype=float)
    if est.shape != gt.shape:
        raise DomainError(f"shape mismatch: {est.shape} vs {gt.shape}")
    return est, gt


def signed_difference(est, gt) -> np.ndarray:
    """``est - gt`` in centimeters over the overlap, NaN elsewhere."""
    est, gt = _pair(est, gt)
    both = np.isfinite(est) & np.isfinite(gt)
    return np.where(both, (np.where(both, est, 0.0) - np.where(both, gt, 0.0)) * 100.0, np.nan)


def rmse(est, gt) -> float:
    """Root mean square depth error in centimeters."""
    diff = signed_difference(est, gt)
    ok = np.isfinite(diff)
    if not ok.any():
        raise NoOverlap("no pixel is valid in both maps")
    return float(np.sqrt(np.mean(diff[ok] ** 2)))


def fill_rate(est, gt, threshold_fraction: float = 0.01) -> float:
    """Fraction of ground-truth pixels estimated within ``threshold_fraction * mean depth``."""
    if not threshold_fraction > 0:
        raise DomainError("threshold_fraction must be positive")
    est, gt = _pair(est, gt)
    has_gt = np.isfinite(gt)
    if not has_gt.any():
        raise NoGroundTruth("ground truth has no valid pixel")
    tol = threshold_fraction * float(np.mean(gt[has_gt]))
    good = has_gt & np.isfinite(est)
    good[good] = np.abs(est[good] - gt[good]) <= tol
    return float(np.count_nonzero(good)) / float(np.count_nonzero(has_gt))
