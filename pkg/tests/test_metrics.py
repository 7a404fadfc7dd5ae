import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from esl_depth.errors import DomainError
from esl_depth.metrics import NoGroundTruth, NoOverlap, fill_rate, rmse, signed_difference

import oracles


def test_examples():
    gt = np.array([[0.5, 0.5], [0.5, np.nan]])
    est = np.array([[0.5, 0.51], [np.nan, 0.7]])
    # differences 0 cm and 1 cm on the overlap
    assert rmse(est, gt) == pytest.approx(math.sqrt(0.5))
    # tolerance is 1 % of 0.5 m = 5 mm; 0.51 misses it
    assert fill_rate(est, gt) == pytest.approx(1 / 3)
    assert fill_rate(est, gt, 0.03) == pytest.approx(2 / 3)
    assert rmse(gt, gt) == 0.0 and fill_rate(gt, gt) == 1.0


def maps(seed, h=9, w=11):
    rng = np.random.default_rng(seed)
    gt = rng.uniform(0.3, 1.2, (h, w))
    est = gt + rng.normal(0, 0.01, (h, w))
    gt[rng.random((h, w)) < 0.2] = np.nan
    est[rng.random((h, w)) < 0.2] = np.inf
    est[rng.random((h, w)) < 0.1] = np.nan
    return est, gt


@settings(max_examples=40)
@given(st.integers(0, 10_000), st.floats(0.001, 0.2))
def test_against_oracle(seed, frac):
    est, gt = maps(seed)
    ref = oracles.rmse_cm(est, gt)
    if ref is None:
        with pytest.raises(NoOverlap):
            rmse(est, gt)
    else:
        assert rmse(est, gt) == pytest.approx(ref, rel=1e-12)
    assert fill_rate(est, gt, frac) == pytest.approx(oracles.fill_rate(est, gt, frac), rel=1e-12)


@settings(max_examples=30)
@given(st.integers(0, 10_000))
def test_rmse_is_root_mean_square_of_signed_difference(seed):
    est, gt = maps(seed)
    sd = signed_difference(est, gt)
    assert rmse(est, gt) ** 2 == pytest.approx(np.nanmean(sd ** 2), rel=1e-12)
    np.testing.assert_array_equal(signed_difference(gt, est), -sd)
    assert rmse(gt, est) == rmse(est, gt)


@settings(max_examples=30)
@given(st.integers(0, 10_000), st.floats(0.001, 0.1), st.floats(0.0, 0.1))
def test_fill_rate_monotone_in_threshold(seed, a, extra):
    est, gt = maps(seed)
    assert fill_rate(est, gt, a) <= fill_rate(est, gt, a + extra)
    assert 0.0 <= fill_rate(est, gt, a) <= 1.0


def test_invalid_estimate_pixels_are_ignored_by_rmse():
    gt = np.full((4, 4), 0.5)
    est = gt.copy()
    est[0, 0] = np.nan
    est[1, 1] = np.inf
    assert rmse(est, gt) == 0.0
    assert fill_rate(est, gt) == pytest.approx(14 / 16)


def test_errors():
    gt = np.full((3, 3), 0.5)
    with pytest.raises(NoOverlap):
        rmse(np.full((3, 3), np.nan), gt)
    with pytest.raises(NoGroundTruth):
        fill_rate(gt, np.full((3, 3), np.nan))
    with pytest.raises(DomainError):
        rmse(gt, np.zeros((2, 3)))
    with pytest.raises(DomainError):
        fill_rate(gt, gt, 0.0)
