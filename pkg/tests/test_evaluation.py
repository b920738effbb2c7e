import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from fmme.entropy import EntropySeries
from fmme.evaluation import (DegenerateFeatureError, FeatureConditioning, McrWeights, best_scale, correlation, mcr,
                             monotonicity, pair_counts, robustness)


def test_monotonicity_examples():
    assert monotonicity([1, 2, 3, 4]) == 1.0
    assert monotonicity([3, 1, 2]) == pytest.approx(2 / 3)
    assert monotonicity([5, 5, 5]) == 1.0
    with pytest.raises(ValueError):
        monotonicity([1.0])


def test_pair_counts_small():
    assert pair_counts([3, 1, 2]) == (1, 2, 0)
    assert pair_counts([1, 1, 2]) == (2, 0, 1)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=2, max_size=80))
def test_monotonicity_matches_naive_count(values):
    assert monotonicity(values) == pytest.approx(oracles.monotonicity(values), abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=2, max_size=60))
def test_monotonicity_flip_and_transform_invariance(values):
    a = np.array(values, dtype=float)
    assert monotonicity(a) == monotonicity(-a)
    # strictly increasing and exact in float64 for these integers
    assert monotonicity(a) == monotonicity(a ** 3 + a)


def test_correlation_examples():
    t = np.arange(1, 51, dtype=float)
    assert correlation(2 * t + 1) == pytest.approx(1.0)
    assert correlation(-t) == pytest.approx(1.0)
    alt = [1.0, 0.0] * 50
    assert correlation(alt) == pytest.approx(oracles.pearson_abs(alt), abs=1e-14)
    assert correlation(np.ones(10)) == 0.0


def test_robustness_examples():
    assert robustness(np.full(7, 3.0)) == 1.0
    assert robustness([1, 1, 2]) == pytest.approx((2 + math.exp(-0.5)) / 3)
    assert robustness([4.0]) == 1.0
    rng = np.random.default_rng(0)
    x = rng.uniform(0.5, 2.0, 51).tolist()
    assert robustness(x) == pytest.approx(oracles.robustness(x), abs=1e-14)


def test_robustness_zero_value_flagged():
    rep = mcr([0.0, 1.0, 2.0, 3.0])
    assert "zero-value" in rep.flags
    assert 0 < rep.rob <= 1


def test_mcr_weights():
    t = np.arange(1, 101, dtype=float)
    rep = mcr(t)
    assert rep.mcr == pytest.approx(0.4 + 0.4 + 0.2 * robustness(t))
    assert mcr(np.full(5, 2.0)).degenerate
    rep = mcr(t, McrWeights(0.5, 0.3, 0.2))
    assert rep.mcr == pytest.approx(0.5 * rep.mon + 0.3 * rep.cor + 0.2 * rep.rob)
    with pytest.raises(ValueError):
        McrWeights(0.5, 0.5, 0.5)
    with pytest.raises(ValueError):
        McrWeights(-0.1, 0.6, 0.5)


def test_mcr_weight_shift_with_equal_mon_cor():
    t = np.arange(1, 30, dtype=float)
    a = mcr(t, McrWeights(0.4, 0.4, 0.2))
    b = mcr(t, McrWeights(0.6, 0.2, 0.2))
    assert a.mon == a.cor
    assert a.mcr == pytest.approx(b.mcr, abs=1e-15)


def _series(values, scale):
    return EntropySeries("b", "horizontal", 1, "ATE", scale, np.asarray(values, dtype=float))


def test_best_scale_argmax_and_ties():
    rng = np.random.default_rng(1)
    trend = np.linspace(1, 2, 200)
    noisy = trend + rng.normal(0, 0.5, 200)
    choice = best_scale([_series(noisy, 1), _series(trend, 2)])
    assert choice.scale == 2
    tie = best_scale([_series(trend, 7), _series(trend, 3)])
    assert tie.scale == 3
    assert best_scale([_series(noisy, 4)]).scale == 4


def test_best_scale_all_degenerate():
    with pytest.raises(DegenerateFeatureError):
        best_scale([_series(np.ones(50), 1), _series(np.full(50, 2.0), 2)])


def test_conditioning_short_series_skips_denoise():
    out = FeatureConditioning()(np.array([1.0, 2.0, 3.0]))
    assert out.shape == (3,)
