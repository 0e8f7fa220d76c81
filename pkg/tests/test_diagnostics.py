"""Jarque-Bera and small-sample adjusted Jarque-Bera statistics."""

from __future__ import annotations

import numpy as np
import pytest
from scipy import stats

from dcsfcm.diagnostics import jarque_bera
from dcsfcm.errors import ArgumentError, DegenerateSeriesError
from dcsfcm.score_models import ReturnSeries

# adjusted/plain ratios observed for 30 daily equity return series of length 5521
REFERENCE_RATIO_BAND = (1.00272, 1.00338)


def jb(y):
    return jarque_bera(ReturnSeries("x", np.asarray(y, dtype=float)))


def test_null_centre_sample():
    rep = jb(np.tile([-1.0, 0.0, 0.0, 0.0, 0.0, 1.0], 2))
    assert rep.skewness == pytest.approx(0.0, abs=1e-15)
    assert rep.kurtosis == pytest.approx(3.0, abs=1e-12)
    assert rep.jb_stat == pytest.approx(0.0, abs=1e-12)
    assert rep.jb_pvalue == pytest.approx(1.0)


def test_matches_scipy():
    y = np.random.default_rng(0).standard_t(6, 700)
    rep = jb(y)
    ref = stats.jarque_bera(y)
    assert rep.jb_stat == pytest.approx(ref.statistic, rel=1e-12)
    assert rep.jb_pvalue == pytest.approx(ref.pvalue, rel=1e-9, abs=1e-300)


def test_report_invariants():
    rep = jb(np.random.default_rng(1).exponential(size=300))
    assert rep.n == 300
    assert rep.jb_stat >= 0 and rep.adj_jb_stat >= 0
    assert 0 <= rep.jb_pvalue <= 1 and 0 <= rep.adj_jb_pvalue <= 1
    assert set(rep.to_dict()) >= {"id", "n", "jb_stat", "jb_pvalue", "adj_jb_stat", "adj_jb_pvalue"}


def test_affine_invariance():
    y = np.random.default_rng(2).standard_t(4, 1000)
    base = jb(y)
    for a, b in [(3.0, 1.0), (-0.01, 5.0), (1e4, -2e4)]:
        moved = jb(a * y + b)
        assert moved.jb_stat == pytest.approx(base.jb_stat, rel=1e-9)
        assert moved.adj_jb_stat == pytest.approx(base.adj_jb_stat, rel=1e-9)


def test_adjustment_vanishes_for_large_samples():
    rep = jb(np.random.default_rng(3).standard_t(5, 100_000))
    assert abs(rep.adj_jb_stat / rep.jb_stat - 1) < 0.01


def test_adjustment_size_at_equity_sample_length():
    lo, hi = REFERENCE_RATIO_BAND
    for seed in range(20):
        rep = jb(np.random.default_rng(seed).standard_t(3, 5521))
        assert lo <= rep.adj_jb_stat / rep.jb_stat <= hi


def test_power_against_heavy_tails():
    rejections = sum(jb(np.random.default_rng(s).standard_t(5, 5000)).jb_pvalue < 0.01 for s in range(100))
    assert rejections >= 95


def test_size_under_normality():
    rate = np.mean([jb(np.random.default_rng(s).normal(size=5000)).jb_pvalue < 0.01 for s in range(1000)])
    # binomial(1000, 0.01) has s.d. 0.0031
    assert rate <= 0.01 + 3 * 0.0031


def test_errors():
    with pytest.raises(DegenerateSeriesError):
        jb(np.full(20, 3.0))
    with pytest.raises(ArgumentError):
        jb(np.arange(7.0))
