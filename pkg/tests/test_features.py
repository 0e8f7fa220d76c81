"""Sample autocorrelations and the squared-Euclidean ACF distance."""

from __future__ import annotations

import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dcsfcm.errors import ArgumentError, DegenerateSeriesError
from dcsfcm.features import (
    AcfFeature,
    acf_distance,
    distance_matrix,
    effective_lags,
    sample_acf,
)


def loop_acf(y, L):
    n = len(y)
    m = sum(y) / n
    den = sum((v - m) ** 2 for v in y)
    return [sum((y[t] - m) * (y[t - l] - m) for t in range(l, n)) / den for l in range(1, L + 1)]


def loop_distance(a, b):
    total = 0.0
    for x, y in zip(a, b):
        total += (x - y) ** 2
    return total


def feat(values, sid="s", moment="sigma2"):
    return AcfFeature(sid, moment, np.asarray(values, dtype=float))


def test_alternating_series():
    f = sample_acf([1.0, -1.0, 1.0, -1.0], 1)
    assert f.values[0] == pytest.approx(-0.75, abs=1e-15)
    assert f.lags == 1


def test_lag_zero_not_emitted():
    f = sample_acf(np.random.default_rng(0).normal(size=50), 5)
    assert f.lags == 5
    assert not np.isclose(f.values[0], 1.0)


def test_matches_loop_estimator():
    y = np.random.default_rng(1).normal(size=120).cumsum()
    np.testing.assert_allclose(sample_acf(y, 10).values, loop_acf(list(y), 10), rtol=1e-12)


def test_white_noise_band():
    y = np.random.default_rng(2).normal(size=100_000)
    assert np.abs(sample_acf(y, 10).values).max() < 0.02


def test_constant_path_is_degenerate():
    with pytest.raises(DegenerateSeriesError):
        sample_acf(np.full(30, 0.7), 5)


@pytest.mark.parametrize("L", [10, 11, 0])
def test_bad_lag_window(L):
    with pytest.raises(ArgumentError):
        sample_acf(np.arange(10.0), L)


def test_lag_clamping_warns(caplog):
    with caplog.at_level(logging.WARNING):
        assert effective_lags(50, [50, 200]) == 48
    assert "clamped" in caplog.text
    assert effective_lags(10, [50, 200]) == 10


@settings(max_examples=200, deadline=None)
@given(
    arrays(np.float64, st.integers(5, 80), elements=st.floats(-1e6, 1e6, allow_nan=False)),
    st.integers(1, 3),
)
def test_values_bounded(y, L):
    if np.ptp(y) < 1e-6 * max(1.0, np.abs(y).max()):
        return
    values = sample_acf(y, L).values
    assert np.all(np.abs(values) <= 1.0)


def test_distance_examples():
    x = feat([0.3, -0.2, 0.1])
    assert acf_distance(x, x) == 0.0
    assert acf_distance(feat([1.0, 0.0]), feat([0.0, 1.0])) == 2.0


def test_distance_matches_loop_oracle():
    rng = np.random.default_rng(3)
    for _ in range(200):
        a, b = rng.uniform(-1, 1, (2, 25))
        assert acf_distance(feat(a), feat(b)) == pytest.approx(loop_distance(a, b), rel=1e-15, abs=0)


def test_distance_metric_properties():
    rng = np.random.default_rng(4)
    for _ in range(1000):
        a, b, c = (feat(v) for v in rng.uniform(-1, 1, (3, 10)))
        ab, ba = acf_distance(a, b), acf_distance(b, a)
        assert ab == ba and ab >= 0
        assert math.sqrt(ab) <= math.sqrt(acf_distance(a, c)) + math.sqrt(acf_distance(c, b)) + 1e-12


def test_distance_argument_errors():
    with pytest.raises(ArgumentError):
        acf_distance(feat([0.1, 0.2]), feat([0.1, 0.2, 0.3]))
    with pytest.raises(ArgumentError):
        acf_distance(feat([0.1], moment="mu"), feat([0.1], moment="sigma2"))


def test_distance_matrix_single():
    D = distance_matrix([feat([0.2, 0.1], "a")])
    np.testing.assert_array_equal(D.entries, np.zeros((1, 1)))
    assert D.ids == ("a",)


def test_distance_matrix_duplicates_and_oracle():
    rng = np.random.default_rng(5)
    base = [feat(v, f"s{i}") for i, v in enumerate(rng.uniform(-1, 1, (5, 8)))]
    D = distance_matrix(base).entries
    for i in range(5):
        for j in range(5):
            assert D[i, j] == pytest.approx(loop_distance(base[i].values, base[j].values), rel=1e-15, abs=0)
    assert np.all(D == D.T) and np.all(np.diag(D) == 0) and np.all(D >= 0)
    dup = distance_matrix(base + base).entries
    np.testing.assert_array_equal(dup[:5, 5:][np.eye(5, dtype=bool)], 0.0)


def test_distance_matrix_permutation_equivariance():
    rng = np.random.default_rng(6)
    fs = [feat(v, f"s{i}") for i, v in enumerate(rng.uniform(-1, 1, (7, 12)))]
    perm = rng.permutation(7)
    D = distance_matrix(fs).entries
    Dp = distance_matrix([fs[i] for i in perm]).entries
    np.testing.assert_array_equal(Dp, D[np.ix_(perm, perm)])


def test_distance_matrix_heterogeneous_lags():
    with pytest.raises(ArgumentError):
        distance_matrix([feat([0.1, 0.2], "a"), feat([0.1], "b")])
