"""Sample autocorrelation features and the squared-Euclidean ACF distance."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ArgumentError, DegenerateSeriesError

log = logging.getLogger(__name__)

DEFAULT_LAGS = 50


@dataclass(frozen=True)
class AcfFeature:
    """Autocorrelations at lags ``1..L`` of one moment path."""

    series_id: str
    moment_name: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise ArgumentError("ACF feature needs at least one lag")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def lags(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class DistanceMatrix:
    ids: tuple[str, ...]
    entries: np.ndarray = field(repr=False)


def effective_lags(L: int, lengths: Sequence[int]) -> int:
    """Clamp ``L`` to ``min(T) - 2`` when some path is too short, with a warning."""
    L = int(L)
    if L < 1:
        raise ArgumentError(f"number of lags must be at least 1 (got {L})")
    shortest = min(int(n) for n in lengths)
    if shortest <= L + 1:
        clamped = shortest - 2
        if clamped < 1:
            raise ArgumentError(f"series of length {shortest} is too short for any autocorrelation")
        log.warning("lag window L=%d clamped to %d for series of length %d", L, clamped, shortest)
        return clamped
    return L


def acf_values(path: np.ndarray, L: int) -> np.ndarray:
    """Raw ACF vector; see :func:`sample_acf`."""
    y = np.asarray(path, dtype=float)
    T = y.size
    L = int(L)
    if L < 1 or L >= T:
        raise ArgumentError(f"need 1 <= L < T (got L={L}, T={T})")
    if not np.all(np.isfinite(y)):
        raise ArgumentError("path contains non-finite values")
    e = y - y.mean()
    denom = float(e @ e)
    # relative test: a path that is constant up to rounding has no defined ACF
    if denom <= (1e-13 * max(1.0, float(np.abs(y).max()))) ** 2 * T:
        raise DegenerateSeriesError("constant path has no autocorrelation")
    out = np.array([e[l:] @ e[:-l] for l in range(1, L + 1)]) / denom
    return np.clip(out, -1.0, 1.0)


def sample_acf(path, L: int, series_id: str = "", moment_name: str = "") -> AcfFeature:
    """Sample autocorrelations at lags ``1..L``.

    ``rho_l = sum_{t>l} (y_t - ybar)(y_{t-l} - ybar) / sum_t (y_t - ybar)^2``
    with a single full-sample mean. Lag 0 is not included.

    Raises
    ------
    ArgumentError
        If ``L < 1`` or ``L >= T``.
    DegenerateSeriesError
        If the path is constant.
    """
    return AcfFeature(series_id, moment_name, acf_values(path, L))


def acf_distance(a: AcfFeature, b: AcfFeature) -> float:
    """Squared Euclidean distance between two ACF vectors."""
    if a.lags != b.lags:
        raise ArgumentError(f"lag mismatch: {a.lags} vs {b.lags}")
    if a.moment_name != b.moment_name:
        raise ArgumentError(f"moment mismatch: {a.moment_name!r} vs {b.moment_name!r}")
    d = a.values - b.values
    return float(d @ d)


def feature_matrix(features: Sequence[AcfFeature]) -> np.ndarray:
    """Stack features into a ``K x L`` array after checking they are compatible."""
    if not features:
        raise ArgumentError("no features given")
    lags = {f.lags for f in features}
    names = {f.moment_name for f in features}
    if len(lags) != 1:
        raise ArgumentError(f"features have heterogeneous lags {sorted(lags)}")
    if len(names) != 1:
        raise ArgumentError(f"features mix moments {sorted(names)}")
    return np.vstack([f.values for f in features])


def pairwise_sq_distances(X: np.ndarray, Y: np.ndarray | None = None) -> np.ndarray:
    """Squared distances between the rows of ``X`` and ``Y``, computed exactly per pair."""
    Y = X if Y is None else Y
    diff = X[:, None, :] - Y[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def distance_matrix(features: Sequence[AcfFeature]) -> DistanceMatrix:
    X = feature_matrix(features)
    D = pairwise_sq_distances(X)
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    D.setflags(write=False)
    return DistanceMatrix(tuple(f.series_id for f in features), D)
