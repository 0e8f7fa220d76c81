"""Jarque-Bera normality test and Urzua's small-sample adjustment."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

from .errors import ArgumentError, DegenerateSeriesError
from .score_models import ReturnSeries

MIN_LENGTH = 8


@dataclass(frozen=True)
class NormalityReport:
    id: str
    n: int
    skewness: float
    kurtosis: float
    jb_stat: float
    jb_pvalue: float
    adj_jb_stat: float
    adj_jb_pvalue: float

    def to_dict(self) -> dict:
        return asdict(self)


def _urzua_moments(n: int) -> tuple[float, float, float]:
    # exact finite-sample mean/variance of the sample skewness and kurtosis under normality
    c1 = 6.0 * (n - 2) / ((n + 1) * (n + 3))
    c2 = 3.0 * (n - 1) / (n + 1)
    c3 = 24.0 * n * (n - 2) * (n - 3) / ((n + 1) ** 2 * (n + 3) * (n + 5))
    return c1, c2, c3


def jarque_bera(series) -> NormalityReport:
    """JB and adjusted JB statistics with chi-square(2) p-values.

    ``JB = n/6 * (S**2 + (K - 3)**2 / 4)`` with 1/n sample moments and raw
    kurtosis ``K``. The adjusted statistic standardises ``S`` and ``K`` by
    their exact small-sample moments instead of the asymptotic ones.

    Raises
    ------
    ArgumentError
        If fewer than 8 observations are given.
    DegenerateSeriesError
        If the series is constant.
    """
    if not isinstance(series, ReturnSeries):
        series = ReturnSeries("series", series)
    y = series.values
    n = y.size
    if n < MIN_LENGTH:
        raise ArgumentError(f"Jarque-Bera needs at least {MIN_LENGTH} observations (got {n})")
    e = y - y.mean()
    m2 = float(np.mean(e**2))
    if not m2 > (1e-13 * max(1.0, float(np.abs(y).max()))) ** 2:
        raise DegenerateSeriesError(f"series {series.id!r} is constant")
    S = float(np.mean(e**3)) / m2**1.5
    K = float(np.mean(e**4)) / m2**2
    jb = n / 6.0 * (S * S + 0.25 * (K - 3.0) ** 2)
    c1, c2, c3 = _urzua_moments(n)
    adj = S * S / c1 + (K - c2) ** 2 / c3
    return NormalityReport(
        id=series.id,
        n=int(n),
        skewness=S,
        kurtosis=K,
        jb_stat=float(jb),
        jb_pvalue=float(stats.chi2.sf(jb, 2)),
        adj_jb_stat=float(adj),
        adj_jb_pvalue=float(stats.chi2.sf(adj, 2)),
    )
