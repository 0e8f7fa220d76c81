"""Simulation of DCS processes and of the Beta-Skew-t-EGARCH data-generating process."""

from __future__ import annotations

import numpy as np
from scipy.signal import lfilter

from ..errors import DomainError
from . import _kernels as K
from .densities import kernel_tables
from .filtering import raise_for_status
from .types import DcsParams, DcsSpec, EgarchDgpParams, Family, ReturnSeries


def skewt_rvs(rng: np.random.Generator, slant: float, df: float, size: int) -> np.ndarray:
    """Standard (location 0, scale 1) Azzalini-Capitanio skew-t draws.

    Skew-normal numerator over an independent ``sqrt(chi2_df / df)``.
    """
    delta = slant / np.sqrt(1.0 + slant * slant)
    u0 = np.abs(rng.standard_normal(size))
    u1 = rng.standard_normal(size)
    w = rng.chisquare(df, size)
    return (delta * u0 + np.sqrt(1.0 - delta * delta) * u1) / np.sqrt(w / df)


def skewt_moments(slant: float, df: float) -> tuple[float, float]:
    """Mean and variance of the standard skew-t (``df > 2``)."""
    from scipy.special import gammaln

    delta = slant / np.sqrt(1.0 + slant * slant)
    mean = delta * np.sqrt(df / np.pi) * np.exp(gammaln(0.5 * (df - 1.0)) - gammaln(0.5 * df))
    return float(mean), float(df / (df - 2.0) - mean * mean)


def egarch_log_scale_score(eps: np.ndarray, slant: float, df: float) -> np.ndarray:
    """Score of ``log p(y | eta)`` with respect to the log scale ``eta``.

    For ``y = exp(eta) * eps`` it depends on the standardised innovation only.
    """
    return K.skewt_innovation_score(np.ascontiguousarray(eps, dtype=float), float(slant), float(df))


def simulate_egarch(dgp: EgarchDgpParams, T: int, seed: int, series_id: str = "sim") -> ReturnSeries:
    """Draw ``T`` returns from the Beta-Skew-t-EGARCH process.

    ``eta_t = omega + phi*eta_{t-1} + alpha*u_{t-1} + beta*sgn(-y_{t-1})*(u_{t-1}+1)``
    and ``y_t = exp(eta_t) * eps_t``, started at ``eta_1 = omega / (1 - phi)``.
    """
    if not isinstance(dgp, EgarchDgpParams):
        raise DomainError("dgp must be EgarchDgpParams")
    T = int(T)
    if T < 1:
        raise DomainError(f"T must be at least 1 (got {T})")
    rng = np.random.default_rng(seed)
    eps = skewt_rvs(rng, dgp.skew, dgp.df, T)
    u = egarch_log_scale_score(eps, dgp.skew, dgp.df)
    # sgn(-y) == sgn(-eps) because exp(eta) > 0
    drive = dgp.alpha * u + dgp.beta * np.sign(-eps) * (u + 1.0)
    deviation = np.zeros(T)
    if T > 1:
        deviation[1:] = lfilter([1.0], [1.0, -dgp.phi], drive[:-1])
    eta = dgp.eta_mean + deviation
    return ReturnSeries(series_id, np.exp(eta) * eps)


def _draw(rng: np.random.Generator, family: Family, f: np.ndarray) -> float:
    if family is Family.GAUSSIAN:
        return f[0] + np.sqrt(f[1]) * rng.standard_normal()
    if family is Family.STUDENT_T:
        return f[0] + np.sqrt(f[1]) * rng.standard_t(f[2])
    return f[0] + f[1] * skewt_rvs(rng, f[2], f[3], 1)[0]


def simulate_dcs(spec: DcsSpec, params: DcsParams, T: int, seed: int, series_id: str = "dcs") -> ReturnSeries:
    """Generate a series from a DCS(1,1) model, drawing each ``y_t`` given the current ``f_t``."""
    params.check(spec)
    rng = np.random.default_rng(seed)
    dgrid, vgrid, table = kernel_tables(spec.family)
    links = spec.links
    x = params.omega / (1.0 - params.b_diag)
    f = np.empty(spec.n_params)
    jac = np.empty(spec.n_params)
    y = np.empty(int(T))
    for t in range(y.size):
        K.to_natural(x, links, f, jac)
        if spec.family is Family.GAUSSIAN and f[1] <= 0.0:
            raise_for_status(K.ERR_DOMAIN, t, 0.0)
        y[t] = _draw(rng, spec.family, f)
        status = K.dcs_update(
            spec.family.code, y[t], x, params.omega, params.a_diag, params.b_diag,
            links, spec.gamma, dgrid, vgrid, table,
        )
        raise_for_status(status, t, 0.0)
    return ReturnSeries(series_id, y)
