from __future__ import annotations

import numpy as np

from ..errors import DomainError, FilteringError, ScalingError
from . import _kernels as K
from .densities import kernel_tables
from .types import DcsParams, DcsSpec, MomentPaths, ReturnSeries


def run_kernel(spec: DcsSpec, params: DcsParams, y: np.ndarray):
    """Raw kernel call: ``(loglik, status, index, condition, paths)``."""
    paths = np.empty((y.size, spec.n_params))
    dgrid, vgrid, table = kernel_tables(spec.family)
    ll, status, index, cond = K.dcs_filter(
        spec.family.code,
        y,
        params.omega,
        params.a_diag,
        params.b_diag,
        spec.links,
        spec.gamma,
        dgrid,
        vgrid,
        table,
        paths,
    )
    return ll, status, index, cond, paths


def raise_for_status(status: int, index: int, cond: float) -> None:
    if status == K.OK:
        return
    if status == K.ERR_SCALING:
        raise ScalingError(f"information matrix cannot be inverted at t={index}", cond)
    if status == K.ERR_DOMAIN:
        raise FilteringError("filtered variance left the positive half-line", index)
    if status == K.ERR_DENSITY:
        raise FilteringError("log-density is not finite", index)
    raise FilteringError("numeric overflow in the score recursion", index)


def filter_series(spec: DcsSpec, params: DcsParams, series: ReturnSeries) -> tuple[MomentPaths, float]:
    """Filter the time-varying parameters of ``series`` and sum the log-likelihood.

    The path at ``t=1`` is the fixed point of the working-space recursion;
    each later value uses the scaled score of the previous observation.

    Returns
    -------
    paths : MomentPaths
        One natural-scale path of length T per time-varying parameter.
    loglik : float
        Sum of the conditional log-densities along the path.
    """
    if not isinstance(series, ReturnSeries):
        series = ReturnSeries("series", series)
    params.check(spec)
    ll, status, index, cond, paths = run_kernel(spec, params, series.values)
    raise_for_status(status, index, cond)
    moments = {name: paths[:, i].copy() for i, name in enumerate(spec.moment_names)}
    return MomentPaths(series.id, moments), float(ll)


def loglik(spec: DcsSpec, params: DcsParams, series: ReturnSeries) -> float:
    """Log-likelihood, or ``-inf`` when the recursion fails."""
    y = series.values if isinstance(series, ReturnSeries) else np.asarray(series, dtype=float)
    try:
        params.check(spec)
    except DomainError:
        return -np.inf
    ll, status, _, _, _ = run_kernel(spec, params, y)
    return float(ll) if status == K.OK else -np.inf
