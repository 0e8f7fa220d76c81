"""Maximum-likelihood estimation of DCS(1,1) models.

The optimiser works on an unconstrained vector ``x``; :class:`ParamTransform`
maps it to the static recursion parameters. Per component:

* Gaussian variance on the identity link: ``omega = exp(x0)``,
  ``b = logistic(x2)``, ``a = b * logistic(x1)`` (both floored at ~1e-8).
  With ``gamma = 1`` this is the usual GARCH constraint set and keeps the
  variance path positive.
* location: ``omega = s0 * x0``, ``b = tanh(x2)``, ``a = s1 * (b - tanh(x1))``,
  with ``s0, s1`` in the data's units. The mean filter contracts at rate
  ``b - a / s1`` (exactly so for the Gaussian with ``gamma = 1``), so this
  keeps it invertible.
* everything else: ``omega = x0``, ``a = x1``, ``b = tanh(x2)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.special import expit, logit

from ..errors import DomainError, InitializationError, UsageError
from . import _kernels as K
from .densities import kernel_tables
from .filtering import filter_series
from .types import (
    LINK_IDENTITY,
    DcsParams,
    DcsSpec,
    Family,
    FittedDcs,
    MomentPaths,
    ReturnSeries,
)

log = logging.getLogger(__name__)

MAX_ITER = 500
GTOL = 1e-6
PENALTY = 1e10
# (a, b) pairs for the deterministic multi-start; the first is the default init.
START_PERSISTENCE = ((0.05, 0.9), (0.02, 0.97), (0.15, 0.5))
DF_INIT = 8.0
# BFGS is restarted with a fresh Hessian when it stops on a failed line search
MAX_ROUNDS = 5
# lower bound on the variance-recursion coefficients; keeps the filtered
# variance path varying well above rounding when the fit has no dynamics
GARCH_FLOOR = 1e-8


@dataclass(frozen=True)
class ParamTransform:
    spec: DcsSpec
    loc_scale: float  # data standard deviation

    @property
    def _garch_component(self) -> int | None:
        if self.spec.family is Family.GAUSSIAN and self.spec.scale_link == "identity":
            return 1
        return None

    def _factors(self, i: int) -> tuple[float, float]:
        if i == 0:
            sd = self.loc_scale
            return sd, sd ** (2.0 - 2.0 * self.spec.gamma)
        return 1.0, 1.0

    def to_arrays(self, x: np.ndarray):
        r = self.spec.n_params
        omega = np.empty(r)
        a = np.empty(r)
        b = np.empty(r)
        g = self._garch_component
        for i in range(r):
            x0, x1, x2 = x[i], x[r + i], x[2 * r + i]
            if i == g:
                with np.errstate(over="ignore"):
                    omega[i] = np.exp(x0)
                b[i] = 2.0 * GARCH_FLOOR + (1.0 - 2.0 * GARCH_FLOOR) * expit(x2)
                a[i] = GARCH_FLOOR + (b[i] - GARCH_FLOOR) * expit(x1)
            elif i == 0:
                s0, s1 = self._factors(i)
                omega[i] = s0 * x0
                b[i] = np.tanh(x2)
                a[i] = s1 * (b[i] - np.tanh(x1))
            else:
                omega[i] = x0
                a[i] = x1
                b[i] = np.tanh(x2)
        return omega, a, b

    def to_params(self, x: np.ndarray) -> DcsParams:
        return DcsParams(*self.to_arrays(x))

    def from_params(self, params: DcsParams) -> np.ndarray:
        r = self.spec.n_params
        x = np.empty(3 * r)
        g = self._garch_component
        for i in range(r):
            omega, a, b = params.omega[i], params.a_diag[i], params.b_diag[i]
            if i == g:
                if not (omega > 0.0 and 0.0 < a < b < 1.0):
                    raise InitializationError(
                        "variance-recursion init must satisfy omega > 0 and 0 < a < b < 1"
                    )
                b = max(b, 3.0 * GARCH_FLOOR)
                a = min(max(a, 1.5 * GARCH_FLOOR), b * (1.0 - 1e-12))
                x[i] = np.log(omega)
                x[r + i] = logit((a - GARCH_FLOOR) / (b - GARCH_FLOOR))
                x[2 * r + i] = logit((b - 2.0 * GARCH_FLOOR) / (1.0 - 2.0 * GARCH_FLOOR))
            elif i == 0:
                s0, s1 = self._factors(i)
                c = b - a / s1
                if not abs(c) < 1.0:
                    log.warning("location init is not invertible (b - a = %.4g); clipped", c)
                    c = np.clip(c, -1.0 + 1e-9, 1.0 - 1e-9)
                x[i], x[r + i], x[2 * r + i] = omega / s0, np.arctanh(c), np.arctanh(b)
            else:
                x[i], x[r + i], x[2 * r + i] = omega, a, np.arctanh(b)
        return x


def default_init(spec: DcsSpec, y: np.ndarray, a0: float = 0.05, b0: float = 0.9) -> DcsParams:
    """Persistence-heavy starting values that put the recursion's fixed point at sample moments."""
    mean = float(np.mean(y))
    var = float(np.var(y))
    if not var > 0.0:
        raise InitializationError("series has zero variance")
    sd = np.sqrt(var)
    gamma = spec.gamma
    r = spec.n_params
    omega = np.empty(r)
    a = np.full(r, a0)
    b = np.full(r, b0)
    omega[0] = mean * (1.0 - b0)
    a[0] = a0 * sd ** (2.0 - 2.0 * gamma)
    fam = spec.family
    if fam is Family.GAUSSIAN:
        if spec.scale_link == "identity":
            omega[1] = var * (1.0 - b0)
            a[1] = a0 * min(sd ** (4.0 - 4.0 * gamma), 1.0)
            if not a[1] < b0:
                a[1] = 0.5 * b0
        else:
            omega[1] = np.log(var) * (1.0 - b0)
    else:
        shrink = (DF_INIT - 2.0) / DF_INIT
        if fam is Family.STUDENT_T:
            omega[1] = np.log(var * shrink) * (1.0 - b0)
        else:
            omega[1] = 0.5 * np.log(var * shrink) * (1.0 - b0)
            omega[2] = 0.0
        omega[-1] = np.log(DF_INIT - 2.0) * (1.0 - b0)
        # inverse-information scaled shape/slant scores are large; start with no loading
        a[2:] = 0.0
        if fam is Family.SKEW_T:
            # location and slant scores are nearly collinear around lam = 0
            a[0] = 0.0
    return DcsParams(omega, a, b)


class _Objective:
    """Average negative log-likelihood in the optimiser's unconstrained space."""

    def __init__(self, spec: DcsSpec, transform: ParamTransform, y: np.ndarray):
        self.spec = spec
        self.transform = transform
        self.y = y
        self.links = spec.links
        self.tables = kernel_tables(spec.family)
        self.paths = np.empty((y.size, spec.n_params))

    def loglik(self, x: np.ndarray) -> float:
        omega, a, b = self.transform.to_arrays(x)
        if not (np.all(np.isfinite(omega)) and np.all(np.abs(b) < 1.0)):
            return -np.inf
        ll, status, _, _ = K.dcs_filter(
            self.spec.family.code, self.y, omega, a, b, self.links, self.spec.gamma,
            *self.tables, self.paths,
        )
        if status != K.OK or not np.isfinite(ll):
            return -np.inf
        return ll

    def __call__(self, x: np.ndarray) -> float:
        ll = self.loglik(x)
        if not np.isfinite(ll):
            return PENALTY
        return -ll / self.y.size


def _central_gradient(fun, x: np.ndarray) -> np.ndarray:
    grad = np.empty_like(x)
    for i in range(x.size):
        h = 6e-6 * max(1.0, abs(x[i]))
        up = x.copy()
        dn = x.copy()
        up[i] += h
        dn[i] -= h
        grad[i] = (fun(up) - fun(dn)) / (2.0 * h)
    return grad


def _minimize(objective: _Objective, x0: np.ndarray, max_iter: int, gtol: float) -> tuple[np.ndarray, int]:
    x, fx, nit = x0, objective(x0), 0
    for _ in range(MAX_ROUNDS):
        res = optimize.minimize(
            objective, x, method="BFGS", jac="3-point",
            options={"maxiter": max_iter - nit, "gtol": gtol},
        )
        nit += int(res.nit)
        if not res.fun < fx:
            break
        gain = fx - res.fun
        x, fx = res.x, res.fun
        if res.success or gain < 1e-12 or nit >= max_iter:
            break
    return x, nit


def fit_mle(
    spec: DcsSpec,
    series: ReturnSeries,
    init: DcsParams | None = None,
    max_iter: int = MAX_ITER,
    gtol: float = GTOL,
) -> FittedDcs:
    """Fit a DCS(1,1) model by maximum likelihood.

    Runs BFGS with central-difference gradients from each of three
    deterministic starts (or from ``init`` alone when given) and keeps the
    highest log-likelihood; ties go to the earlier start.

    Raises
    ------
    InitializationError
        If the log-likelihood is not finite at the starting values.
    """
    if not isinstance(series, ReturnSeries):
        series = ReturnSeries("series", series)
    series.require_fit_length()
    y = np.ascontiguousarray(series.values)
    transform = ParamTransform(spec, float(np.std(y)) or 1.0)
    objective = _Objective(spec, transform, y)

    if init is not None:
        init.check(spec)
        starts = [init]
    else:
        starts = [default_init(spec, y, a0, b0) for a0, b0 in START_PERSISTENCE]

    best = None
    init_loglik = None
    for k, start in enumerate(starts):
        x0 = transform.from_params(start)
        ll0 = objective.loglik(x0)
        if k == 0:
            init_loglik = ll0
        if not np.isfinite(ll0):
            if init is not None:
                raise InitializationError(f"log-likelihood is not finite at the supplied init for {series.id!r}")
            log.debug("start %d for %s has non-finite likelihood; skipped", k, series.id)
            continue
        x, nit = _minimize(objective, x0, max_iter, gtol)
        ll = objective.loglik(x)
        if best is None or ll > best[0]:
            best = (ll, x, nit)
    if best is None:
        raise InitializationError(f"log-likelihood is not finite at any starting point for {series.id!r}")
    if not np.isfinite(init_loglik):
        init_loglik = -np.inf

    ll, x, nit = best
    grad_norm = float(np.max(np.abs(_central_gradient(objective, x))))
    converged = grad_norm < gtol
    if not converged:
        log.info("fit for %s stopped with gradient norm %.2e", series.id, grad_norm)
    return FittedDcs(
        spec=spec,
        params=transform.to_params(x),
        loglik=float(ll),
        converged=bool(converged),
        iterations=nit,
        init_loglik=float(init_loglik),
        grad_norm=grad_norm,
        series_id=series.id,
        n_obs=y.size,
    )


def extract_moments(fitted: FittedDcs, series: ReturnSeries, family: Family | str | None = None) -> MomentPaths:
    """Filtered conditional-moment paths of ``series`` at the fitted parameters."""
    if family is not None and Family.parse(family) is not fitted.spec.family:
        raise UsageError(
            f"fitted model is {fitted.spec.family.value}, requested {Family.parse(family).value}"
        )
    if fitted.n_obs and (len(series) != fitted.n_obs or (fitted.series_id and series.id != fitted.series_id)):
        raise UsageError(f"fitted model for {fitted.series_id!r} does not match series {series.id!r}")
    try:
        fitted.params.check(fitted.spec)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    paths, _ = filter_series(fitted.spec, fitted.params, series)
    return paths
