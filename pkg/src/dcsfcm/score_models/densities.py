"""Observation densities, scores and score scaling for the three DCS families.

All functions here take the *natural* parameter vector ``f`` (see
``Family.moment_names`` for the order). For the Student-t family ``phi`` is
the squared scale; for the skew-t family it is the scale itself.
"""

from __future__ import annotations

import functools

import numpy as np

from ..errors import DomainError, ScalingError
from . import _kernels as K
from .types import Family

SKEWT_DELTA_GRID = np.linspace(-0.995, 0.995, 81)
SKEWT_INV_V_GRID = np.linspace(0.001, 0.495, 48)
SKEWT_QUAD_NODES = 256


def check_params(family: Family, f) -> np.ndarray:
    family = Family.parse(family)
    f = np.asarray(f, dtype=float).reshape(-1)
    if f.size != family.n_params:
        raise DomainError(f"{family.value} parameter vector needs {family.n_params} entries, got {f.size}")
    if not np.all(np.isfinite(f)):
        raise DomainError(f"non-finite parameter vector {f}")
    if f[1] <= 0.0:
        raise DomainError(f"{family.moment_names[1]} must be positive (got {f[1]})")
    if family is not Family.GAUSSIAN and f[-1] <= 2.0:
        raise DomainError(f"degrees of freedom must exceed 2 (got {f[-1]})")
    return f


@functools.lru_cache(maxsize=1)
def skewt_information_table() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Standardised skew-t information on a (slant, 1/v) grid.

    Built once per process by Gauss-Legendre quadrature and read-only afterwards.
    """
    nodes, weights = np.polynomial.legendre.leggauss(SKEWT_QUAD_NODES)
    table = K.build_skewt_table(SKEWT_DELTA_GRID, SKEWT_INV_V_GRID, nodes, weights)
    table.setflags(write=False)
    return SKEWT_DELTA_GRID, SKEWT_INV_V_GRID, table


_EMPTY_GRID = np.zeros(2)
_EMPTY_TABLE = np.zeros((2, 2, 4, 4))


def kernel_tables(family: Family):
    if Family.parse(family) is Family.SKEW_T:
        return skewt_information_table()
    return _EMPTY_GRID, _EMPTY_GRID, _EMPTY_TABLE


def log_density(family, y: float, f) -> float:
    """Log of the conditional density of ``y`` given the parameter vector ``f``.

    Examples
    --------
    >>> round(log_density("gaussian", 0.0, [0.0, 1.0]), 6)
    -0.918939
    """
    family = Family.parse(family)
    f = check_params(family, f)
    grad = np.empty(family.n_params)
    return float(K.logpdf_grad(family.code, float(y), f, grad))


def score(family, y: float, f) -> np.ndarray:
    """Gradient of :func:`log_density` with respect to ``f``."""
    family = Family.parse(family)
    f = check_params(family, f)
    grad = np.empty(family.n_params)
    K.logpdf_grad(family.code, float(y), f, grad)
    return grad


def log_density_and_score(family, y: float, f) -> tuple[float, np.ndarray]:
    family = Family.parse(family)
    f = check_params(family, f)
    grad = np.empty(family.n_params)
    lp = K.logpdf_grad(family.code, float(y), f, grad)
    return float(lp), grad


def information_matrix(family, f) -> np.ndarray:
    """Expected outer product of the score, ``E[grad grad']``, at ``f``.

    Closed form for the Gaussian and Student-t families; interpolated from a
    quadrature table for the skew-t family.
    """
    family = Family.parse(family)
    f = check_params(family, f)
    out = np.empty((family.n_params, family.n_params))
    dgrid, vgrid, table = kernel_tables(family)
    K.information(family.code, f, dgrid, vgrid, table, out)
    return out


def scaling_matrix(family, f, gamma: float, max_condition: float = K.MAX_CONDITION) -> np.ndarray:
    """Score scaling ``S = I**(-gamma)`` for ``gamma`` in {0, 1/2, 1}."""
    family = Family.parse(family)
    gamma = float(gamma)
    if gamma not in (0.0, 0.5, 1.0):
        raise DomainError(f"gamma must be one of 0, 0.5, 1 (got {gamma})")
    f = check_params(family, f)
    if gamma == 0.0:
        return np.eye(family.n_params)
    info = information_matrix(family, f)
    vals, vecs = np.linalg.eigh(info)
    if vals[0] <= 0.0:
        raise ScalingError("information matrix is not positive definite", float("inf"))
    cond = vals[-1] / vals[0]
    if cond > max_condition:
        raise ScalingError("information matrix is ill-conditioned", cond)
    return (vecs * vals**-gamma) @ vecs.T
