"""Compiled scalar densities, scores and the DCS(1,1) filtering recursion.

Natural parameters per family (``phi`` means different things on purpose):

* Gaussian ``(mu, sigma2)``
* Student-t ``(mu, phi, v)`` with ``phi`` the squared scale, so ``Var = phi*v/(v-2)``
* skew-t ``(mu, phi, lam, v)`` in the Azzalini-Capitanio form with ``phi`` the scale

The recursion runs on working values ``x`` with ``f = link(x)``; scores and
information are carried to the working space through the diagonal Jacobian.
"""

import math

import llvmlite.binding as llvm
import numpy as np
from numba import njit, types
from numba.extending import get_cython_function_address


def _bind(symbol: str, cython_name: str, signature):
    # Registered as a named external symbol so compiled kernels stay cacheable.
    llvm.add_symbol(symbol, get_cython_function_address("scipy.special.cython_special", cython_name))
    return types.ExternalFunction(symbol, signature)


stdtr = _bind("dcsfcm_stdtr", "stdtr", types.float64(types.float64, types.float64))
gammaln = _bind("dcsfcm_gammaln", "gammaln", types.float64(types.float64))
digamma = _bind("dcsfcm_digamma", "__pyx_fuse_1psi", types.float64(types.float64))

LOG2PI = math.log(2.0 * math.pi)
LOGPI = math.log(math.pi)
LOG2 = math.log(2.0)

OK = 0
ERR_OVERFLOW = 1
ERR_DOMAIN = 2
ERR_SCALING = 3
ERR_DENSITY = 4

MAX_WORKING = 300.0  # bound on log-link working values, keeps exp() and its square finite
MIN_VARIANCE = 1e-150  # smaller identity-link variances underflow once squared
MAX_IDENTITY = 1e150  # identity-link values beyond this overflow once squared
MAX_CONDITION = 1e14


@njit(cache=True)
def trigamma(x):
    acc = 0.0
    while x < 10.0:
        acc += 1.0 / (x * x)
        x += 1.0
    x2 = 1.0 / (x * x)
    series = (
        1.0 / x
        + 0.5 * x2
        + (x2 / x)
        * (
            1.0 / 6.0
            - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 * (1.0 / 30.0 - x2 * (5.0 / 66.0 - x2 * 691.0 / 2730.0))))
        )
    )
    return acc + series


@njit(cache=True)
def log_t_std(z, v):
    """Log density of a standard Student-t with ``v`` degrees of freedom."""
    return (
        gammaln(0.5 * (v + 1.0))
        - gammaln(0.5 * v)
        - 0.5 * (LOGPI + math.log(v))
        - 0.5 * (v + 1.0) * math.log1p(z * z / v)
    )


@njit(cache=True)
def _dlogt_dv(z2, v):
    q = v + z2
    return 0.5 * (
        digamma(0.5 * (v + 1.0))
        - digamma(0.5 * v)
        - 1.0 / v
        - math.log1p(z2 / v)
        + (v + 1.0) * z2 / (v * q)
    )


@njit(cache=True)
def gaussian_logpdf_grad(y, mu, s2, grad):
    e = y - mu
    grad[0] = e / s2
    grad[1] = 0.5 * (e * e / s2 - 1.0) / s2
    return -0.5 * (LOG2PI + math.log(s2) + e * e / s2)


@njit(cache=True)
def t_logpdf_grad(y, mu, phi, v, grad):
    e = y - mu
    e2 = e * e
    denom = v * phi + e2
    grad[0] = (v + 1.0) * e / denom
    grad[1] = 0.5 / phi * ((v + 1.0) * e2 / denom - 1.0)
    grad[2] = _dlogt_dv(e2 / phi, v)
    return log_t_std(e / math.sqrt(phi), v) - 0.5 * math.log(phi)


@njit(cache=True)
def _log_student_cdf(nu, w):
    p = stdtr(nu, w)
    if p > 0.0:
        return math.log(p)
    return -np.inf


@njit(cache=True)
def skewt_logpdf_grad(y, mu, phi, lam, v, grad):
    z = (y - mu) / phi
    z2 = z * z
    q = v + z2
    tau = math.sqrt((v + 1.0) / q)
    w = lam * z * tau
    nu = v + 1.0
    log_cdf = _log_student_cdf(nu, w)
    # pdf/cdf ratio of the Student-t(v+1) at w
    r = math.exp(log_t_std(w, nu) - log_cdf)
    common = (v + 1.0) * z / q - r * lam * tau * v / q
    grad[0] = common / phi
    grad[1] = (z * common - 1.0) / phi
    grad[2] = r * z * tau
    dtau_dv = (z2 - 1.0) / (2.0 * tau * q * q)
    h = 1e-4 * nu
    dcdf_dnu = (stdtr(nu + h, w) - stdtr(nu - h, w)) / (2.0 * h)
    grad[3] = _dlogt_dv(z2, v) + r * lam * z * dtau_dv + dcdf_dnu * math.exp(-log_cdf)
    return LOG2 - math.log(phi) + log_t_std(z, v) + log_cdf


@njit(cache=True)
def logpdf_grad(family, y, f, grad):
    if family == 0:
        return gaussian_logpdf_grad(y, f[0], f[1], grad)
    if family == 1:
        return t_logpdf_grad(y, f[0], f[1], f[2], grad)
    return skewt_logpdf_grad(y, f[0], f[1], f[2], f[3], grad)


@njit(cache=True)
def t_information(phi, v, out):
    out[:, :] = 0.0
    out[0, 0] = (v + 1.0) / ((v + 3.0) * phi)
    out[1, 1] = v / (2.0 * (v + 3.0) * phi * phi)
    out[1, 2] = -1.0 / ((v + 3.0) * (v + 1.0) * phi)
    out[2, 1] = out[1, 2]
    out[2, 2] = 0.25 * (trigamma(0.5 * v) - trigamma(0.5 * (v + 1.0))) - (v + 5.0) / (
        2.0 * v * (v + 3.0) * (v + 1.0)
    )


# ---------------------------------------------------------------------------
# skew-t information: tabulated for the standardised variate (mu=0, phi=1)
# over slant delta = lam/sqrt(1+lam^2) and inverse degrees of freedom 1/v.


@njit(cache=True)
def skewt_std_information(lam, v, nodes, weights, out):
    """Expected outer product of the score at ``mu=0, phi=1`` by quadrature.

    Uses the substitution ``z = sqrt(v) tan(theta)`` under which the
    Student-t(v) measure becomes ``c_v sqrt(v) cos(theta)^(v-1) dtheta``; the
    skewing factor ``2 T_{v+1}(w)`` is evaluated at each node.
    """
    out[:, :] = 0.0
    grad = np.empty(4)
    c = math.exp(gammaln(0.5 * (v + 1.0)) - gammaln(0.5 * v) - 0.5 * (LOGPI + math.log(v)))
    total = 0.0
    for i in range(nodes.size):
        theta = 0.5 * math.pi * nodes[i]
        z = math.sqrt(v) * math.tan(theta)
        logp = skewt_logpdf_grad(z, 0.0, 1.0, lam, v, grad)
        base = c * math.sqrt(v) * math.cos(theta) ** (v - 1.0)
        # quadrature weight * symmetric-t mass * skewing factor 2 T_{v+1}(w)
        wt = 0.5 * math.pi * weights[i] * base * math.exp(logp - log_t_std(z, v))
        total += wt
        for j in range(4):
            for k in range(4):
                out[j, k] += wt * grad[j] * grad[k]
    for j in range(4):
        for k in range(4):
            out[j, k] /= total


@njit(cache=True)
def build_skewt_table(delta_grid, inv_v_grid, nodes, weights):
    table = np.empty((delta_grid.size, inv_v_grid.size, 4, 4))
    buf = np.empty((4, 4))
    for i in range(delta_grid.size):
        d = delta_grid[i]
        lam = d / math.sqrt(1.0 - d * d)
        for j in range(inv_v_grid.size):
            skewt_std_information(lam, 1.0 / inv_v_grid[j], nodes, weights, buf)
            table[i, j] = buf
    return table


@njit(cache=True)
def _grid_locate(grid, value):
    n = grid.size
    if value <= grid[0]:
        return 0, 0.0
    if value >= grid[n - 1]:
        return n - 2, 1.0
    step = (grid[n - 1] - grid[0]) / (n - 1)
    i = int((value - grid[0]) / step)
    if i > n - 2:
        i = n - 2
    return i, (value - grid[i]) / step


@njit(cache=True)
def _catmull_rom(t, w):
    # cubic convolution weights; C1 across cells so the likelihood has no gradient kinks
    t2 = t * t
    t3 = t2 * t
    w[0] = 0.5 * (-t3 + 2.0 * t2 - t)
    w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0)
    w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t)
    w[3] = 0.5 * (t3 - t2)


@njit(cache=True)
def skewt_information(phi, lam, v, delta_grid, inv_v_grid, table, out):
    d = lam / math.sqrt(1.0 + lam * lam)
    i, a = _grid_locate(delta_grid, d)
    j, b = _grid_locate(inv_v_grid, 1.0 / v)
    wa = np.empty(4)
    wb = np.empty(4)
    _catmull_rom(a, wa)
    _catmull_rom(b, wb)
    ni = delta_grid.size
    nj = inv_v_grid.size
    for r in range(4):
        for c in range(4):
            out[r, c] = 0.0
    for p in range(4):
        ii = min(max(i - 1 + p, 0), ni - 1)
        for q in range(4):
            jj = min(max(j - 1 + q, 0), nj - 1)
            w = wa[p] * wb[q]
            for r in range(4):
                for c in range(4):
                    out[r, c] += w * table[ii, jj, r, c]
    for r in range(2):
        for c in range(4):
            out[r, c] /= phi
            out[c, r] /= phi


@njit(cache=True)
def information(family, f, delta_grid, inv_v_grid, table, out):
    if family == 0:
        out[:, :] = 0.0
        out[0, 0] = 1.0 / f[1]
        out[1, 1] = 0.5 / (f[1] * f[1])
    elif family == 1:
        t_information(f[1], f[2], out)
    else:
        skewt_information(f[1], f[2], f[3], delta_grid, inv_v_grid, table, out)


@njit(cache=True)
def apply_scaling(info, g, gamma, diagonal, out):
    """Write ``info**(-gamma) @ g`` into ``out``; return the condition estimate."""
    n = g.size
    if gamma == 0.0:
        for i in range(n):
            out[i] = g[i]
        return 1.0
    if diagonal:
        lo = np.inf
        hi = 0.0
        for i in range(n):
            d = info[i, i]
            lo = min(lo, d)
            hi = max(hi, d)
            if d <= 0.0:
                return np.inf
            out[i] = g[i] / d**gamma
        return hi / lo
    for i in range(n):
        for k in range(n):
            if not math.isfinite(info[i, k]):
                return np.inf
    vals, vecs = np.linalg.eigh(info)
    if vals[0] <= 0.0:
        return np.inf
    for i in range(n):
        out[i] = 0.0
    for k in range(n):
        proj = 0.0
        for i in range(n):
            proj += vecs[i, k] * g[i]
        proj /= vals[k] ** gamma
        for i in range(n):
            out[i] += vecs[i, k] * proj
    return vals[n - 1] / vals[0]


@njit(cache=True)
def _working_ok(x, links):
    for i in range(x.size):
        bound = MAX_IDENTITY if links[i] == 0 else MAX_WORKING
        if not (abs(x[i]) <= bound):
            return False
    return True


@njit(cache=True)
def to_natural(x, links, f, jac):
    for i in range(x.size):
        code = links[i]
        if code == 0:
            f[i] = x[i]
            jac[i] = 1.0
        elif code == 1:
            f[i] = math.exp(x[i])
            jac[i] = f[i]
        else:
            e = math.exp(x[i])
            f[i] = 2.0 + e
            jac[i] = e


@njit(cache=True)
def dcs_filter(family, y, omega, a, b, links, gamma, delta_grid, inv_v_grid, table, paths):
    """Run the DCS(1,1) recursion over ``y``.

    Fills ``paths`` (T x R) with the natural parameter path and returns
    ``(loglik, status, index, condition)``. The recursion starts at the
    working-space fixed point ``omega / (1 - b)``.
    """
    n_obs = y.size
    r = omega.size
    x = np.empty(r)
    for i in range(r):
        if not (abs(b[i]) < 1.0):
            return 0.0, ERR_DOMAIN, 0, 0.0
        x[i] = omega[i] / (1.0 - b[i])
    f = np.empty(r)
    jac = np.empty(r)
    grad = np.empty(r)
    gw = np.empty(r)
    s = np.empty(r)
    info = np.empty((r, r))
    diagonal = family == 0
    loglik = 0.0
    for t in range(n_obs):
        if not _working_ok(x, links):
            return loglik, ERR_OVERFLOW, t, 0.0
        to_natural(x, links, f, jac)
        if family == 0 and not (f[1] > MIN_VARIANCE):
            return loglik, ERR_DOMAIN, t, 0.0
        for i in range(r):
            paths[t, i] = f[i]
        lp = logpdf_grad(family, y[t], f, grad)
        if not math.isfinite(lp):
            return loglik, ERR_DENSITY, t, 0.0
        loglik += lp
        for i in range(r):
            gw[i] = grad[i] * jac[i]
        if gamma != 0.0:
            information(family, f, delta_grid, inv_v_grid, table, info)
            for i in range(r):
                for k in range(r):
                    info[i, k] *= jac[i] * jac[k]
        cond = apply_scaling(info, gw, gamma, diagonal, s)
        if not (cond < MAX_CONDITION):
            return loglik, ERR_SCALING, t, cond
        for i in range(r):
            x[i] = omega[i] + a[i] * s[i] + b[i] * x[i]
    return loglik, OK, n_obs, 0.0


@njit(cache=True)
def skewt_innovation_score(eps, lam, v):
    """Score of a unit-scale skew-t innovation with respect to its log scale."""
    out = np.empty(eps.size)
    grad = np.empty(4)
    for i in range(eps.size):
        skewt_logpdf_grad(eps[i], 0.0, 1.0, lam, v, grad)
        out[i] = grad[1]
    return out


@njit(cache=True)
def dcs_update(family, yt, x, omega, a, b, links, gamma, delta_grid, inv_v_grid, table):
    """Advance the working state ``x`` in place by one observation; return a status code."""
    r = x.size
    f = np.empty(r)
    jac = np.empty(r)
    grad = np.empty(r)
    gw = np.empty(r)
    s = np.empty(r)
    info = np.empty((r, r))
    to_natural(x, links, f, jac)
    if family == 0 and not (f[1] > MIN_VARIANCE):
        return ERR_DOMAIN
    lp = logpdf_grad(family, yt, f, grad)
    if not math.isfinite(lp):
        return ERR_DENSITY
    for i in range(r):
        gw[i] = grad[i] * jac[i]
    if gamma != 0.0:
        information(family, f, delta_grid, inv_v_grid, table, info)
        for i in range(r):
            for k in range(r):
                info[i, k] *= jac[i] * jac[k]
    cond = apply_scaling(info, gw, gamma, family == 0, s)
    if not (cond < MAX_CONDITION):
        return ERR_SCALING
    for i in range(r):
        x[i] = omega[i] + a[i] * s[i] + b[i] * x[i]
    if not _working_ok(x, links):
        return ERR_OVERFLOW
    return OK
