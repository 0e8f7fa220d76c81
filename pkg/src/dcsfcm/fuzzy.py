"""Autocorrelation-based fuzzy C-means (A-FCM).

Points are ACF vectors and dissimilarity is the squared Euclidean distance,
so the objective is

    J(u, c) = sum_k sum_c u[k, c]**m * ||x_k - c_c||**2

and the alternating updates are the standard closed-form FCM solutions.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ArgumentError, ClusteringError, EmptyClusterError
from .features import pairwise_sq_distances

log = logging.getLogger(__name__)

DEFAULT_M = 2.0
DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 100
DEFAULT_RESTARTS = 10
# a cluster whose membership mass falls below this is treated as empty
_MIN_MASS = 1e-300


@dataclass(frozen=True)
class MembershipMatrix:
    ids: tuple[str, ...]
    u: np.ndarray = field(repr=False)
    m: float = DEFAULT_M

    @property
    def C(self) -> int:
        return self.u.shape[1]


@dataclass(frozen=True)
class ClusterResult:
    membership: MembershipMatrix
    centroids: np.ndarray = field(repr=False)
    objective_trace: tuple[float, ...]
    labels: np.ndarray
    silhouette: float
    n_iter: int
    restart: int

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


@dataclass(frozen=True)
class RunTrace:
    """Outcome of one alternating-optimisation run."""

    u: np.ndarray
    centroids: np.ndarray
    trace: tuple[float, ...]
    centroid_min: float
    centroid_max: float
    n_iter: int


def _as_features(features) -> np.ndarray:
    X = np.asarray(features, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ArgumentError("features must be a non-empty K x L matrix")
    if not np.all(np.isfinite(X)):
        raise ArgumentError("features contain non-finite values")
    return X


def afcm_objective(features, u, centroids, m: float = DEFAULT_M) -> float:
    X = _as_features(features)
    U = np.asarray(u.u if isinstance(u, MembershipMatrix) else u, dtype=float)
    V = np.atleast_2d(np.asarray(centroids, dtype=float))
    if U.shape != (X.shape[0], V.shape[0]) or V.shape[1] != X.shape[1]:
        raise ArgumentError(f"shape mismatch: features {X.shape}, u {U.shape}, centroids {V.shape}")
    return float(np.sum(U**m * pairwise_sq_distances(X, V)))


def membership_from_distances(D: np.ndarray, m: float) -> np.ndarray:
    """Optimal memberships for fixed centroids given squared distances ``D`` (K x C).

    A point at zero distance from some centroids splits its membership
    equally among them.
    """
    K, C = D.shape
    U = np.empty((K, C))
    zero = D <= 0.0
    hit = zero.any(axis=1)
    if hit.any():
        Z = zero[hit].astype(float)
        U[hit] = Z / Z.sum(axis=1, keepdims=True)
    rest = ~hit
    if rest.any():
        # u_kc = 1 / sum_j (d_kc / d_kj)^(1/(m-1)), evaluated in log space
        logd = np.log(D[rest])
        e = -(logd - logd.min(axis=1, keepdims=True)) / (m - 1.0)
        w = np.exp(e)
        U[rest] = w / w.sum(axis=1, keepdims=True)
    return U


def update_membership(features, centroids, m: float = DEFAULT_M, ids: Sequence[str] | None = None) -> MembershipMatrix:
    if not m > 1.0:
        raise ArgumentError(f"fuzzifier m must exceed 1 (got {m})")
    X = _as_features(features)
    V = np.atleast_2d(np.asarray(centroids, dtype=float))
    if V.shape[1] != X.shape[1]:
        raise ArgumentError("centroid length differs from feature length")
    U = membership_from_distances(pairwise_sq_distances(X, V), m)
    ids = tuple(ids) if ids is not None else tuple(str(k) for k in range(X.shape[0]))
    return MembershipMatrix(ids, U, float(m))


def update_centroids(features, u, m: float = DEFAULT_M) -> np.ndarray:
    """Membership-weighted means; each centroid is a convex combination of the points.

    Raises
    ------
    EmptyClusterError
        If some cluster carries no membership mass.
    """
    X = _as_features(features)
    U = np.asarray(u.u if isinstance(u, MembershipMatrix) else u, dtype=float)
    if U.shape[0] != X.shape[0]:
        raise ArgumentError("membership rows differ from feature rows")
    W = U**m
    mass = W.sum(axis=0)
    if np.any(mass <= _MIN_MASS):
        raise EmptyClusterError(f"cluster(s) {np.flatnonzero(mass <= _MIN_MASS).tolist()} have zero membership mass")
    W = W / mass
    return W.T @ X


def crisp_labels(U: np.ndarray) -> np.ndarray:
    """Arg-max labels; ``np.argmax`` already breaks ties towards the lowest index."""
    return np.argmax(U, axis=1)


def initial_membership(X: np.ndarray, C: int, seed: int, restart: int) -> np.ndarray:
    """Dirichlet-uniform rows, each drawn from a generator keyed on the point itself.

    Keying on the feature bytes (not the row index) makes the whole fit
    equivariant under row permutations.
    """
    U = np.empty((X.shape[0], C))
    for k, row in enumerate(X):
        digest = hashlib.blake2b(np.ascontiguousarray(row).tobytes(), digest_size=8).digest()
        key = int.from_bytes(digest, "little")
        rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, int(restart), key])
        U[k] = rng.dirichlet(np.ones(C))
    return U


def run_alternating(X: np.ndarray, U0: np.ndarray, m: float, tol: float, max_iter: int) -> RunTrace:
    """Alternate centroid and membership updates from ``U0``.

    The trace holds ``J(u_k, c_k)`` after every centroid update, so it is
    non-increasing: each half-step minimises J over one block.
    """
    U = U0
    V = update_centroids(X, U, m)
    trace = [float(np.sum(U**m * pairwise_sq_distances(X, V)))]
    lo, hi = float(V.min()), float(V.max())
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        U_new = membership_from_distances(pairwise_sq_distances(X, V), m)
        V = update_centroids(X, U_new, m)
        lo, hi = min(lo, float(V.min())), max(hi, float(V.max()))
        trace.append(float(np.sum(U_new**m * pairwise_sq_distances(X, V))))
        change = float(np.max(np.abs(U_new - U)))
        U = U_new
        if change < tol:
            break
    return RunTrace(U, V, tuple(trace), lo, hi, n_iter)


def afcm_fit(
    features,
    C: int,
    m: float = DEFAULT_M,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    ids: Sequence[str] | None = None,
) -> ClusterResult:
    """Fuzzy C-means on ACF features, best of ``restarts`` seeded runs.

    Parameters
    ----------
    features : array_like, shape (K, L)
    C : int
        Number of clusters, ``2 <= C <= K``.
    m : float
        Fuzzifier, > 1.
    tol : float
        Stop when the largest membership change falls below this.
    seed : int
        Restart ``r`` draws its initial memberships from ``(seed, r)``.

    Returns
    -------
    ClusterResult
        The run with the lowest final objective; ties go to the earliest restart.

    Raises
    ------
    ArgumentError
        If ``C`` is outside ``[2, K]`` or ``m <= 1``.
    ClusteringError
        If every restart ran into an empty cluster.
    """
    X = _as_features(features)
    K = X.shape[0]
    C = int(C)
    if not 2 <= C <= K:
        raise ArgumentError(f"need 2 <= C <= K (got C={C}, K={K})")
    if not m > 1.0:
        raise ArgumentError(f"fuzzifier m must exceed 1 (got {m})")
    if restarts < 1 or max_iter < 1 or not tol > 0.0:
        raise ArgumentError("restarts and max_iter must be positive and tol > 0")
    ids = tuple(ids) if ids is not None else tuple(str(k) for k in range(K))
    if len(ids) != K:
        raise ArgumentError("ids length differs from feature rows")

    best: tuple[int, RunTrace] | None = None
    for r in range(restarts):
        try:
            run = run_alternating(X, initial_membership(X, C, seed, r), m, tol, max_iter)
        except EmptyClusterError as exc:
            log.debug("restart %d: %s", r, exc)
            continue
        if best is None or run.trace[-1] < best[1].trace[-1]:
            best = (r, run)
    if best is None:
        raise ClusteringError(f"all {restarts} restarts produced an empty cluster (C={C})")

    r, run = best
    membership = MembershipMatrix(ids, run.u, float(m))
    labels = crisp_labels(run.u)
    sil = silhouette_value(X, run.u, labels)
    return ClusterResult(membership, run.centroids, run.trace, labels, sil, run.n_iter, r)


def silhouette_value(X: np.ndarray, U: np.ndarray, labels: np.ndarray, alpha: float = 1.0) -> float:
    """Fuzzy silhouette on the squared ACF distance.

    Crisp silhouettes ``s_k = (b_k - a_k) / max(a_k, b_k)`` are averaged with
    weights ``(u_first - u_second)**alpha``. Points alone in their crisp
    cluster score 0; the result is 0 when every weight is 0.
    """
    K, C = U.shape
    D = pairwise_sq_distances(X)
    s = np.zeros(K)
    present = np.unique(labels)
    for k in range(K):
        own = labels == labels[k]
        n_own = int(own.sum())
        if n_own <= 1 or present.size < 2:
            continue
        a = D[k, own].sum() / (n_own - 1)
        b = min(D[k, labels == c].mean() for c in present if c != labels[k])
        denom = max(a, b)
        s[k] = (b - a) / denom if denom > 0.0 else 0.0
    top = np.sort(U, axis=1)
    w = (top[:, -1] - top[:, -2]) ** alpha
    total = w.sum()
    if not total > 0.0:
        return 0.0
    return float(np.clip((w @ s) / total, -1.0, 1.0))


def fuzzy_silhouette(features, result: ClusterResult, alpha: float = 1.0) -> float:
    X = _as_features(features)
    U = result.membership.u
    if U.shape[1] < 2:
        raise ArgumentError("silhouette needs at least two clusters")
    if U.shape[0] != X.shape[0]:
        raise ArgumentError("result does not match the features")
    return silhouette_value(X, U, result.labels, alpha)


@dataclass(frozen=True)
class Selection:
    best_C: int
    table: tuple[tuple[int, float], ...]  # (C, silhouette); failed C are omitted
    results: dict = field(repr=False)


def select_c(
    features,
    c_min: int = 2,
    c_max: int = 5,
    m: float = DEFAULT_M,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    ids: Sequence[str] | None = None,
) -> Selection:
    """Fit every ``C`` in ``[c_min, c_max]`` and keep the highest fuzzy silhouette (smallest C on ties)."""
    X = _as_features(features)
    K = X.shape[0]
    if not 2 <= c_min <= c_max:
        raise ArgumentError(f"need 2 <= c_min <= c_max (got {c_min}, {c_max})")
    if c_max > K - 1 and not c_min == c_max:
        raise ArgumentError(f"c_max must not exceed K-1={K - 1} (got {c_max})")
    table = []
    results = {}
    for C in range(c_min, c_max + 1):
        try:
            res = afcm_fit(X, C, m, tol, max_iter, restarts, seed, ids)
        except (ClusteringError, ArgumentError) as exc:
            log.warning("C=%d skipped: %s", C, exc)
            continue
        results[C] = res
        table.append((C, res.silhouette))
    if not table:
        raise ClusteringError(f"no cluster count in [{c_min}, {c_max}] could be fitted")
    best_C = max(table, key=lambda item: (item[1], -item[0]))[0]
    return Selection(best_C, tuple(table), results)


def consensus_groups(labels_per_level, ids: Sequence[str] | None = None) -> list[tuple[str, ...]]:
    """Classes of series that share a cluster at every level, in order of first appearance."""
    levels = [np.asarray(lv) for lv in labels_per_level]
    if not levels:
        raise ArgumentError("no label levels given")
    K = levels[0].size
    if any(lv.ndim != 1 or lv.size != K for lv in levels):
        raise ArgumentError("all levels must label the same number of series")
    ids = tuple(ids) if ids is not None else tuple(str(k) for k in range(K))
    if len(ids) != K:
        raise ArgumentError("ids length differs from label length")
    groups: dict[tuple, list[str]] = {}
    for k in range(K):
        groups.setdefault(tuple(lv[k].item() for lv in levels), []).append(ids[k])
    return [tuple(g) for g in groups.values()]
