"""Normalized-cut spectral clustering of a coefficient matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .core import affinity_from_coefficients
from .errors import DataError, EigendecompositionError

DEGREE_FLOOR = 1e-12
KMEANS_RESTARTS = 20
KMEANS_MAX_ITER = 300
KMEANS_TOL = 1e-9
_MAX_RESEEDS = 10


@dataclass(frozen=True)
class LaplacianPair:
    L_sym: np.ndarray
    degrees: np.ndarray


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray
    cost: float
    restarts_run: int
    centroids: np.ndarray


@dataclass(frozen=True)
class SpectralResult:
    labels: np.ndarray
    embedding: np.ndarray
    kmeans_cost: float
    degenerate: bool


def normalized_laplacian(A, degree_floor: float = DEGREE_FLOOR) -> LaplacianPair:
    """``I - D^{-1/2} A D^{-1/2}`` with degrees floored at ``degree_floor``."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DataError(f"affinity must be square, got {A.shape}")
    d = np.maximum(A.sum(axis=0), degree_floor)
    s = 1.0 / np.sqrt(d)
    L = -(s[:, None] * A * s[None, :])
    L[np.diag_indices_from(L)] += 1.0
    L = 0.5 * (L + L.T)
    return LaplacianPair(L_sym=L, degrees=d)


def _fix_signs(V):
    # largest-magnitude entry of each column made positive; argmax takes the lowest index on ties
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def spectral_embedding(lap: LaplacianPair, n: int, return_values: bool = False):
    """Eigenvectors of ``L_sym`` for its ``n`` smallest eigenvalues (as columns)."""
    L = lap.L_sym
    N = L.shape[0]
    if not 1 <= n <= N:
        raise DataError(f"need 1 <= n <= N, got n={n}, N={N}")
    try:
        w, V = linalg.eigh(L, subset_by_index=[0, n - 1])
    except (linalg.LinAlgError, ValueError) as exc:
        raise EigendecompositionError(f"eigendecomposition failure: {exc}") from exc
    V = _fix_signs(V)
    return (V, w) if return_values else V


def _sqdist(points, centers):
    d = (np.einsum("ij,ij->i", points, points)[:, None]
         - 2.0 * points @ centers.T
         + np.einsum("ij,ij->i", centers, centers)[None, :])
    return np.maximum(d, 0.0)


def _kmeanspp(points, k, rng):
    N = points.shape[0]
    chosen = [int(rng.integers(N))]
    closest = _sqdist(points, points[chosen]).ravel()
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(N, p=closest / total))
        else:
            free = np.setdiff1d(np.arange(N), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        closest = np.minimum(closest, _sqdist(points, points[[nxt]]).ravel())
    return points[chosen].copy()


def _lloyd(points, centers, max_iter, tol, history=None):
    """Lloyd iterations; returns (labels, centers, cost) or None on an empty cluster."""
    k = centers.shape[0]
    for _ in range(max_iter):
        dist = _sqdist(points, centers)
        labels = np.argmin(dist, axis=1)
        if history is not None:
            history.append(float(dist[np.arange(len(labels)), labels].sum()))
        counts = np.bincount(labels, minlength=k)
        if np.any(counts == 0):
            return None
        new = np.zeros_like(centers)
        np.add.at(new, labels, points)
        new /= counts[:, None]
        shift = np.max(np.abs(new - centers))
        centers = new
        if shift <= tol:
            break
    dist = _sqdist(points, centers)
    labels = np.argmin(dist, axis=1)
    if np.any(np.bincount(labels, minlength=k) == 0):
        return None
    cost = float(np.sum((points - centers[labels]) ** 2))
    if history is not None:
        history.append(cost)
    return labels, centers, cost


def _repair_empty(points, labels, centers):
    # move the point farthest from its centroid into each empty cluster
    k = centers.shape[0]
    labels = labels.copy()
    for c in np.flatnonzero(np.bincount(labels, minlength=k) == 0):
        dist = np.sum((points - centers[labels]) ** 2, axis=1)
        counts = np.bincount(labels, minlength=k)
        dist[counts[labels] <= 1] = -1.0
        far = int(np.argmax(dist))
        labels[far] = c
        centers[c] = points[far]
    return labels


def _single_restart(points, k, rng, max_iter, tol, history=None):
    for _ in range(_MAX_RESEEDS):
        if history is not None:
            history.clear()
        out = _lloyd(points, _kmeanspp(points, k, rng), max_iter, tol, history)
        if out is not None:
            return out
    # pathological inputs (fewer distinct points than k): patch the last seeding
    centers = _kmeanspp(points, k, rng)
    labels = _repair_empty(points, np.argmin(_sqdist(points, centers), axis=1), centers)
    for c in range(k):
        centers[c] = points[labels == c].mean(axis=0)
    cost = float(np.sum((points - centers[labels]) ** 2))
    return labels, centers, cost


def kmeans(points, k: int, restarts: int = KMEANS_RESTARTS, seed: int = 0,
           max_iter: int = KMEANS_MAX_ITER, tol: float = KMEANS_TOL,
           histories: list | None = None) -> KMeansResult:
    """k-means++ seeded Lloyd with ``restarts`` independent RNG streams.

    Stream ``r`` is child ``r`` of ``numpy.random.SeedSequence(seed)``, so the
    result does not depend on the order restarts are executed in.  The
    lowest-cost restart wins; ties go to the lowest restart index.  If
    ``histories`` is a list, the per-iteration costs of every restart are
    appended to it.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    N = points.shape[0]
    if not 1 <= k <= N:
        raise DataError(f"need 1 <= k <= N, got k={k}, N={N}")
    if restarts < 1:
        raise DataError("restarts must be >= 1")
    streams = np.random.SeedSequence(seed).spawn(restarts)
    best = None
    for ss in streams:
        hist = [] if histories is not None else None
        labels, centers, cost = _single_restart(points, k, np.random.default_rng(ss),
                                                max_iter, tol, hist)
        if histories is not None:
            histories.append(hist)
        if best is None or cost < best[2]:
            best = (labels, centers, cost)
    return KMeansResult(labels=best[0].astype(np.int64), cost=best[2],
                        restarts_run=restarts, centroids=best[1])


def cluster(C, n: int, restarts: int = KMEANS_RESTARTS, seed: int = 0) -> SpectralResult:
    """Affinity -> normalized Laplacian -> bottom-``n`` embedding -> k-means.

    k-means runs on the raw embedding rows.  ``degenerate`` is set when the
    affinity has no edges at all.
    """
    if n < 2:
        raise DataError(f"need at least 2 clusters, got {n}")
    A = affinity_from_coefficients(C)
    np.fill_diagonal(A, 0.0)
    degenerate = not np.any(A > 0)
    emb = spectral_embedding(normalized_laplacian(A), n)
    km = kmeans(emb, n, restarts=restarts, seed=seed)
    return SpectralResult(labels=km.labels, embedding=emb, kmeans_cost=km.cost,
                          degenerate=degenerate)
