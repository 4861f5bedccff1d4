"""Shared data model and elementary operators.

Matrices are plain ``numpy.ndarray`` objects; the functions in this module
validate them and return fresh (read-only where it matters) arrays.  Data
matrices follow the column convention: ``X`` is ``D x N`` with one point per
column.
"""

from __future__ import annotations

import numpy as np

from .errors import DataError, InconsistentSideInfoError

NORM_TOL = 1e-9

MUST = "must"
CANNOT = "cannot"


def as_data_matrix(X, normalize: bool = True) -> np.ndarray:
    """Validate a ``D x N`` data matrix and optionally scale columns to unit norm.

    Parameters
    ----------
    X : array_like, shape (D, N)
        Data points as columns.
    normalize : bool, default True
        Rescale every column to unit l2 norm.  Zero columns are rejected in
        that case since they have no direction.

    Returns
    -------
    numpy.ndarray
        A float64 copy, marked read-only.
    """
    X = np.array(X, dtype=np.float64, copy=True)
    if X.ndim != 2:
        raise DataError(f"data matrix must be 2-D, got shape {X.shape}")
    D, N = X.shape
    if D < 1 or N < 2:
        raise DataError(f"data matrix needs D >= 1 and N >= 2, got {D} x {N}")
    if not np.all(np.isfinite(X)):
        bad = np.argwhere(~np.isfinite(X))[0]
        raise DataError(f"non-finite entry at row {bad[0] + 1}, column {bad[1] + 1}")
    if normalize:
        norms = np.linalg.norm(X, axis=0)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise DataError(f"cannot normalize zero column(s) {(zero + 1).tolist()}")
        X /= norms
    X.setflags(write=False)
    return X


def is_column_normalized(X: np.ndarray, tol: float = NORM_TOL) -> bool:
    return bool(np.all(np.abs(np.linalg.norm(X, axis=0) - 1.0) <= tol))


def shrink(x, tau):
    """Soft-thresholding ``sign(x) * max(|x| - tau, 0)``, entrywise.

    ``tau`` may be a scalar or an array broadcastable against ``x``.  This is
    the exact minimizer of ``tau*|c| + (c - x)**2 / 2``.
    """
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - tau, 0.0)


def affinity_from_coefficients(C) -> np.ndarray:
    """Symmetric affinity ``(|C| + |C^T|) / 2``."""
    absC = np.abs(np.asarray(C, dtype=np.float64))
    return 0.5 * (absC + absC.T)


def validate_labels(labels, n: int | None = None) -> tuple[np.ndarray, int]:
    """Check a hard segmentation given as 0-based integer labels.

    Every cluster ``0..n-1`` must be nonempty (``rank(Q) = n``).  Returns the
    labels as an int array together with ``n``.
    """
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size == 0:
        raise DataError("labels must be a nonempty 1-D array")
    if not np.issubdtype(labels.dtype, np.integer):
        if not np.all(np.equal(np.mod(labels, 1), 0)):
            raise DataError("labels must be integers")
        labels = labels.astype(np.int64)
    if n is None:
        n = int(labels.max()) + 1
    if labels.min() < 0 or labels.max() >= n:
        raise DataError(f"labels must lie in 0..{n - 1}")
    counts = np.bincount(labels, minlength=n)
    if np.any(counts == 0):
        raise DataError(f"empty cluster(s) {np.flatnonzero(counts == 0).tolist()}")
    return labels.astype(np.int64), n


def indicator_matrix(labels, n: int | None = None) -> np.ndarray:
    """Binary ``N x n`` membership matrix Q with ``Q 1 = 1``."""
    labels, n = validate_labels(labels, n)
    Q = np.zeros((labels.size, n))
    Q[np.arange(labels.size), labels] = 1.0
    return Q


def structure_from_hard(labels, n: int | None = None) -> np.ndarray:
    """Binary structure matrix: 0 where labels agree, 1 where they differ."""
    labels, _ = validate_labels(labels, n)
    return (labels[:, None] != labels[None, :]).astype(np.float64)


def normalize_rows(Q) -> np.ndarray:
    """Scale rows to unit l2 norm; all-zero rows are left at zero."""
    Q = np.array(Q, dtype=np.float64, copy=True)
    norms = np.linalg.norm(Q, axis=1)
    nz = norms > 0
    Q[nz] /= norms[nz, None]
    return Q


def pairwise_half_sqdist(Q) -> np.ndarray:
    """Return ``Theta[i, j] = ||q_i - q_j||^2 / 2`` for the rows of ``Q``."""
    Q = np.asarray(Q, dtype=np.float64)
    sq = np.einsum("ij,ij->i", Q, Q)
    theta = 0.5 * (sq[:, None] + sq[None, :]) - Q @ Q.T
    theta = 0.5 * (theta + theta.T)
    np.fill_diagonal(theta, 0.0)
    return np.maximum(theta, 0.0)


def structure_from_soft(embedding) -> np.ndarray:
    """Soft structure matrix from a spectral embedding.

    Rows are normalized to unit length first, so entries fall in ``[0, 2]``.
    """
    emb = np.asarray(embedding, dtype=np.float64)
    if emb.ndim != 2 or not np.all(np.isfinite(emb)):
        raise DataError("embedding must be a finite 2-D array")
    return np.minimum(pairwise_half_sqdist(normalize_rows(emb)), 2.0)


def structured_norm(C, theta) -> float:
    """Subspace structured norm ``sum_ij |C_ij| * Theta_ij``."""
    C = np.asarray(C, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64)
    if C.shape != theta.shape:
        raise DataError(f"shape mismatch: C {C.shape} vs Theta {theta.shape}")
    return float(np.sum(np.abs(C) * theta))


def encode_side_info(constraints, N: int) -> np.ndarray:
    """Build the side-information weight matrix from pairwise constraints.

    Parameters
    ----------
    constraints : iterable of (i, j, kind)
        0-based point indices and ``"must"`` or ``"cannot"``.
    N : int
        Number of points.

    Returns
    -------
    numpy.ndarray, shape (N, N)
        ``exp(-1)`` on must-link pairs, ``exp(+1)`` on cannot-link pairs and
        1 everywhere else (including the diagonal).
    """
    psi = np.ones((N, N))
    seen: dict[tuple[int, int], str] = {}
    for i, j, kind in constraints:
        i, j = int(i), int(j)
        if kind not in (MUST, CANNOT):
            raise DataError(f"unknown constraint kind {kind!r}")
        if not (0 <= i < N and 0 <= j < N):
            raise DataError(f"constraint index out of range: ({i}, {j}) with N={N}")
        if i == j:
            raise DataError(f"self-constraint on point {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            if seen[key] != kind:
                raise InconsistentSideInfoError(
                    f"inconsistent side information for pair {key}: "
                    f"{seen[key]} and {kind}")
            continue
        seen[key] = kind
        psi[i, j] = psi[j, i] = np.exp(-1.0) if kind == MUST else np.exp(1.0)
    return psi
