"""Clustering error, subspace-preserving rate and per-class graph connectivity."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.optimize import linear_sum_assignment
from scipy.sparse.csgraph import connected_components

from .core import affinity_from_coefficients
from .errors import DataError
from .spectral import DEGREE_FLOOR, normalized_laplacian

BRUTE_FORCE_MAX_N = 8


@dataclass
class EvalReport:
    err: float
    spr: float | None = None
    conn: float | None = None
    per_class_conn: list = field(default_factory=list)
    zero_columns: int = 0

    def to_dict(self) -> dict:
        return {"err": self.err, "spr": self.spr, "conn": self.conn,
                "per_class_conn": list(self.per_class_conn),
                "zero_columns": self.zero_columns}


def _confusion(truth, pred):
    truth = np.asarray(truth).ravel()
    pred = np.asarray(pred).ravel()
    if truth.shape != pred.shape:
        raise DataError(f"label length mismatch: {truth.size} vs {pred.size}")
    if truth.size == 0:
        raise DataError("empty label vectors")
    _, t = np.unique(truth, return_inverse=True)
    _, p = np.unique(pred, return_inverse=True)
    k = max(t.max(), p.max()) + 1
    M = np.zeros((k, k), dtype=np.int64)
    np.add.at(M, (t, p), 1)
    return M


def clustering_error(truth, pred) -> float:
    """Fraction of points misassigned under the best one-to-one relabeling.

    The relabeling is a maximum-weight matching on the confusion matrix.
    Labels may be any hashable integers; they are compared only through the
    partition they induce.
    """
    M = _confusion(truth, pred)
    rows, cols = linear_sum_assignment(M, maximize=True)
    return 1.0 - M[rows, cols].sum() / M.sum()


def clustering_error_bruteforce(truth, pred) -> float:
    """Same quantity as :func:`clustering_error` by enumerating all permutations."""
    M = _confusion(truth, pred)
    k = M.shape[0]
    if k > BRUTE_FORCE_MAX_N:
        raise DataError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got {k}")
    idx = np.arange(k)
    best = max(M[idx, list(perm)].sum() for perm in itertools.permutations(range(k)))
    return 1.0 - best / M.sum()


def subspace_preserving_rate(C, truth, return_zero_count: bool = False):
    """Mean over columns of the share of ``|c_j|`` mass on same-class rows.

    All-zero columns count as fully preserving.
    """
    C = np.abs(np.asarray(C, dtype=np.float64))
    truth = np.asarray(truth).ravel()
    if C.shape != (truth.size, truth.size):
        raise DataError(f"C must be {truth.size} x {truth.size}, got {C.shape}")
    same = truth[:, None] == truth[None, :]
    total = C.sum(axis=0)
    inside = np.where(same, C, 0.0).sum(axis=0)
    zero = total == 0
    frac = np.ones_like(total)
    frac[~zero] = inside[~zero] / total[~zero]
    spr = float(frac.mean())
    return (spr, int(zero.sum())) if return_zero_count else spr


def algebraic_connectivity(A) -> float:
    """Second-smallest eigenvalue of ``I - D^{-1/2} A D^{-1/2}``.

    Exactly 0 when the graph is disconnected, and 0 for a single node.
    """
    A = np.asarray(A, dtype=np.float64)
    m = A.shape[0]
    if m < 2:
        return 0.0
    ncomp, _ = connected_components(A > 0, directed=False)
    if ncomp > 1:
        return 0.0
    w = linalg.eigvalsh(normalized_laplacian(A, DEGREE_FLOOR).L_sym, subset_by_index=[0, 1])
    return float(max(w[1], 0.0))


def connectivity(A, truth) -> tuple[float, list[float]]:
    """Mean algebraic connectivity of the per-class induced subgraphs."""
    A = np.asarray(A, dtype=np.float64)
    truth = np.asarray(truth).ravel()
    if A.shape != (truth.size, truth.size):
        raise DataError(f"affinity must be {truth.size} x {truth.size}, got {A.shape}")
    per_class = []
    for c in np.unique(truth):
        idx = np.flatnonzero(truth == c)
        per_class.append(algebraic_connectivity(A[np.ix_(idx, idx)]))
    return float(np.mean(per_class)), per_class


def evaluate(truth, pred, C=None) -> EvalReport:
    report = EvalReport(err=clustering_error(truth, pred))
    if C is not None:
        report.spr, report.zero_columns = subspace_preserving_rate(C, truth, True)
        report.conn, report.per_class_conn = connectivity(affinity_from_coefficients(C), truth)
    return report
