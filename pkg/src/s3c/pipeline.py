"""Alternating S3C / CS3C driver.

Each outer iteration solves the weighted self-expression problem by ADMM with
the current structure matrix, clusters the result spectrally and rebuilds the
structure matrix from the new segmentation (binary labels in hard mode, the
row-normalized embedding in soft mode).  The first iteration uses an all-zero
structure matrix and is therefore plain SSC.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import admm, spectral
from .core import (as_data_matrix, encode_side_info, structure_from_hard,
                   structure_from_soft, structured_norm)
from .errors import DataError, DegenerateAffinityError, S3CError

HARD = "hard"
SOFT = "soft"
MODES = (HARD, SOFT)

FIXED = "fixed"
GROW_ALPHA = "grow_alpha"
GROW_ALPHA_SHRINK_L1 = "grow_alpha_shrink_l1"
SCHEDULES = (FIXED, GROW_ALPHA, GROW_ALPHA_SHRINK_L1)

DEFAULT_ALPHA = {HARD: 0.1, SOFT: 1.0}

STOP_THETA = "theta_converged"
STOP_C = "c_converged"
STOP_NORM = "norm_converged"
STOP_KMEANS = "kmeans_converged"
STOP_MAX = "max_iters"

__all__ = [
    "S3cConfig", "IterationRecord", "ClusterResult", "schedule_weights",
    "run_ssc", "run_s3c", "encode_side_info",
]


@dataclass(frozen=True)
class S3cConfig:
    """Everything needed to reproduce one clustering run.

    ``alpha=None`` picks 0.1 in hard mode and 1.0 in soft mode.  A stopping
    tolerance of ``None`` disables that rule; ``eps2`` (relative change of C)
    may only be enabled with the fixed schedule unless ``force_eps2`` is set.
    """

    n_clusters: int
    mode: str = HARD
    lambda0: float = 20.0
    alpha: float | None = None
    schedule: str = GROW_ALPHA_SHRINK_L1
    nu: float = 1.2
    tmax: int = 10
    eps1: float | None = 1e-3
    eps2: float | None = None
    eps3: float | None = None
    eps4: float | None = None
    force_eps2: bool = False
    seed: int = 0
    kmeans_restarts: int = spectral.KMEANS_RESTARTS
    normalize: bool = True
    noise_model: str = admm.L1
    rho: float = 1.1
    admm_eps: float = 1e-6
    admm_max_iters: int = 200
    keep_snapshots: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise DataError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.schedule not in SCHEDULES:
            raise DataError(f"schedule must be one of {SCHEDULES}, got {self.schedule!r}")
        if self.n_clusters < 2:
            raise DataError("n_clusters must be >= 2")
        if not self.lambda0 > 0:
            raise DataError("lambda0 must be positive")
        if self.alpha is not None and self.alpha < 0:
            raise DataError("alpha must be nonnegative")
        if not self.nu > 1:
            raise DataError("nu must exceed 1")
        if self.tmax < 1:
            raise DataError("tmax must be >= 1")
        for name in ("eps1", "eps2", "eps3", "eps4"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise DataError(f"{name} must be positive or None")
        if self.noise_model not in admm.NOISE_MODELS:
            raise DataError(f"unknown noise model {self.noise_model!r}")
        if self.kmeans_restarts < 1:
            raise DataError("kmeans_restarts must be >= 1")

    @property
    def alpha_value(self) -> float:
        return DEFAULT_ALPHA[self.mode] if self.alpha is None else float(self.alpha)

    @property
    def c_rule_active(self) -> bool:
        return self.eps2 is not None and (self.schedule == FIXED or self.force_eps2)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "S3cConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DataError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class IterationRecord:
    T: int
    structured_norm: float
    kmeans_cost: float
    admm_iters: int
    admm_converged: bool
    admm_residual: float
    rel_change_theta: float | None
    rel_change_C: float | None
    theta_hash: str
    C_hash: str
    labels: np.ndarray = field(repr=False)
    C: np.ndarray | None = field(default=None, repr=False)
    theta: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "structured_norm": self.structured_norm,
            "kmeans_cost": self.kmeans_cost,
            "admm_iters": self.admm_iters,
            "admm_converged": self.admm_converged,
            "admm_residual": self.admm_residual,
            "rel_change_theta": self.rel_change_theta,
            "rel_change_C": self.rel_change_C,
            "theta_hash": self.theta_hash,
            "C_hash": self.C_hash,
            "labels": [int(v) for v in self.labels],
        }


@dataclass
class ClusterResult:
    labels: np.ndarray
    C: np.ndarray
    E: np.ndarray
    history: list
    stop_reason: str
    embedding: np.ndarray | None = None


def schedule_weights(schedule: str, alpha: float, nu: float, T: int) -> tuple[float, float]:
    """Return ``(w1, alpha_eff)`` for outer iteration ``T`` (1-based)."""
    if T < 1:
        raise DataError("T must be >= 1")
    if schedule == FIXED:
        return 1.0, alpha
    if schedule == GROW_ALPHA:
        return 1.0, alpha * nu ** (T - 1)
    if schedule == GROW_ALPHA_SHRINK_L1:
        return nu ** (1 - T), alpha * nu ** (T - 1)
    raise DataError(f"unknown schedule {schedule!r}")


def relative_change(new, old) -> float:
    """``||new - old||_1 / ||old||_1`` with the entrywise l1 norm."""
    num = float(np.abs(new - old).sum())
    den = float(np.abs(old).sum())
    if den == 0.0:
        return 0.0 if num == 0.0 else float("inf")
    return num / den


def _digest(a) -> str:
    return hashlib.sha256(np.ascontiguousarray(a, dtype=np.float64).tobytes()).hexdigest()[:16]


def run_ssc(X, cfg: S3cConfig) -> ClusterResult:
    """One SSC solve (zero structure matrix) followed by spectral clustering."""
    return _run(X, cfg, side=None, tmax=1)


def run_s3c(X, cfg: S3cConfig, side=None) -> ClusterResult:
    """Alternate ADMM and spectral clustering for up to ``cfg.tmax`` iterations.

    Parameters
    ----------
    X : array_like, shape (D, N)
    cfg : S3cConfig
    side : array_like or list, optional
        Either an ``N x N`` weight matrix or a list of 0-based
        ``(i, j, "must"|"cannot")`` constraints.  Turns S3C into CS3C.

    Raises
    ------
    S3CError
        Propagated from the solver or the clustering step; the exception
        carries the iterations completed so far as ``partial_history``.
    """
    return _run(X, cfg, side=side, tmax=cfg.tmax)


def _side_matrix(side, N):
    if side is None:
        return np.ones((N, N))
    if isinstance(side, np.ndarray) and side.ndim == 2:
        psi = np.asarray(side, dtype=np.float64)
        if psi.shape != (N, N):
            raise DataError(f"side-information matrix must be {N} x {N}")
        if not np.array_equal(psi, psi.T):
            raise DataError("side-information matrix must be symmetric")
        legal = np.isclose(psi, 1.0) | np.isclose(psi, np.e) | np.isclose(psi, np.exp(-1.0))
        if not legal.all() or not np.all(np.diag(psi) == 1.0):
            raise DataError("side-information entries must be exp(-1), 1 or exp(1), with unit diagonal")
        return psi
    return encode_side_info(side, N)


def _run(X, cfg: S3cConfig, side, tmax: int) -> ClusterResult:
    X = as_data_matrix(X, normalize=cfg.normalize)
    N = X.shape[1]
    if cfg.n_clusters > N:
        raise DataError(f"n_clusters={cfg.n_clusters} exceeds the number of points {N}")
    psi = _side_matrix(side, N)
    base = admm.AdmmParams.from_data(X, cfg.lambda0, rho=cfg.rho, eps=cfg.admm_eps,
                                     max_iters=cfg.admm_max_iters,
                                     noise_model=cfg.noise_model)
    gram = admm.GramFactor(X)
    alpha = cfg.alpha_value

    theta = np.zeros((N, N))
    history: list[IterationRecord] = []
    warm = None
    prev = None
    prev_weights = None
    stop_reason = STOP_MAX
    try:
        for T in range(1, tmax + 1):
            w1, alpha_eff = schedule_weights(cfg.schedule, alpha, cfg.nu, T)
            weights = admm.threshold_weights(theta, psi, w1, alpha_eff)
            if prev_weights is not None and np.array_equal(weights, prev_weights):
                # identical convex problem: its solution is already at hand
                res, admm_iters = prev["res"], 0
            else:
                res = admm.solve(X, theta, psi, admm.with_weights(base, w1, alpha_eff),
                                 warm=warm, gram=gram)
                admm_iters = res.iterations_used
            sc = spectral.cluster(res.C, cfg.n_clusters, restarts=cfg.kmeans_restarts,
                                  seed=cfg.seed)
            if sc.degenerate:
                raise DegenerateAffinityError(
                    f"all-zero affinity at outer iteration {T}; "
                    "lambda0 is probably too small")
            new_theta = (structure_from_hard(sc.labels, cfg.n_clusters) if cfg.mode == HARD
                         else structure_from_soft(sc.embedding))
            rec = IterationRecord(
                T=T,
                structured_norm=structured_norm(res.C, new_theta),
                kmeans_cost=sc.kmeans_cost,
                admm_iters=admm_iters,
                admm_converged=res.converged,
                admm_residual=res.final_residual,
                rel_change_theta=None if prev is None else relative_change(new_theta, prev["theta"]),
                rel_change_C=None if prev is None else relative_change(res.C, prev["res"].C),
                theta_hash=_digest(new_theta),
                C_hash=_digest(res.C),
                labels=sc.labels,
                C=res.C.copy() if cfg.keep_snapshots else None,
                theta=new_theta.copy() if cfg.keep_snapshots else None,
            )
            history.append(rec)
            reason = None if prev is None else _check_stop(cfg, rec, history[-2])
            prev = {"res": res, "theta": new_theta, "sc": sc}
            prev_weights = weights
            warm = res.state
            theta = new_theta
            if reason is not None:
                stop_reason = reason
                break
    except S3CError as exc:
        exc.partial_history = history
        raise

    return ClusterResult(labels=prev["sc"].labels, C=prev["res"].C, E=prev["res"].E,
                         history=history, stop_reason=stop_reason,
                         embedding=prev["sc"].embedding)


def _check_stop(cfg: S3cConfig, rec: IterationRecord, last: IterationRecord) -> str | None:
    if cfg.eps1 is not None and rec.rel_change_theta < cfg.eps1:
        return STOP_THETA
    if cfg.c_rule_active and rec.rel_change_C < cfg.eps2:
        return STOP_C
    if cfg.eps3 is not None and last.structured_norm - rec.structured_norm < cfg.eps3:
        return STOP_NORM
    if cfg.eps4 is not None and last.kmeans_cost - rec.kmeans_cost < cfg.eps4:
        return STOP_KMEANS
    return None
