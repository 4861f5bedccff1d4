"""ADMM for the weighted-l1 self-expressive representation problem.

Solves::

    min_{C,E}  sum_ij W_ij |C_ij| + lam * ||E||
    s.t.       X = X A + E,   A = C - diag(C)

with per-entry weights ``W = w1 * Psi + alpha_eff * Theta``.  Plain SSC is
the special case ``W = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg

from .core import shrink
from .errors import DataError, DegenerateScaleError, DivergenceError, NumericalError

L1 = "l1"
FROBENIUS = "frobenius"
NOISE_MODELS = (L1, FROBENIUS)


@dataclass(frozen=True)
class AdmmParams:
    lam: float
    mu0: float
    alpha_eff: float = 0.0
    w1: float = 1.0
    rho: float = 1.1
    eps: float = 1e-6
    max_iters: int = 200
    noise_model: str = L1

    def __post_init__(self):
        if not self.lam > 0:
            raise DataError(f"lambda must be positive, got {self.lam}")
        if not self.mu0 > 0:
            raise DataError(f"mu0 must be positive, got {self.mu0}")
        if not self.rho > 1:
            raise DataError(f"rho must exceed 1, got {self.rho}")
        if not self.eps > 0:
            raise DataError(f"eps must be positive, got {self.eps}")
        if self.max_iters < 1:
            raise DataError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.alpha_eff < 0 or not self.w1 > 0:
            raise DataError("need alpha_eff >= 0 and w1 > 0")
        if self.noise_model not in NOISE_MODELS:
            raise DataError(f"unknown noise model {self.noise_model!r}")

    @classmethod
    def from_data(cls, X, lambda0: float, **kwargs) -> "AdmmParams":
        """Set ``lam = lambda0 / scale`` and ``mu0 = 1 / scale``."""
        scale = compute_scale(X)
        return cls(lam=lambda0 / scale, mu0=1.0 / scale, **kwargs)


@dataclass
class AdmmState:
    C: np.ndarray
    A: np.ndarray
    E: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    mu: float
    iter: int = 0


@dataclass
class AdmmResult:
    C: np.ndarray
    E: np.ndarray
    iterations_used: int
    final_residual: float
    converged: bool
    state: AdmmState = field(repr=False)


def compute_scale(X) -> float:
    """``min_j max_{i != j} x_i^T x_j``, the data-dependent scale for lambda and mu0."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape[1] < 2:
        raise DataError("need at least two points")
    G = X.T @ X
    np.fill_diagonal(G, -np.inf)
    scale = float(np.min(np.max(G, axis=0)))
    if not scale > 0:
        raise DegenerateScaleError(
            f"degenerate scale: min_j max_(i!=j) x_i'x_j = {scale:.3g} <= 0")
    return scale


class GramFactor:
    """Cached Cholesky factor of ``X^T X + I`` for a fixed data matrix."""

    def __init__(self, X):
        self.X = np.asarray(X, dtype=np.float64)
        self.XtX = self.X.T @ self.X
        M = self.XtX + np.eye(self.X.shape[1])
        try:
            self.cho = linalg.cho_factor(M, lower=False, check_finite=True)
        except (linalg.LinAlgError, ValueError) as exc:
            raise NumericalError(f"Cholesky of X^T X + I failed: {exc}") from exc
        self.matrix = M

    def solve(self, rhs):
        return linalg.cho_solve(self.cho, rhs, check_finite=False)


def update_C(U, theta, psi, mu: float, w1: float = 1.0, alpha_eff: float = 0.0):
    """Weighted shrinkage of ``U`` followed by zeroing the diagonal.

    Each entry is thresholded at ``(w1 * Psi_ij + alpha_eff * Theta_ij) / mu``.
    """
    tau = threshold_weights(theta, psi, w1, alpha_eff) / mu
    C = shrink(U, tau)
    np.fill_diagonal(C, 0.0)
    return C


def threshold_weights(theta, psi, w1, alpha_eff):
    W = w1 * np.asarray(psi, dtype=np.float64)
    if alpha_eff != 0.0:
        W = W + alpha_eff * np.asarray(theta, dtype=np.float64)
    return W


def a_update_rhs(X, E, C, Y, Z, mu: float, XtX=None):
    """Right-hand side ``X^T (X - E + Y/mu) + C - Z/mu`` of the A-step.

    The sign of ``Y`` matches the multiplier ascent ``Y += mu (X - XA - E)``.
    """
    X = np.asarray(X)
    if XtX is None:
        XtX = X.T @ X
    return XtX - X.T @ (E - Y / mu) + C - Z / mu


def update_A(X, E, C, Y, Z, mu: float, gram: GramFactor | None = None):
    """Solve ``(X^T X + I) A = X^T (X - E + Y/mu) + C - Z/mu``."""
    if gram is None:
        gram = GramFactor(X)
    return gram.solve(a_update_rhs(X, E, C, Y, Z, mu, gram.XtX))


def update_E(V, lam: float, mu: float, noise_model: str = L1):
    """Prox of the noise term: shrinkage for l1, scaling for Frobenius."""
    if noise_model == L1:
        return shrink(V, lam / mu)
    if noise_model == FROBENIUS:
        return np.asarray(V, dtype=np.float64) * (mu / (mu + lam))
    raise DataError(f"unknown noise model {noise_model!r}")


def solve(X, theta=None, psi=None, params: AdmmParams | None = None,
          warm: AdmmState | None = None, gram: GramFactor | None = None,
          trace=None) -> AdmmResult:
    """Run ADMM until both constraints are met to ``params.eps`` (sup-norm).

    Parameters
    ----------
    X : ndarray, shape (D, N)
    theta, psi : ndarray, shape (N, N), optional
        Structure and side-information matrices; default to zeros / ones.
    params : AdmmParams
    warm : AdmmState, optional
        Previous primal iterates (C, A, E).  Multipliers restart at zero and
        ``mu`` restarts at ``params.mu0``.
    gram : GramFactor, optional
        Reusable factorization of ``X^T X + I``.
    trace : callable, optional
        Called as ``trace(t, mu, C, A, rhs)`` inside every iteration, where
        ``rhs`` is the A-step right-hand side that produced ``A``.
    """
    if params is None:
        raise DataError("params are required")
    X = np.asarray(X, dtype=np.float64)
    D, N = X.shape
    theta = np.zeros((N, N)) if theta is None else np.asarray(theta, dtype=np.float64)
    psi = np.ones((N, N)) if psi is None else np.asarray(psi, dtype=np.float64)
    if theta.shape != (N, N) or psi.shape != (N, N):
        raise DataError(f"Theta/Psi must be {N} x {N}")
    if gram is None:
        gram = GramFactor(X)

    if warm is not None:
        if warm.C.shape != (N, N) or warm.A.shape != (N, N) or warm.E.shape != (D, N):
            raise DataError("warm-start state does not match the data shape")
        C, A, E = warm.C.copy(), warm.A.copy(), warm.E.copy()
    else:
        C, A, E = np.zeros((N, N)), np.zeros((N, N)), np.zeros((D, N))
    Y = np.zeros((D, N))
    Z = np.zeros((N, N))

    tau_base = threshold_weights(theta, psi, params.w1, params.alpha_eff)
    mu = params.mu0
    lam = params.lam
    residual = np.inf
    converged = False
    t = 0
    while t < params.max_iters:
        C = shrink(A + Z / mu, tau_base / mu)
        np.fill_diagonal(C, 0.0)
        rhs = gram.XtX - X.T @ (E - Y / mu) + C - Z / mu
        A = gram.solve(rhs)
        XA = X @ A
        E = update_E(X - XA + Y / mu, lam, mu, params.noise_model)
        r1 = X - XA - E
        r2 = A - C
        Y = Y + mu * r1
        Z = Z + mu * r2
        if trace is not None:
            trace(t, mu, C, A, rhs)
        t += 1
        try:
            mu = params.mu0 * params.rho ** t
        except OverflowError:
            raise DivergenceError(t) from None
        res1 = np.max(np.abs(r1))
        res2 = np.max(np.abs(r2))
        residual = max(res1, res2)
        if not (np.isfinite(residual) and np.isfinite(Y).all() and np.isfinite(Z).all()):
            raise DivergenceError(t)
        if res1 < params.eps and res2 < params.eps:
            converged = True
            break

    state = AdmmState(C=C, A=A, E=E, Y=Y, Z=Z, mu=mu, iter=t)
    return AdmmResult(C=C, E=E, iterations_used=t, final_residual=float(residual),
                      converged=converged, state=state)


def with_weights(params: AdmmParams, w1: float, alpha_eff: float) -> AdmmParams:
    return replace(params, w1=w1, alpha_eff=alpha_eff)
