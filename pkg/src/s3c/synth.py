"""Synthetic union-of-subspaces data and side-information sampling.

Randomness comes from ``numpy.random.Generator`` (PCG64) streams spawned from
one ``SeedSequence``: child ``j`` (``j < n``) draws the basis and coefficients
of subspace ``j``; child ``n`` draws the corruption.  A dataset is therefore
bitwise reproducible from ``(spec, seed)``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import CANNOT, MUST
from .errors import DataError


@dataclass(frozen=True)
class SynthSpec:
    D: int = 100
    d: int = 5
    n: int = 15
    Nj: int = 10
    corruption: float = 0.0
    noise_factor: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.d < self.D:
            raise DataError(f"need 1 <= d < D, got d={self.d}, D={self.D}")
        if self.n < 1 or self.Nj < 1:
            raise DataError("need n >= 1 and Nj >= 1")
        if not 0.0 <= self.corruption <= 1.0:
            raise DataError(f"corruption must lie in [0, 1], got {self.corruption}")
        if self.noise_factor < 0:
            raise DataError("noise_factor must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SynthDataset:
    X: np.ndarray
    truth: np.ndarray
    clean_X: np.ndarray
    corrupted_mask: np.ndarray
    bases: tuple
    spec: SynthSpec


def generate(spec: SynthSpec) -> SynthDataset:
    """Sample ``spec.Nj`` points from each of ``spec.n`` random ``d``-dim subspaces.

    Each basis is the top-``d`` left singular vectors of a ``D x D`` standard
    Gaussian matrix; coefficients are standard Gaussian.  Then
    ``floor(corruption * D * N)`` entries, chosen uniformly without
    replacement over the whole matrix, receive additive Gaussian noise of
    variance ``noise_factor * ||x||`` where ``x`` is the clean column.
    """
    streams = np.random.SeedSequence(spec.seed).spawn(spec.n + 1)
    blocks, bases = [], []
    for j in range(spec.n):
        rng = np.random.default_rng(streams[j])
        R = rng.standard_normal((spec.D, spec.D))
        U = np.linalg.svd(R)[0][:, :spec.d]
        Y = rng.standard_normal((spec.d, spec.Nj))
        bases.append(U)
        blocks.append(U @ Y)
    clean = np.hstack(blocks)
    truth = np.repeat(np.arange(spec.n), spec.Nj)

    D, N = clean.shape
    rng = np.random.default_rng(streams[spec.n])
    count = int(np.floor(spec.corruption * D * N))
    mask = np.zeros(D * N, dtype=bool)
    X = clean.copy()
    if count:
        flat = rng.choice(D * N, size=count, replace=False)
        mask[flat] = True
        rows, cols = np.unravel_index(flat, (D, N))
        std = np.sqrt(spec.noise_factor * np.linalg.norm(clean, axis=0))
        X[rows, cols] += std[cols] * rng.standard_normal(count)
    mask = mask.reshape(D, N)
    for arr in (X, clean, mask):
        arr.setflags(write=False)
    return SynthDataset(X=X, truth=truth, clean_X=clean, corrupted_mask=mask,
                        bases=tuple(bases), spec=spec)


def sample_side_info(truth, fraction: float, seed: int = 0) -> list[tuple[int, int, str]]:
    """Reveal ``floor(fraction * N(N-1)/2)`` random point pairs from the ground truth.

    Returns 0-based ``(i, j, kind)`` triples with ``i < j``; ``kind`` is
    ``"must"`` for same-class pairs and ``"cannot"`` otherwise.
    """
    truth = np.asarray(truth)
    if not 0.0 <= fraction <= 1.0:
        raise DataError(f"fraction must lie in [0, 1], got {fraction}")
    N = truth.size
    iu, ju = np.triu_indices(N, k=1)
    count = int(np.floor(fraction * iu.size))
    if count == 0:
        return []
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(iu.size, size=count, replace=False))
    return [(int(iu[p]), int(ju[p]), MUST if truth[iu[p]] == truth[ju[p]] else CANNOT)
            for p in pick]
