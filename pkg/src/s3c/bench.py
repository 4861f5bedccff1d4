"""Multi-trial experiment harness (Table-I and side-information sweeps).

One job is one ``(level, trial)`` cell: the dataset is generated once and every
method runs on it, so method comparisons are paired.  Jobs run in a bounded
process pool; each job pins BLAS to one thread so records replay bitwise.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import S3CError
from .metrics import evaluate
from .pipeline import HARD, SOFT, S3cConfig, run_s3c, run_ssc
from .synth import SynthSpec, generate, sample_side_info

log = logging.getLogger(__name__)

SSC = "ssc"
S3C_HARD = "s3c_hard"
S3C_SOFT = "s3c_soft"
CS3C_HARD = "cs3c_hard"
CS3C_SOFT = "cs3c_soft"
METHODS = (SSC, S3C_HARD, S3C_SOFT, CS3C_HARD, CS3C_SOFT)

TABLE1_LEVELS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
TABLE1_METHODS = (SSC, S3C_HARD, S3C_SOFT)
SIDEINFO_FRACTIONS = (0.0, 0.05, 0.10, 0.15)
SIDEINFO_METHODS = (CS3C_HARD, CS3C_SOFT)

# lambda0 picked once on tuning seeds disjoint from the default base_seed
TABLE1_LAMBDA0 = 0.07
# corruption level of the side-information sweep
SIDEINFO_CORRUPTION = 0.2


@dataclass
class TrialRecord:
    method: str
    level: float
    trial: int
    seed: int
    synth: dict
    config: dict
    side_fraction: float = 0.0
    side_seed: int | None = None
    err: float | None = None
    spr: float | None = None
    conn: float | None = None
    outer_iters: int | None = None
    stop_reason: str | None = None
    wall_time: float = 0.0
    error: str | None = None
    # only filled when the config keeps snapshots
    theta_checked: int | None = None
    theta_violations: int | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrialRecord":
        return cls(**d)

    def metrics(self) -> tuple:
        return (self.err, self.spr, self.conn)


@dataclass
class CellStats:
    mean: float
    median: float
    std: float
    count: int
    failures: int = 0


@dataclass
class SweepSummary:
    """Aggregated ERR per ``(method, level)``; ``std`` is the population std."""

    cells: dict
    methods: tuple
    levels: tuple
    records: list = field(repr=False, default_factory=list)

    def mean(self, method, level) -> float:
        return self.cells[(method, level)].mean

    def table(self, stat: str = "mean") -> list[list]:
        """Rows are methods, columns follow ``levels``; values in percent."""
        return [[method] + [100.0 * getattr(self.cells[(method, lv)], stat)
                            if self.cells[(method, lv)].count else float("nan")
                            for lv in self.levels]
                for method in self.methods]

    @property
    def failures(self) -> list:
        return [r for r in self.records if not r.ok]


def derive_seed(*keys: int) -> int:
    """Deterministic 32-bit seed from integer keys."""
    return int(np.random.SeedSequence([int(k) for k in keys]).generate_state(1)[0])


def _level_key(level: float) -> int:
    return int(round(level * 1_000_000))


def method_config(method: str, n_clusters: int, seed: int, **overrides) -> S3cConfig:
    """Clustering config for a bench method; ``overrides`` are S3cConfig fields."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    mode = SOFT if method.endswith("soft") else HARD
    opts = dict(overrides)
    opts.update(n_clusters=n_clusters, mode=mode, seed=seed)
    if opts.get("alpha") is None:
        opts.pop("alpha", None)
    return S3cConfig(**opts)


def run_method(method: str, X, cfg: S3cConfig, side=None):
    if method == SSC:
        return run_ssc(X, cfg)
    return run_s3c(X, cfg, side=side if method.startswith("cs3c") else None)


def theta_violation(theta, mode: str) -> bool:
    """True if a structure matrix breaks symmetry, zero diagonal or its value range."""
    if not (np.array_equal(theta, theta.T) and np.all(np.diag(theta) == 0)):
        return True
    if mode == HARD:
        return not np.all((theta == 0) | (theta == 1))
    return not (np.all(theta >= 0) and np.all(theta <= 2))


def _run_cell(job: dict) -> list[TrialRecord]:
    with threadpool_limits(limits=1):
        spec = SynthSpec(**job["synth"])
        ds = generate(spec)
        side = None
        if job.get("side_fraction", 0.0) > 0 or job.get("side_seed") is not None:
            side = sample_side_info(ds.truth, job["side_fraction"], job["side_seed"])
        out = []
        for method, cfg_dict in job["configs"].items():
            rec = TrialRecord(method=method, level=job["level"], trial=job["trial"],
                              seed=spec.seed, synth=spec.to_dict(), config=cfg_dict,
                              side_fraction=job.get("side_fraction", 0.0),
                              side_seed=job.get("side_seed"))
            t0 = time.perf_counter()
            try:
                cfg = S3cConfig.from_dict(cfg_dict)
                res = run_method(method, ds.X, cfg, side)
                rep = evaluate(ds.truth, res.labels, res.C)
                rec.err, rec.spr, rec.conn = rep.err, rep.spr, rep.conn
                rec.outer_iters = len(res.history)
                rec.stop_reason = res.stop_reason
                if cfg.keep_snapshots:
                    rec.theta_checked = len(res.history)
                    rec.theta_violations = sum(theta_violation(h.theta, cfg.mode)
                                               for h in res.history)
            except S3CError as exc:
                rec.error = f"{type(exc).__name__}: {exc}"
            rec.wall_time = time.perf_counter() - t0
            out.append(rec)
        return out


def replay_trial(rec: TrialRecord) -> TrialRecord:
    """Re-run one record from its snapshot (single-threaded)."""
    job = {"synth": rec.synth, "level": rec.level, "trial": rec.trial,
           "side_fraction": rec.side_fraction, "side_seed": rec.side_seed,
           "configs": {rec.method: rec.config}}
    return _run_cell(job)[0]


def _execute(jobs, workers: int, sink=None) -> list[TrialRecord]:
    records = []

    def collect(recs):
        for r in recs:
            if r.error:
                log.warning("trial failed: %s level=%s trial=%d: %s",
                            r.method, r.level, r.trial, r.error)
            if sink is not None:
                sink(r)
            records.append(r)

    if workers <= 1:
        for job in jobs:
            collect(_run_cell(job))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for recs in pool.map(_run_cell, jobs):
                collect(recs)
    return records


def summarize(records, methods, levels) -> SweepSummary:
    order = {m: i for i, m in enumerate(methods)}
    records = sorted(records, key=lambda r: (r.level, r.trial, order.get(r.method, len(order))))
    cells = {}
    for m in methods:
        for lv in levels:
            rs = [r for r in records if r.method == m and r.level == lv]
            errs = np.array([r.err for r in rs if r.ok], dtype=np.float64)
            fails = sum(1 for r in rs if not r.ok)
            if errs.size:
                cells[(m, lv)] = CellStats(float(errs.mean()), float(np.median(errs)),
                                           float(errs.std()), int(errs.size), fails)
            else:
                cells[(m, lv)] = CellStats(float("nan"), float("nan"), float("nan"), 0, fails)
    return SweepSummary(cells=cells, methods=tuple(methods), levels=tuple(levels),
                        records=records)


def run_table1(trials: int = 20, levels=TABLE1_LEVELS, methods=TABLE1_METHODS,
               base_seed: int = 0, synth: dict | None = None,
               config: dict | None = None, workers: int = 1, sink=None) -> SweepSummary:
    """Corruption sweep: every method on the same dataset per (level, trial).

    ``synth`` overrides SynthSpec fields (other than corruption and seed);
    ``config`` overrides S3cConfig fields shared by all methods.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    synth = dict(synth or {})
    config = dict(config or {})
    config.setdefault("lambda0", TABLE1_LAMBDA0)
    jobs = []
    for lv in levels:
        for t in range(trials):
            seed = derive_seed(base_seed, _level_key(lv), t)
            spec = SynthSpec(**{**synth, "corruption": lv, "seed": seed})
            configs = {m: method_config(m, spec.n, seed, **config).to_dict() for m in methods}
            jobs.append({"synth": spec.to_dict(), "level": lv, "trial": t, "configs": configs})
    return summarize(_execute(jobs, workers, sink), methods, levels)


def run_sideinfo_sweep(fractions=SIDEINFO_FRACTIONS, trials: int = 20, base_seed: int = 0,
                       methods=SIDEINFO_METHODS, corruption: float = SIDEINFO_CORRUPTION,
                       synth: dict | None = None, config: dict | None = None,
                       workers: int = 1, sink=None) -> SweepSummary:
    """CS3C with a growing fraction of revealed pairwise constraints.

    Trial ``t`` uses the same dataset at every fraction, so fractions can be
    compared pairwise.  Summary columns are the fractions.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    synth = dict(synth or {})
    config = dict(config or {})
    config.setdefault("lambda0", TABLE1_LAMBDA0)
    jobs = []
    for t in range(trials):
        seed = derive_seed(base_seed, _level_key(corruption), t)
        spec = SynthSpec(**{**synth, "corruption": corruption, "seed": seed})
        configs = {m: method_config(m, spec.n, seed, **config).to_dict() for m in methods}
        for fr in fractions:
            jobs.append({"synth": spec.to_dict(), "level": fr, "trial": t,
                         "side_fraction": fr,
                         "side_seed": derive_seed(base_seed, t, _level_key(fr), 1),
                         "configs": configs})
    return summarize(_execute(jobs, workers, sink), methods, fractions)


def paired_wins(summary: SweepSummary, method: str, level, baseline_level) -> float:
    """Share of trials where ERR at ``level`` is <= ERR at ``baseline_level``."""
    by = {(r.level, r.trial): r.err for r in summary.records if r.method == method and r.ok}
    trials = sorted({t for (lv, t) in by if lv == level} & {t for (lv, t) in by if lv == baseline_level})
    if not trials:
        return float("nan")
    return float(np.mean([by[(level, t)] <= by[(baseline_level, t)] for t in trials]))
