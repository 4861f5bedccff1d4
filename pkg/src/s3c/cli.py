"""``s3c`` command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from contextlib import nullcontext
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__, bench
from .errors import DataError, NumericalError, S3CError
from .io import (RunConfig, load_constraints, load_labels, load_matrix, save_labels,
                 save_matrix, write_json, write_table)
from .metrics import evaluate
from .pipeline import HARD, SOFT, S3cConfig, run_s3c, run_ssc
from .synth import SynthSpec, generate

log = logging.getLogger("s3c")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERICAL = 0, 1, 2, 3

CLUSTER_METHODS = ("ssc", "s3c-hard", "s3c-soft", "cs3c")
DEFAULT_CLUSTER_LAMBDA0 = 20.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_common(p):
    g = p.add_argument_group("clustering overrides")
    g.add_argument("--config", type=Path, help="JSON RunConfig; flags below override it")
    g.add_argument("--seed", type=int)
    g.add_argument("--threads", type=int, help="BLAS threads per process")
    g.add_argument("--no-normalize", action="store_true", help="skip unit-norm column scaling")
    g.add_argument("--alpha", type=float)
    g.add_argument("--lambda0", type=float)
    g.add_argument("--mode", choices=(HARD, SOFT))
    g.add_argument("--schedule", choices=("fixed", "grow_alpha", "grow_alpha_shrink_l1"))
    g.add_argument("--nu", type=float)
    g.add_argument("--tmax", type=int)
    for k in range(1, 5):
        g.add_argument(f"--stop-eps{k}", type=float, dest=f"eps{k}", metavar="TOL")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="s3c", description="Structured sparse subspace clustering.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="generate a synthetic union-of-subspaces dataset")
    s.add_argument("--spec", type=Path, help="JSON RunConfig holding the synthetic-data keys")
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--seed", type=int, help="dataset seed (overrides synth_seed)")
    s.add_argument("--corruption", type=float)

    c = sub.add_parser("cluster", help="cluster the columns of a data matrix")
    c.add_argument("--data", type=Path, required=True, help="CSV/TSV, rows = features, columns = points")
    c.add_argument("--constraints", type=Path, help="1-based 'i,j,must|cannot' lines (cs3c)")
    c.add_argument("--truth", type=Path, help="1-based labels; enables metrics.json")
    c.add_argument("--method", choices=CLUSTER_METHODS)
    c.add_argument("--n-clusters", type=int, dest="n_clusters")
    c.add_argument("--out", type=Path, required=True)
    _add_common(c)

    b = sub.add_parser("bench", help="multi-trial synthetic sweeps")
    bsub = b.add_subparsers(dest="sweep", required=True, parser_class=_Parser)
    for name, helptext in (("table1", "corruption sweep, methods x levels"),
                           ("sideinfo", "CS3C side-information sweep")):
        bp = bsub.add_parser(name, help=helptext)
        bp.add_argument("--out", type=Path, required=True)
        bp.add_argument("--trials", type=int)
        bp.add_argument("--workers", type=int)
        bp.add_argument("--base-seed", type=int, dest="base_seed")
        _add_common(bp)
    rp = bsub.add_parser("replay", help="re-run one record of a records.jsonl file")
    rp.add_argument("--records", type=Path, required=True)
    rp.add_argument("--line", type=int, default=1, help="1-based record line")

    e = sub.add_parser("eval", help="score a labeling (and optionally a coefficient matrix)")
    e.add_argument("--truth", type=Path, required=True)
    e.add_argument("--pred", type=Path, required=True)
    e.add_argument("--coeffs", type=Path)
    return p


def _resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    for key in ("seed", "alpha", "lambda0", "mode", "schedule", "nu", "tmax",
                "eps1", "eps2", "eps3", "eps4", "threads", "method", "n_clusters",
                "trials", "workers", "base_seed"):
        v = getattr(args, key, None)
        if v is not None:
            setattr(cfg, key, v)
    if getattr(args, "no_normalize", False):
        cfg.normalize = False
    return cfg


def _threads(cfg):
    return threadpool_limits(limits=cfg.threads) if cfg.threads else nullcontext()


def _cmd_synth(args) -> int:
    cfg = RunConfig.load(args.spec) if args.spec else RunConfig()
    if args.seed is not None:
        cfg.synth_seed = args.seed
    if args.corruption is not None:
        cfg.corruption = args.corruption
    ds = generate(SynthSpec(**cfg.synth_fields()))
    args.out.mkdir(parents=True, exist_ok=True)
    save_matrix(args.out / "X.csv", ds.X)
    save_labels(args.out / "labels.csv", ds.truth)
    save_matrix(args.out / "mask.csv", ds.corrupted_mask.astype(np.float64))
    write_json(args.out / "spec.json", ds.spec.to_dict())
    write_json(args.out / "config.json", cfg.snapshot())
    return EXIT_OK


def _cmd_cluster(args) -> int:
    cfg = _resolve_config(args)
    if cfg.method not in CLUSTER_METHODS:
        raise UsageError(f"method must be one of {CLUSTER_METHODS}")
    X = load_matrix(args.data)
    N = X.shape[1]
    truth = load_labels(args.truth) if args.truth else None
    if truth is not None and truth.size != N:
        raise DataError(f"{args.truth}: {truth.size} labels for {N} points")
    if cfg.n_clusters is None:
        if truth is None:
            raise UsageError("--n-clusters is required when no --truth is given")
        cfg.n_clusters = int(np.unique(truth).size)
    if cfg.method in ("ssc", "cs3c"):
        mode = cfg.mode or HARD
    else:
        mode = cfg.method.split("-")[1]
        if cfg.mode is not None and cfg.mode != mode:
            raise UsageError(f"--mode {cfg.mode} contradicts method {cfg.method}")
    cfg.mode = mode
    if cfg.lambda0 is None:
        cfg.lambda0 = DEFAULT_CLUSTER_LAMBDA0
    side = None
    if args.constraints:
        if cfg.method != "cs3c":
            raise UsageError("--constraints requires --method cs3c")
        side = load_constraints(args.constraints, n_points=N)

    s3c_cfg = S3cConfig(n_clusters=cfg.n_clusters, mode=mode, **cfg.s3c_fields())
    args.out.mkdir(parents=True, exist_ok=True)
    write_json(args.out / "config.json", cfg.snapshot())
    with _threads(cfg):
        if cfg.method == "ssc":
            res = run_ssc(X, s3c_cfg)
        else:
            res = run_s3c(X, s3c_cfg, side=side if cfg.method == "cs3c" else None)
    save_labels(args.out / "labels.csv", res.labels)
    save_matrix(args.out / "C.csv", res.C)
    write_json(args.out / "history.json",
               {"stop_reason": res.stop_reason, "iterations": [r.to_dict() for r in res.history]})
    if truth is not None:
        write_json(args.out / "metrics.json", evaluate(truth, res.labels, res.C).to_dict())
    log.info("%s: %d outer iterations, stop=%s", cfg.method, len(res.history), res.stop_reason)
    return EXIT_OK


def _pct(v):
    return "0" if v == 0 else f"{100 * v:g}%"


def _fmt(cell):
    if cell.count == 0:
        return "nan"
    return f"{100 * cell.mean:.2f}"


def _cmd_bench(args) -> int:
    if args.sweep == "replay":
        return _cmd_replay(args)
    cfg = _resolve_config(args)
    if cfg.lambda0 is None:
        cfg.lambda0 = bench.TABLE1_LAMBDA0
    shared = cfg.s3c_fields()
    shared.pop("seed")  # per-trial seeds are derived from base_seed
    synth = {k: v for k, v in cfg.synth_fields().items() if k not in ("corruption", "seed")}
    args.out.mkdir(parents=True, exist_ok=True)
    write_json(args.out / "config.json", cfg.snapshot())
    rec_path = args.out / "records.jsonl"
    with open(rec_path, "w", encoding="utf-8") as fh, _threads(cfg):
        def sink(rec):
            fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
            fh.flush()

        if args.sweep == "table1":
            methods = tuple(cfg.methods or bench.TABLE1_METHODS)
            summary = bench.run_table1(trials=cfg.trials, levels=tuple(cfg.levels),
                                       methods=methods, base_seed=cfg.base_seed, synth=synth,
                                       config=shared, workers=cfg.workers, sink=sink)
        else:
            methods = tuple(cfg.methods or bench.SIDEINFO_METHODS)
            summary = bench.run_sideinfo_sweep(fractions=tuple(cfg.fractions), trials=cfg.trials,
                                               base_seed=cfg.base_seed, methods=methods,
                                               corruption=cfg.sideinfo_corruption, synth=synth,
                                               config=shared, workers=cfg.workers, sink=sink)

    header = ["method"] + [_pct(lv) for lv in summary.levels]
    rows = []
    for m in summary.methods:
        cells = [summary.cells[(m, lv)] for lv in summary.levels]
        if args.sweep == "table1":
            rows.append([m] + [_fmt(c) for c in cells])
        else:
            rows.append([m] + [f"{_fmt(c)}±{100 * c.std:.2f}" if c.count else "nan" for c in cells])
    write_table(args.out / "summary.csv", header, rows)
    for f in summary.failures:
        print(f"failed: {f.method} level={f.level} trial={f.trial}: {f.error}", file=sys.stderr)
    return EXIT_OK


def _cmd_replay(args) -> int:
    lines = [ln for ln in args.records.read_text(encoding="utf-8").splitlines() if ln.strip()]
    if not 1 <= args.line <= len(lines):
        raise UsageError(f"--line must be in 1..{len(lines)}")
    rec = bench.TrialRecord.from_dict(json.loads(lines[args.line - 1]))
    new = bench.replay_trial(rec)
    same = new.metrics() == rec.metrics()
    print(json.dumps({"method": rec.method, "level": rec.level, "trial": rec.trial,
                      "recorded": list(rec.metrics()), "replayed": list(new.metrics()),
                      "identical": same}))
    return EXIT_OK if same else EXIT_NUMERICAL


def _json_float(v):
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else v


def _cmd_eval(args) -> int:
    truth = load_labels(args.truth)
    pred = load_labels(args.pred)
    C = load_matrix(args.coeffs) if args.coeffs else None
    rep = evaluate(truth, pred, C).to_dict()
    print(json.dumps({k: _json_float(v) if not isinstance(v, list) else v for k, v in rep.items()}))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, --version, usage errors
        return EXIT_OK if exc.code in (None, 0) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"synth": _cmd_synth, "cluster": _cmd_cluster, "bench": _cmd_bench,
                "eval": _cmd_eval}
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"s3c: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"s3c: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, OSError) as exc:
        print(f"s3c: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except S3CError as exc:
        print(f"s3c: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TypeError, ValueError) as exc:
        # malformed config values that slipped past validation
        print(f"s3c: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
