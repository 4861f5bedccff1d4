"""File formats: numeric matrices, label vectors, constraint lists, run configs.

Matrices and labels are delimited text written with 17 significant digits so
that load(save(M)) reproduces M.  Label files and constraint files use
1-based indices; in memory everything is 0-based.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .core import CANNOT, MUST
from .errors import DataError, InconsistentSideInfoError

FLOAT_FMT = "%.17g"
_DELIMS = {"csv": ",", "tsv": "\t"}


def _format_of(path, fmt):
    if fmt is None:
        fmt = "tsv" if str(path).lower().endswith((".tsv", ".tab")) else "csv"
    if fmt not in _DELIMS:
        raise DataError(f"unknown matrix format {fmt!r}; expected csv or tsv")
    return fmt


def _read_lines(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read().splitlines()
    except FileNotFoundError as exc:
        raise DataError(f"{path}: no such file") from exc
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: cannot read: {exc}") from exc


def load_matrix(path, fmt: str | None = None) -> np.ndarray:
    """Read a rectangular numeric table (rows = features, columns = points).

    Blank lines are skipped.  Errors name the offending line and column.
    """
    delim = _DELIMS[_format_of(path, fmt)]
    rows, width = [], None
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        cells = line.split(delim)
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise DataError(f"{path}: line {lineno} has {len(cells)} fields, expected {width}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            col = next(k for k, c in enumerate(cells, start=1) if not _is_float(c))
            raise DataError(f"{path}: line {lineno}, column {col}: "
                            f"non-numeric cell {cells[col - 1]!r}") from None
    if not rows:
        raise DataError(f"{path}: empty file")
    M = np.array(rows, dtype=np.float64)
    bad = np.argwhere(~np.isfinite(M))
    if bad.size:
        r, c = bad[0]
        raise DataError(f"{path}: non-finite value at row {r + 1}, column {c + 1}")
    return M


def _is_float(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def save_matrix(path, M, fmt: str | None = None) -> None:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    np.savetxt(path, M, fmt=FLOAT_FMT, delimiter=_DELIMS[_format_of(path, fmt)])


def save_labels(path, labels) -> None:
    """One 1-based label per line."""
    labels = np.asarray(labels, dtype=np.int64).ravel()
    Path(path).write_text("".join(f"{v + 1}\n" for v in labels), encoding="utf-8")


def load_labels(path) -> np.ndarray:
    """Read 1-based integer labels (one per line) and return them 0-based."""
    out = []
    for lineno, line in enumerate(_read_lines(path), start=1):
        s = line.strip()
        if not s:
            continue
        try:
            v = int(s)
        except ValueError:
            raise DataError(f"{path}: line {lineno}: label {s!r} is not an integer") from None
        if v < 1:
            raise DataError(f"{path}: line {lineno}: labels are 1-based, got {v}")
        out.append(v - 1)
    if not out:
        raise DataError(f"{path}: empty file")
    return np.array(out, dtype=np.int64)


def load_constraints(path, n_points: int | None = None) -> list[tuple[int, int, str]]:
    """Parse ``i,j,must`` / ``i,j,cannot`` lines with 1-based point indices.

    Returns 0-based triples in file order.  Repeating a pair with the same
    kind is harmless and dropped; repeating it with the other kind (in either
    order) is an error.
    """
    out, seen = [], {}
    for lineno, line in enumerate(_read_lines(path), start=1):
        if not line.strip():
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise DataError(f"{path}: line {lineno}: expected 'i,j,must|cannot'")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataError(f"{path}: line {lineno}: indices must be integers") from None
        kind = parts[2].lower()
        if kind not in (MUST, CANNOT):
            raise DataError(f"{path}: line {lineno}: unknown constraint {parts[2]!r}")
        for v in (i, j):
            if v < 1 or (n_points is not None and v > n_points):
                hi = "" if n_points is None else f"..{n_points}"
                raise DataError(f"{path}: line {lineno}: index {v} out of range 1{hi}")
        if i == j:
            raise DataError(f"{path}: line {lineno}: a point cannot constrain itself")
        key = (min(i, j), max(i, j))
        if key in seen:
            prev_kind, prev_line = seen[key]
            if prev_kind != kind:
                raise InconsistentSideInfoError(
                    f"{path}: line {lineno}: pair {key} is '{kind}' but line {prev_line} says '{prev_kind}'")
            continue
        seen[key] = (kind, lineno)
        out.append((i - 1, j - 1, kind))
    return out


def save_constraints(path, constraints) -> None:
    """Write 0-based triples as 1-based ``i,j,kind`` lines."""
    Path(path).write_text("".join(f"{i + 1},{j + 1},{k}\n" for i, j, k in constraints),
                          encoding="utf-8")


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise DataError(f"{path}: no such file") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def write_table(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


@dataclass
class RunConfig:
    """Flat key/value document covering clustering, data generation and bench options.

    ``None`` for ``lambda0`` means "command default" (20 for ``cluster``, the
    tuned synthetic value for ``bench``); :meth:`snapshot` is taken after that
    has been resolved.  Synthetic-data keys carry a ``synth_`` prefix where they
    would otherwise clash.
    """

    # clustering
    method: str = "s3c-hard"
    n_clusters: int | None = None
    lambda0: float | None = None
    alpha: float | None = None
    mode: str | None = None
    schedule: str = "grow_alpha_shrink_l1"
    nu: float = 1.2
    tmax: int = 10
    eps1: float | None = 1e-3
    eps2: float | None = None
    eps3: float | None = None
    eps4: float | None = None
    force_eps2: bool = False
    seed: int = 0
    kmeans_restarts: int = 20
    normalize: bool = True
    noise_model: str = "l1"
    rho: float = 1.1
    admm_eps: float = 1e-6
    admm_max_iters: int = 200
    threads: int | None = None
    # synthetic data
    D: int = 100
    d: int = 5
    n: int = 15
    Nj: int = 10
    corruption: float = 0.0
    noise_factor: float = 0.3
    synth_seed: int = 0
    # bench
    trials: int = 20
    levels: list = field(default_factory=lambda: [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    methods: list | None = None
    fractions: list = field(default_factory=lambda: [0.0, 0.05, 0.10, 0.15])
    sideinfo_corruption: float = 0.2
    base_seed: int = 0
    workers: int = 1

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise DataError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise DataError(f"unknown config keys: {unknown}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        return cls.from_dict(read_json(path))

    def snapshot(self) -> dict:
        return asdict(self)

    def s3c_fields(self) -> dict:
        """Keys shared with :class:`s3c.pipeline.S3cConfig` (mode and n_clusters excluded)."""
        keys = ("lambda0", "alpha", "schedule", "nu", "tmax", "eps1", "eps2", "eps3", "eps4",
                "force_eps2", "seed", "kmeans_restarts", "normalize", "noise_model", "rho",
                "admm_eps", "admm_max_iters")
        out = {k: getattr(self, k) for k in keys}
        if out["lambda0"] is None:
            del out["lambda0"]
        return out

    def synth_fields(self) -> dict:
        return {"D": self.D, "d": self.d, "n": self.n, "Nj": self.Nj,
                "corruption": self.corruption, "noise_factor": self.noise_factor,
                "seed": self.synth_seed}
