import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from s3c.cli import EXIT_DATA, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, main
from s3c.core import MUST
from s3c.errors import DataError, InconsistentSideInfoError
from s3c.io import (RunConfig, load_constraints, load_labels, load_matrix, save_constraints,
                    save_labels, save_matrix)
from s3c.synth import sample_side_info


class TestMatrix:
    def test_tiny_csv(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,0\n0,1\n")
        np.testing.assert_array_equal(load_matrix(p), np.eye(2))

    def test_tsv(self, tmp_path):
        p = tmp_path / "x.tsv"
        p.write_text("1\t2\t3\n4\t5\t6\n")
        assert load_matrix(p).shape == (2, 3)

    def test_ragged(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,2,3\n4,5\n")
        with pytest.raises(DataError, match="line 2"):
            load_matrix(p)

    def test_non_numeric(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1,2\n3,abc\n")
        with pytest.raises(DataError, match="line 2, column 2"):
            load_matrix(p)

    def test_empty(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("\n")
        with pytest.raises(DataError, match="empty"):
            load_matrix(p)

    def test_missing(self, tmp_path):
        with pytest.raises(DataError, match="no such file"):
            load_matrix(tmp_path / "nope.csv")

    def test_round_trip_random(self, tmp_path):
        M = np.random.default_rng(0).standard_normal((10, 30))
        save_matrix(tmp_path / "m.csv", M)
        assert np.max(np.abs(load_matrix(tmp_path / "m.csv") - M)) < 1e-12

    @settings(max_examples=25)
    @given(hnp.arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)),
                      elements=st.floats(-1e300, 1e300, allow_nan=False, allow_infinity=False)))
    def test_round_trip_exact(self, tmp_path_factory, M):
        p = tmp_path_factory.mktemp("rt") / "m.csv"
        save_matrix(p, M)
        assert np.array_equal(load_matrix(p), M)


class TestLabels:
    def test_one_based_round_trip(self, tmp_path):
        p = tmp_path / "l.csv"
        save_labels(p, [0, 2, 1])
        assert p.read_text() == "1\n3\n2\n"
        np.testing.assert_array_equal(load_labels(p), [0, 2, 1])

    def test_zero_rejected(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text("1\n0\n")
        with pytest.raises(DataError, match="line 2"):
            load_labels(p)


class TestConstraints:
    def test_single(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("1,2,must\n")
        assert load_constraints(p) == [(0, 1, MUST)]

    def test_conflict(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("1,2,must\n2,1,cannot\n")
        with pytest.raises(InconsistentSideInfoError, match="line 2"):
            load_constraints(p)

    @pytest.mark.parametrize("text, msg", [("1,2,maybe\n", "unknown"), ("1,x,must\n", "integers"),
                                           ("1,9,must\n", "out of range"), ("3,3,must\n", "itself"),
                                           ("1,2\n", "expected")])
    def test_bad_lines(self, tmp_path, text, msg):
        p = tmp_path / "c.csv"
        p.write_text(text)
        with pytest.raises(DataError, match=msg):
            load_constraints(p, n_points=5)

    def test_sampled_round_trip(self, tmp_path):
        cons = sample_side_info(np.repeat(np.arange(4), 10), 0.1, seed=5)
        p = tmp_path / "c.csv"
        save_constraints(p, cons)
        assert len(p.read_text().splitlines()) == 78
        assert load_constraints(p, n_points=40) == cons


class TestRunConfig:
    def test_unknown_key(self):
        with pytest.raises(DataError, match="unknown config keys"):
            RunConfig.from_dict({"lamda0": 1.0})

    def test_snapshot_materializes_defaults(self):
        snap = RunConfig.from_dict({"alpha": 0.5}).snapshot()
        assert snap["alpha"] == 0.5 and snap["nu"] == 1.2 and snap["tmax"] == 10
        assert RunConfig.from_dict(snap) == RunConfig.from_dict({"alpha": 0.5})


@pytest.fixture(scope="module")
def dataset(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    spec = d / "spec.json"
    spec.write_text(json.dumps({"D": 20, "d": 2, "n": 3, "Nj": 8, "corruption": 0.1}))
    assert main(["synth", "--spec", str(spec), "--out", str(d / "data")]) == EXIT_OK
    return d / "data"


class TestCli:
    def test_synth_outputs(self, dataset):
        for name in ("X.csv", "labels.csv", "mask.csv", "spec.json", "config.json"):
            assert (dataset / name).exists()
        assert load_matrix(dataset / "X.csv").shape == (20, 24)

    def test_cluster_and_eval(self, dataset, tmp_path, capsys):
        out = tmp_path / "run"
        rc = main(["cluster", "--data", str(dataset / "X.csv"), "--truth", str(dataset / "labels.csv"),
                   "--method", "s3c-soft", "--lambda0", "0.5", "--out", str(out)])
        assert rc == EXIT_OK
        hist = json.loads((out / "history.json").read_text())
        assert {"T", "structured_norm", "kmeans_cost", "admm_iters", "rel_change_theta",
                "rel_change_C", "theta_hash", "C_hash"} <= set(hist["iterations"][0])
        metrics = json.loads((out / "metrics.json").read_text())
        assert 0 <= metrics["err"] <= 1
        snap = json.loads((out / "config.json").read_text())
        assert snap["lambda0"] == 0.5 and snap["mode"] == "soft" and snap["n_clusters"] == 3
        capsys.readouterr()
        assert main(["eval", "--truth", str(dataset / "labels.csv"), "--pred",
                     str(out / "labels.csv"), "--coeffs", str(out / "C.csv")]) == EXIT_OK
        printed = json.loads(capsys.readouterr().out)
        assert printed["err"] == pytest.approx(metrics["err"], abs=0)
        assert printed["spr"] == pytest.approx(metrics["spr"], abs=1e-12)

    def test_eval_identity(self, dataset, capsys):
        labels = str(dataset / "labels.csv")
        assert main(["eval", "--truth", labels, "--pred", labels]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["err"] == 0.0

    def test_alpha_zero_matches_ssc(self, dataset, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"alpha": 0.0, "schedule": "fixed", "method": "s3c-hard",
                                   "lambda0": 0.5, "seed": 4}))
        common = ["--data", str(dataset / "X.csv"), "--n-clusters", "3"]
        assert main(["cluster", *common, "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
        assert main(["cluster", *common, "--method", "ssc", "--lambda0", "0.5", "--seed", "4",
                     "--out", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a" / "labels.csv").read_bytes() == (tmp_path / "b" / "labels.csv").read_bytes()

    def test_cs3c_with_constraints(self, dataset, tmp_path):
        cons = tmp_path / "c.csv"
        cons.write_text("1,2,must\n1,24,cannot\n")
        rc = main(["cluster", "--data", str(dataset / "X.csv"), "--n-clusters", "3", "--method",
                   "cs3c", "--constraints", str(cons), "--lambda0", "0.5", "--out", str(tmp_path / "r")])
        assert rc == EXIT_OK

    def test_usage_errors(self, dataset, tmp_path):
        assert main(["cluster", "--bogus"]) == EXIT_USAGE
        assert main(["cluster", "--data", str(dataset / "X.csv"), "--out", str(tmp_path)]) == EXIT_USAGE
        cons = tmp_path / "c.csv"
        cons.write_text("1,2,must\n")
        assert main(["cluster", "--data", str(dataset / "X.csv"), "--n-clusters", "3",
                     "--constraints", str(cons), "--method", "ssc", "--out", str(tmp_path)]) == EXIT_USAGE

    def test_data_errors(self, dataset, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,2\n3\n")
        assert main(["cluster", "--data", str(bad), "--n-clusters", "2", "--out", str(tmp_path)]) == EXIT_DATA
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"nonsense": 1}')
        assert main(["cluster", "--data", str(dataset / "X.csv"), "--config", str(cfg),
                     "--out", str(tmp_path)]) == EXIT_DATA

    def test_numerical_error(self, tmp_path):
        X = tmp_path / "X.csv"
        save_matrix(X, np.eye(3))
        assert main(["cluster", "--data", str(X), "--n-clusters", "2", "--out", str(tmp_path / "o")]) == EXIT_NUMERICAL

    def test_bench_table1_small(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"D": 20, "d": 2, "n": 3, "Nj": 6, "levels": [0.0, 0.1],
                                   "trials": 2, "tmax": 2, "lambda0": 0.5}))
        out = tmp_path / "b"
        assert main(["bench", "table1", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        with open(out / "summary.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["method", "0", "10%"]
        assert [r[0] for r in rows[1:]] == ["ssc", "s3c_hard", "s3c_soft"]
        lines = (out / "records.jsonl").read_text().splitlines()
        assert len(lines) == 2 * 2 * 3
        snap = json.loads((out / "config.json").read_text())
        assert snap["trials"] == 2 and snap["lambda0"] is not None
        capsys.readouterr()
        assert main(["bench", "replay", "--records", str(out / "records.jsonl"), "--line", "5"]) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["identical"] is True

    def test_bench_sideinfo_small(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"D": 20, "d": 2, "n": 3, "Nj": 6, "trials": 1, "tmax": 2, "lambda0": 0.5}))
        out = tmp_path / "s"
        assert main(["bench", "sideinfo", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        with open(out / "summary.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["method", "0", "5%", "10%", "15%"]
        assert all("±" in cell for cell in rows[1][1:])


def test_table1_header_shape():
    from s3c.bench import TABLE1_LEVELS
    from s3c.cli import _pct
    assert [_pct(v) for v in TABLE1_LEVELS] == ["0", "10%", "20%", "30%", "40%", "50%",
                                                "60%", "70%", "80%", "90%"]
