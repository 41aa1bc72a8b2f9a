"""Command-line interface: outputs, exit codes and file handling."""

import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from sparsecount.bounds import TABLE1_PRINTED
from sparsecount.cli import BOUNDS_COLUMNS, EXIT_IO, EXIT_OK, EXIT_USAGE, main, read_counts


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def write_counts(path, counts, header=True, labels=None):
    lines = (["count" + (",region" if labels else "")] if header else [])
    for i, c in enumerate(counts):
        lines.append(f"{c},{labels[i]}" if labels else str(c))
    path.write_text("\n".join(lines) + "\n")


class TestAnalyze:
    def test_all_zero(self, tmp_path, capsys):
        f = tmp_path / "z.csv"
        write_counts(f, [0] * 50)
        out = tmp_path / "o.csv"
        code, _, err = run(["analyze", str(f), "--delta", "3", "--out", str(out)], capsys)
        assert code == EXIT_OK and "tau=0.02" in err
        rows = list(csv.DictReader(open(out)))
        assert list(rows[0]) == ["index", "count", "e_theta", "evidence", "reject"]
        assert all(r["reject"] == "0" for r in rows)
        assert all(float(r["e_theta"]) < 0.01 for r in rows)

    def test_large_count_and_labels(self, tmp_path, capsys):
        rng = np.random.default_rng(0)
        counts = [int(c) for c in rng.poisson(0.05, 200)]
        counts[10] = 426
        labels = [f"r{i}" for i in range(200)]
        f = tmp_path / "d.csv"
        write_counts(f, counts, labels=labels)
        code, out, _ = run(["analyze", str(f), "--delta", "3"], capsys)
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == EXIT_OK and rows[10]["label"] == "r10"
        e = float(rows[10]["e_theta"])
        assert 426 - 1.5 - 2 <= e <= 426 and rows[10]["reject"] == "1"

    def test_fixed_tau_and_gh(self, tmp_path, capsys):
        f = tmp_path / "d.csv"
        write_counts(f, [0, 1, 9], header=False)
        code, out, _ = run(["analyze", str(f), "--delta", "3", "--tau", "0.05", "--family",
                            "gh", "--a1", "0.5", "--a2", "0.5", "--gamma", "1"], capsys)
        assert code == EXIT_OK
        assert [r["reject"] for r in csv.DictReader(io.StringIO(out))] == ["0", "0", "1"]

    def test_malformed_row(self, tmp_path, capsys):
        f = tmp_path / "bad.csv"
        f.write_text("count\n1\nabc\n2\n")
        out = tmp_path / "o.csv"
        code, _, err = run(["analyze", str(f), "--delta", "3", "--out", str(out)], capsys)
        assert code == EXIT_IO and "abc" in err
        assert not out.exists() and list(tmp_path.iterdir()) == [f]

    def test_missing_file(self, tmp_path, capsys):
        code, _, _ = run(["analyze", str(tmp_path / "nope.csv"), "--delta", "3"], capsys)
        assert code == EXIT_IO

    def test_bad_prior(self, tmp_path, capsys):
        f = tmp_path / "d.csv"
        write_counts(f, [1, 2])
        code, _, _ = run(["analyze", str(f), "--delta", "3", "--family", "GH"], capsys)
        assert code == EXIT_USAGE

    def test_read_counts_negative(self, tmp_path):
        from sparsecount.cli import InputError
        f = tmp_path / "n.csv"
        f.write_text("3\n-1\n")
        with pytest.raises(InputError):
            read_counts(str(f))


class TestSimulate:
    ARGS = ["simulate", "--alpha", "1.3", "--beta", "0.005", "--delta", "3", "--p", "0.05",
            "--n", "500", "--seed", "1"]

    def test_rows_and_determinism(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(self.ARGS + ["--out", str(a)], capsys)[0] == EXIT_OK
        assert run(self.ARGS + ["--out", str(b)], capsys)[0] == EXIT_OK
        lines = a.read_text().splitlines()
        assert lines[0] == "index,count,truth" and len(lines) == 501
        assert a.read_bytes() == b.read_bytes()

    def test_bad_p(self, capsys):
        args = list(self.ARGS)
        args[args.index("0.05")] = "1.5"
        assert run(args, capsys)[0] == EXIT_USAGE


class TestBounds:
    def test_table1(self, capsys):
        code, out, _ = run(["bounds", "--table1"], capsys)
        rows = list(csv.DictReader(io.StringIO(out)))
        assert code == EXIT_OK and len(rows) == len(TABLE1_PRINTED)
        assert list(rows[0]) == BOUNDS_COLUMNS
        assert rows[0]["literal"] == "1.36667" and rows[0]["printed"] == "1.058"
        assert rows[0]["matching_convention"] == "none"

    def test_empty_grid(self, capsys):
        code, out, _ = run(["bounds"], capsys)
        assert code == EXIT_OK and out.strip() == ",".join(BOUNDS_COLUMNS)

    def test_invalid_row_flagged(self, capsys):
        code, out, _ = run(["bounds", "--row", "1.0,1.0,1.0"], capsys)
        row = next(csv.DictReader(io.StringIO(out)))
        assert code == EXIT_OK and row["valid"] == "0" and row["upper_bound"] == "1.5"

    def test_json_and_grid_file(self, tmp_path, capsys):
        g = tmp_path / "g.csv"
        g.write_text("a,alpha,delta\n1.5,1.5,1.0\n")
        code, out, _ = run(["bounds", "--grid", str(g), "--format", "json"], capsys)
        recs = json.loads(out)
        assert code == EXIT_OK and recs[0]["valid"] is True and recs[0]["printed"] is None

    def test_bad_row(self, capsys):
        assert run(["bounds", "--row", "1,2"], capsys)[0] == EXIT_USAGE


class TestPosteriorCurve:
    def test_output(self, capsys):
        code, out, _ = run(["posterior-curve", "--tau", "1", "--y", "4"], capsys)
        row = next(csv.DictReader(io.StringIO(out)))
        assert code == EXIT_OK and row["method"] == "CLOSED_FORM"
        assert float(row["e_kappa"]) == pytest.approx(0.352941, abs=1e-6)

    def test_grid(self, capsys):
        _, out, _ = run(["posterior-curve", "--tau", "0.1", "--tau", "0.01", "--y-max", "5",
                         "--method", "quadrature"], capsys)
        assert len(out.strip().splitlines()) == 1 + 2 * 6


class TestExperiment:
    def test_small_run(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"experiment": "single", "n": 50, "base_seed": 3,
                                   "model": {"alpha": 1.3, "beta": 0.005, "delta": 3, "p": 0.1},
                                   "rules": ["ORACLE", "ONE_GROUP_TUNED"]}))
        code, _, _ = run(["experiment", str(cfg), "--out-dir", str(tmp_path / "o"),
                          "--replications", "2"], capsys)
        assert code == EXIT_OK and (tmp_path / "o" / "experiment.csv").exists()

    def test_unknown_rule(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"experiment": "single", "n": 50, "base_seed": 3,
                                   "model": {"alpha": 1.3, "beta": 0.005, "delta": 3, "p": 0.1},
                                   "rules": ["ORACLE", "WIZARD"]}))
        code, _, err = run(["experiment", str(cfg), "--out-dir", str(tmp_path)], capsys)
        assert code == EXIT_USAGE and "rules" in err


def test_unknown_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == EXIT_USAGE


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "sparsecount.cli", "bounds", "--row", "1.5,1.5,1"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("a,alpha,delta")
