"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical
failure, 3 input/output failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from typing import Optional, Sequence

import numpy as np

from . import bounds as B
from .errors import DomainError
from .experiments import ConfigError, load_config, run_config
from .posterior import ShrinkageCache, posterior_shrinkage
from .priors import prior_from_config
from .rules import TauHatConfig, one_group_decide_eb, one_group_decide_tuned
from .samplers import TwoGroupModel, generate_two_group

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class InputError(Exception):
    """An input file could not be parsed."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _g(x: float) -> str:
    return f"{x:.6g}"


def _write_atomic(path: Optional[str], text: str) -> None:
    """Write ``text`` to ``path`` (stdout when None) via a temporary file and rename."""
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".csv")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_counts(path: str) -> tuple[np.ndarray, Optional[list]]:
    """Parse a counts CSV: first column counts, optional header ``count``, optional label column."""
    counts, labels = [], []
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if rows and rows[0][0].strip().lower() == "count":
        rows = rows[1:]
    for lineno, row in enumerate(rows, start=1):
        cell = row[0].strip()
        try:
            v = int(cell)
        except ValueError:
            raise InputError(f"{path}: row {lineno}: {cell!r} is not an integer count") from None
        if v < 0:
            raise InputError(f"{path}: row {lineno}: negative count {v}")
        counts.append(v)
        labels.append(row[1].strip() if len(row) > 1 else None)
    if not counts:
        raise InputError(f"{path}: no counts found")
    has_labels = any(lab is not None for lab in labels)
    return np.asarray(counts, dtype=np.int64), (labels if has_labels else None)


def _prior(args):
    cfg = {"family": args.family, "a1": args.a1, "a2": args.a2}
    if args.gamma is not None:
        cfg["gamma"] = args.gamma
    return prior_from_config(cfg)


def _add_prior_args(p):
    p.add_argument("--family", default="TPBN", choices=["TPBN", "GDP", "GH"], type=str.upper)
    p.add_argument("--a1", type=float, default=1.5)
    p.add_argument("--a2", type=float, default=1.5)
    p.add_argument("--gamma", type=float, default=None, help="GH only")
    p.add_argument("--alpha", type=float, default=1.5, help="Gamma shape of the prior on theta")


def cmd_analyze(args) -> int:
    counts, labels = read_counts(args.input)
    prior = _prior(args)
    cache = ShrinkageCache(prior, args.alpha, args.method)
    if args.tau is not None:
        dec = one_group_decide_tuned(prior, args.alpha, args.delta, args.tau, counts,
                                     threshold=args.threshold, cache=cache)
    else:
        dec = one_group_decide_eb(prior, args.alpha, args.delta, counts, TauHatConfig(args.eb_k),
                                  threshold=args.threshold, cache=cache)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["index", "count"] + (["label"] if labels else []) + ["e_theta", "evidence", "reject"]
    w.writerow(head)
    for i, y in enumerate(counts):
        est = cache(int(y), dec.tau)
        row = [i, int(y)] + ([labels[i] or ""] if labels else [])
        row += [_g(est.e_theta), _g(float(dec.evidence[i])), int(dec.reject[i])]
        w.writerow(row)
    _write_atomic(args.out, buf.getvalue())
    print(f"tau={_g(dec.tau)} threshold={_g(dec.threshold)} rejections={int(dec.reject.sum())}",
          file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = TwoGroupModel(args.alpha, args.beta, args.delta, args.p)
    data = generate_two_group(model, args.n, args.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "count", "truth"])
    for i, (c, t) in enumerate(zip(data.counts, data.truth)):
        w.writerow([i, int(c), int(t)])
    _write_atomic(args.out, buf.getvalue())
    return EXIT_OK


BOUNDS_COLUMNS = ["a", "alpha", "delta", "upper_bound", "valid", "violated", "cutoff",
                  "literal", "swapped", "continuous", "restricted", "printed", "matching_convention"]


def _grid_rows(args) -> list:
    rows = []
    if args.table1:
        rows.extend(B.TABLE1_PRINTED)
    for spec in args.row or []:
        try:
            a, al, d = (float(x) for x in spec.split(","))
        except ValueError:
            raise DomainError(f"--row expects a,alpha,delta, got {spec!r}") from None
        rows.append((a, al, d, None))
    if args.grid:
        with open(args.grid, newline="") as fh:
            for rec in csv.DictReader(fh):
                try:
                    rows.append((float(rec["a"]), float(rec["alpha"]), float(rec["delta"]),
                                 float(rec["printed"]) if rec.get("printed") else None))
                except (KeyError, ValueError) as exc:
                    raise InputError(f"{args.grid}: bad grid row {rec}: {exc}") from None
    return rows


def cmd_bounds(args) -> int:
    records = []
    for a, al, d, printed in _grid_rows(args):
        rep = B.risk_ratio_upper_bound(a, al, d, restricted=args.restricted, strict=False)
        conv = B.risk_ratio_conventions(a, al, d)
        match = B.closest_convention(a, al, d, printed) if printed is not None else None
        records.append({
            "a": a, "alpha": al, "delta": d, "upper_bound": rep.value, "valid": rep.valid,
            "violated": ";".join(rep.violated), "cutoff": conv["cutoff"],
            "literal": conv["literal"], "swapped": conv["swapped"],
            "continuous": conv["continuous"], "restricted": conv["restricted"],
            "printed": printed, "matching_convention": match or ("none" if printed else ""),
        })
    if args.format == "json":
        _write_atomic(args.out, json.dumps(records, indent=2) + "\n")
        return EXIT_OK
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BOUNDS_COLUMNS)
    for r in records:
        w.writerow([_g(r[k]) if isinstance(r[k], float) else
                    (int(r[k]) if isinstance(r[k], bool) else ("" if r[k] is None else r[k]))
                    for k in BOUNDS_COLUMNS])
    _write_atomic(args.out, buf.getvalue())
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    paths = run_config(cfg, args.out_dir, replications=args.replications, full=args.full,
                       workers=args.workers, seed=args.seed)
    print(f"wrote {paths['csv']} and {paths['json']}", file=sys.stderr)
    return EXIT_OK


def cmd_posterior_curve(args) -> int:
    prior = _prior(args)
    ys = args.y if args.y else list(range(args.y_max + 1))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["y", "tau", "e_kappa", "e_one_minus_kappa", "e_theta", "method",
                "rel_error_estimate"])
    for tau in args.tau:
        for y in ys:
            e = posterior_shrinkage(prior, args.alpha, int(y), tau, args.method)
            w.writerow([int(y), _g(tau), _g(e.e_kappa), _g(e.e_one_minus_kappa), _g(e.e_theta),
                        e.method.value, f"{e.rel_error_estimate:.3g}"])
    _write_atomic(args.out, buf.getvalue())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="sparsecount", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="posterior means and hotspot flags for a counts CSV")
    a.add_argument("input")
    a.add_argument("--out", help="output CSV (default stdout)")
    _add_prior_args(a)
    a.add_argument("--delta", type=float, required=True, help="signal scale increment")
    mode = a.add_mutually_exclusive_group()
    mode.add_argument("--tau", type=float, help="fixed global scale")
    mode.add_argument("--eb-k", type=int, default=1, help="count threshold k for tau_hat")
    a.add_argument("--threshold", type=float, default=None)
    a.add_argument("--method", default="auto", choices=["auto", "closed_form", "quadrature"])
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="draw a two-group dataset")
    for name in ("alpha", "beta", "delta", "p"):
        s.add_argument(f"--{name}", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bounds", help="risk-ratio bound table")
    b.add_argument("--table1", action="store_true", help="include the nine printed Table 1 rows")
    b.add_argument("--row", action="append", metavar="A,ALPHA,DELTA")
    b.add_argument("--grid", help="CSV with columns a,alpha,delta[,printed]")
    b.add_argument("--restricted", action="store_true", help="use the event a < Y <= cutoff")
    b.add_argument("--format", choices=["csv", "json"], default="csv")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bounds)

    e = sub.add_parser("experiment", help="run a declarative simulation config")
    e.add_argument("config", help="'table2', 'table3' or a JSON file")
    e.add_argument("--out-dir", required=True)
    e.add_argument("--replications", type=int)
    e.add_argument("--full", action="store_true", help="use full_replications from the config")
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--seed", type=int)
    e.set_defaults(func=cmd_experiment)

    c = sub.add_parser("posterior-curve", help="posterior shrinkage over a grid of y and tau")
    _add_prior_args(c)
    c.add_argument("--tau", type=float, action="append", required=True)
    c.add_argument("--y", type=int, action="append")
    c.add_argument("--y-max", type=int, default=20)
    c.add_argument("--method", default="auto", choices=["auto", "closed_form", "quadrature"])
    c.add_argument("--out")
    c.set_defaults(func=cmd_posterior_curve)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"sparsecount: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"sparsecount: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, InputError) as exc:
        print(f"sparsecount: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
