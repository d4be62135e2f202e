"""Command-line entry point: ``adaptive-hermite <subcommand> ...``.

Exit codes: 0 success, 2 when some run did not converge (its report is
still written), 1 configuration or runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .hermite_core import hermite_basis
from .regressors import save_model, train_mlp, train_svr
from .training_data import build_spline_corpus, gen_gaussian_samples, read_corpus_csv, select, write_corpus_csv

TABLE_LAYOUTS = {
    "table1": "by_n",
    "table2": "grouped",
    "table3": "grouped",
    "table4": "alpha",
    "table5": "policy",
    "table6": "policy",
}

log = logging.getLogger("adaptive_hermite")


def _config_dir() -> Path:
    here = Path(__file__).resolve()
    for cand in (here.parents[2] / "configs", Path.cwd() / "configs"):
        if cand.is_dir():
            return cand
    return Path.cwd() / "configs"


def _cmd_basis(args) -> int:
    basis = hermite_basis(args.n)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["j", "xi", "w"])
        for j, (x, wt) in enumerate(zip(basis.nodes, basis.weights), start=1):
            w.writerow([j, f"{x:.17g}", f"{wt:.17g}"])
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _cmd_gen_corpus(args) -> int:
    basis = hermite_basis(args.n)
    if args.kind == "gaussian":
        samples = gen_gaussian_samples(basis, args.count, rng_seed=args.seed)
    else:
        samples = build_spline_corpus(basis, args.count, rng_seed=args.seed, random_support=args.random_support)
    path = write_corpus_csv(samples, args.out, seed=args.seed)
    print(f"wrote {len(samples)} samples to {path}")
    return 0


def _cmd_train(args) -> int:
    x, y = select(read_corpus_csv(args.corpus), args.representation)
    if args.model == "svr":
        model = train_svr(x, y, nu=args.nu, c=args.c, gamma=args.gamma)
    else:
        hidden = tuple(int(v) for v in args.hidden.split(","))
        model = train_mlp(x, y, hidden, args.max_epochs, args.target_mse, args.seed)
    path = save_model(model, args.out)
    print(f"wrote {args.model} model to {path}")
    return 0


def _finish(reports, out_dir: Path, name: str, layout: str) -> int:
    files = ex.emit_tables(reports, out_dir / f"{name}.csv", layout)
    for r in reports:
        if r.converged:
            n1, n2, n3 = r.norms
            print(f"{r.label:28s} N1={n1:.4e} N2={n2:.4e} N3={n3:.4e}  ({r.wall_time:.1f}s)")
        else:
            print(f"{r.label:28s} {ex.DIVERGED} (t={r.diverged_time:.4g})")
    print(f"wrote {files[0]}")
    return 0 if all(r.converged for r in reports) else 2


def _cmd_solve(args) -> int:
    if args.config:
        d = json.loads(Path(args.config).read_text())
        if "runs" in d:
            cfgs = ex.expand_runs(d, args.dt, args.paper_dt, args.seed, args.n)
        else:
            cfgs = [ex.ExperimentConfig.from_dict(d)]
    else:
        pol = ex.parse_policy(args.policy)
        cfgs = [
            ex.ExperimentConfig(
                args.policy, args.problem, args.n or 10, args.dt or 1e-6, pol, seed=args.seed or 0
            )
        ]
    reports = ex.run_batch(cfgs, args.workers)
    return _finish(reports, Path(args.out), "solve", "policy")


def _cmd_reproduce(args) -> int:
    path = Path(args.config) if args.config else _config_dir() / f"{args.table}.json"
    table = ex.load_table_config(path)
    cfgs = ex.expand_runs(table, args.dt, args.paper_dt, args.seed, args.n)
    reports = ex.run_batch(cfgs, args.workers)
    layout = table.get("layout", TABLE_LAYOUTS[args.table])
    return _finish(reports, Path(args.out), args.table, layout)


def _cmd_report(args) -> int:
    out = Path(args.out)
    tables = sorted(out.glob("*.csv"))
    if not tables:
        print(f"no tables in {out}")
        return 1
    for path in tables:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
        widths = [max(len(r[i]) for r in rows if i < len(r)) for i in range(len(rows[0]))]
        print(f"== {path.name}")
        for r in rows:
            print("  ".join(cell.rjust(wd) for cell, wd in zip(r, widths)))
        print()
    return 0


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with 1; status 2 is reserved for diverged runs."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="adaptive-hermite", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("basis", help="print Gauss-Hermite nodes and weights as CSV")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--out", help="output file (default stdout)")
    b.set_defaults(func=_cmd_basis)

    g = sub.add_parser("gen-corpus", help="write a training corpus CSV")
    g.add_argument("--kind", choices=["gaussian", "spline"], default="gaussian")
    g.add_argument("--n", type=int, default=10)
    g.add_argument("--count", type=int, default=40)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--random-support", action="store_true", help="draw each spline's support width")
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen_corpus)

    t = sub.add_parser("train", help="fit a regressor on a corpus CSV and save it as JSON")
    t.add_argument("--corpus", required=True)
    t.add_argument("--model", choices=["svr", "mlp"], default="svr")
    t.add_argument("--representation", choices=["PV", "FC"], default="FC")
    t.add_argument("--nu", type=float, default=0.5)
    t.add_argument("--c", type=float, default=1.0)
    t.add_argument("--gamma", type=float)
    t.add_argument("--hidden", default="20,10")
    t.add_argument("--max-epochs", type=int, default=500)
    t.add_argument("--target-mse", type=float, default=1e-6)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=_cmd_train)

    for name, func, helptext in (
        ("solve", _cmd_solve, "run one experiment (or every run in a config)"),
        ("reproduce", _cmd_reproduce, "regenerate one of the reference tables"),
    ):
        s = sub.add_parser(name, help=helptext)
        if name == "reproduce":
            s.add_argument("table", choices=sorted(TABLE_LAYOUTS))
        else:
            s.add_argument("--problem", choices=sorted(ex.PROBLEMS), default="homogeneous")
            s.add_argument("--policy", default="exact", help="e.g. exact, constant:0.5, ml:svr:FC")
        s.add_argument("--config")
        s.add_argument("--seed", type=int)
        s.add_argument("--dt", type=float)
        s.add_argument("--n", type=int)
        s.add_argument("--paper-dt", action="store_true", help="use the time step of the original runs")
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--out", default="results")
        s.set_defaults(func=func)

    r = sub.add_parser("report", help="pretty-print the CSV tables in a directory")
    r.add_argument("--out", default="results")
    r.set_defaults(func=_cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ex.ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
