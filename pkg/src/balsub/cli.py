"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 every fit singular.
All randomness comes from ``--seed`` (default :data:`DEFAULT_SEED`).
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .anova import DOMAIN_CAP, diagnostics
from .criterion import Subsample, f_of, is_orthogonal_array
from .dataset import (
    DataError,
    LevelSpec,
    ResponseModel,
    increasing_levels,
    ingest_csv,
    write_csv,
)
from .evaluate import ExperimentConfig, run_experiment
from .selector import SelectionConfig, balanced_select, uniform_select

DEFAULT_SEED = 20230101

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_SINGULAR = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _columns(text: str) -> list[str]:
    return [c.strip() for c in text.split(",") if c.strip()]


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in _columns(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _threads(value: int | None) -> int:
    return value if value else (os.cpu_count() or 1)


def _set_threads(threads: int):
    import numba

    numba.set_num_threads(max(1, min(threads, numba.config.NUMBA_NUM_THREADS)))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="balsub", description="Balanced subsampling for categorical data.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)
    parser.commands = {}

    def data_flags(p, required=True):
        p.add_argument("--input", required=required, help="CSV file with a header row")
        p.add_argument("--categorical", type=_columns, default=None,
                       help="comma-separated categorical columns (default: all but --response)")
        p.add_argument("--response", default=None, help="numeric response column")

    p = parser.commands["subsample"] = sub.add_parser(
        "subsample", help="select a subsample from a CSV file")
    data_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--method", choices=["balanced", "uniform"], default="balanced")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--tie-rule", choices=["lowest-index", "seeded-random"], default="lowest-index")
    p.add_argument("--output", help="indices file, one 0-based index per line (default: stdout)")
    p.add_argument("--subsample-csv", help="also write the selected rows as CSV")
    p.add_argument("--report", help="JSON report path")
    p.add_argument("--trace", help="write per-iteration selection trace as JSON lines")
    p.add_argument("--threads", type=int, default=None)

    p = parser.commands["inspect"] = sub.add_parser(
        "inspect", help="balance and information diagnostics of a subsample")
    data_flags(p)
    p.add_argument("--indices", help="indices file (default: all rows)")
    p.add_argument("--domain-cap", type=int, default=DOMAIN_CAP)
    p.add_argument("--output", help="JSON output path (default: stdout)")

    p = parser.commands["simulate"] = sub.add_parser(
        "simulate", help="run the repeated-response simulation")
    p.add_argument("--config", help="flat key=value file; flags override its values")
    data_flags(p, required=False)
    p.add_argument("--case", type=int, choices=[1, 2, 3], default=None)
    p.add_argument("--N", type=int, default=None)
    p.add_argument("--q", type=_int_list, default=None, help="levels per covariate, e.g. 2,3,4")
    p.add_argument("--p", type=int, default=None, help="p covariates with q_j = j + 1")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--methods", type=_columns, default=["balanced", "uniform"])
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--wspe", choices=["empirical", "analytic", "both"], default="both")
    p.add_argument("--tie-rule", choices=["lowest-index", "seeded-random"], default="lowest-index")
    p.add_argument("--domain-cap", type=int, default=DOMAIN_CAP)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--threads", type=int, default=None)
    return parser


def _read_config(path) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    try:
        cp.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc}") from None
    return {k.replace("-", "_"): v for k, v in cp["config"].items()}


def parse_args(argv) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.config:
        values = _read_config(args.config)
        sim = parser.commands["simulate"]
        actions = {a.dest: a for a in sim._actions}
        unknown = sorted(set(values) - set(actions) - {"config", "help"})
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
        sim.set_defaults(**values)
        args = parser.parse_args(argv)
        for dest in values:
            choices = actions[dest].choices
            if choices is not None and getattr(args, dest) not in choices:
                raise UsageError(f"config value {dest}={values[dest]!r} not in {list(choices)}")
    return args


def _load(args):
    return ingest_csv(args.input, args.categorical, args.response)


def _write_lines(path, lines):
    text = "".join(f"{v}\n" for v in lines)
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_subsample(args) -> int:
    data = _load(args)
    if args.n < 1:
        raise UsageError(f"--n must be positive, got {args.n}")
    if args.n > data.N:
        raise DataError(f"requested n={args.n} exceeds the {data.N} rows in {args.input}")
    threads = _threads(args.threads)
    _set_threads(threads)
    config = SelectionConfig(args.n, args.seed, args.tie_rule, parallel=threads > 1)
    start = time.perf_counter()
    if args.method == "balanced":
        if args.trace:
            with open(args.trace, "w", encoding="utf-8") as fh:
                sub = balanced_select(data, config, trace=fh, trace_f=True)
        else:
            sub = balanced_select(data, config)
    else:
        sub = uniform_select(data, config)
    elapsed = time.perf_counter() - start

    _write_lines(args.output, sub.indices.tolist())
    if args.subsample_csv:
        write_csv(data, args.subsample_csv, sub.indices)
    if args.report:
        report = {
            "command": "subsample",
            "config": {
                "input": str(args.input), "categorical": list(data.names),
                "response": args.response, "n": args.n, "N": data.N, "q": list(data.spec.q),
                "method": args.method, "seed": args.seed, "tie_rule": args.tie_rule,
                "threads": threads,
            },
            "f": f_of(sub, data.spec),
            "oa": is_orthogonal_array(sub, data.spec),
            "seconds": elapsed,
        }
        Path(args.report).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def _read_indices(path, N) -> np.ndarray:
    try:
        lines = Path(path).read_text(encoding="utf-8").split()
    except OSError as exc:
        raise DataError(f"cannot read indices file: {exc}") from None
    if not lines:
        raise DataError(f"indices file {path} is empty")
    try:
        idx = np.array([int(v) for v in lines], dtype=np.int64)
    except ValueError:
        raise DataError(f"indices file {path} has a non-integer entry") from None
    bad = idx[(idx < 0) | (idx >= N)]
    if bad.size:
        raise DataError(f"index {int(bad[0])} out of range for {N} rows")
    if np.unique(idx).size != idx.size:
        raise DataError(f"indices file {path} repeats an index")
    return idx


def cmd_inspect(args) -> int:
    data = _load(args)
    idx = np.arange(data.N) if args.indices is None else _read_indices(args.indices, data.N)
    sub = Subsample.from_dataset(data, idx)
    out = diagnostics(sub.rows, data.spec, candidates=data.levels, cap=args.domain_cap)
    text = json.dumps(out, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.reps < 1:
        raise UsageError(f"--reps must be at least 1, got {args.reps}")
    if args.n is None:
        raise UsageError("--n is required")
    data = None
    if args.input:
        data = _load(args)
        spec, N = data.spec, data.N
    else:
        if args.case is None:
            raise UsageError("one of --case or --input is required")
        if args.N is None:
            raise UsageError("--N is required with --case")
        if (args.q is None) == (args.p is None):
            raise UsageError("give exactly one of --q or --p")
        try:
            spec = LevelSpec(tuple(args.q)) if args.q is not None else increasing_levels(args.p)
        except DataError as exc:
            raise UsageError(str(exc)) from None
        N = args.N
    unknown = [m for m in args.methods if m not in ("balanced", "uniform")]
    if unknown or not args.methods:
        raise UsageError(f"--methods must list balanced and/or uniform, got {args.methods}")
    if not 1 <= args.n <= N:
        raise DataError(f"requested n={args.n} exceeds N={N}")
    threads = _threads(args.threads)
    _set_threads(1)
    config = ExperimentConfig(
        spec=spec, N=N, n=args.n, reps=args.reps, case=args.case, methods=tuple(args.methods),
        model=ResponseModel.ones(spec, sigma=args.sigma), seed=args.seed,
        wspe_mode=args.wspe, data=data, threads=threads, domain_cap=args.domain_cap,
        tie_rule=args.tie_rule,
    )
    report = run_experiment(config)
    if data is not None:
        report.config["input"] = str(args.input)
        report.config["categorical"] = list(data.names)
        report.config["response"] = args.response
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    report.write_json(out / "report.json")
    report.write_csv(out / "records.csv")
    for line in report.summary_lines():
        print(line)
    return EXIT_SINGULAR if report.all_singular else EXIT_OK


COMMANDS = {"subsample": cmd_subsample, "inspect": cmd_inspect, "simulate": cmd_simulate}


def main(argv=None) -> int:
    try:
        args = parse_args(sys.argv[1:] if argv is None else argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
