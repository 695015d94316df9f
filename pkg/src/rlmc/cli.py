"""Command-line runner.

    rlmc <experiment> [--config PATH] [--seed N] [--out PATH] [--workers N]
    rlmc run --config PATH            # experiment named by the config's ``experiment`` key

Writes the CSV body to ``--out`` and a ``key = value`` summary (fitted slopes,
check flags) next to it as ``<out>.summary``. Exit status is 0 iff every pass
flag is true, 1 if any is false, 2 on invalid input.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import logging
import sys
from pathlib import Path

from . import config as _config
from .experiments import ExperimentResult, make_config, run_experiment
from .kernels import BACKEND

log = logging.getLogger("rlmc")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    return f"{float(v):.16e}"


def body_rows(result: ExperimentResult):
    """Header and rows of the CSV body."""
    if result.table is not None:
        header, rows = result.table
        return list(header), [[_fmt(v) for v in row] for row in rows]
    pcols = []
    for r in result.records:
        for k in r.params:
            if k not in pcols:
                pcols.append(k)
    header = ["experiment"] + pcols + ["statistic", "value", "std_error", "pass"]
    rows = []
    for r in result.records:
        rows.append([r.experiment] + [_fmt(r.params.get(k)) for k in pcols]
                    + [r.statistic, _fmt(r.value), _fmt(r.std_error), _fmt(r.passed)])
    return header, rows


def write_csv(result: ExperimentResult, path) -> None:
    header, rows = body_rows(result)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def summary_lines(result: ExperimentResult) -> list:
    lines = [f"experiment = {result.experiment}"]
    for name, fit in result.fits.items():
        for attr in ("slope", "intercept", "r_squared", "standard_error"):
            lines.append(f"fit.{name}.{attr} = {_fmt(getattr(fit, attr))}")
    for name, ok in result.checks.items():
        lines.append(f"check.{name} = {_fmt(bool(ok))}")
    failed = [r for r in result.records if r.passed is False]
    lines.append(f"records.failed = {len(failed)}")
    lines.append(f"all_pass = {_fmt(result.all_pass)}")
    return lines


def write_summary(result: ExperimentResult, path, seed, workers) -> None:
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    with open(path, "w") as fh:
        fh.write(f"# generated {stamp}; backend {BACKEND}; workers {workers}\n")
        fh.write(f"seed = {seed}\n")
        for line in summary_lines(result):
            fh.write(line + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rlmc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="flat key = value config file")
        sp.add_argument("--seed", type=int, help="root 64-bit seed (overrides config)")
        sp.add_argument("--out", type=Path, help="CSV output path")
        sp.add_argument("--workers", type=int, default=1, help="worker processes")

    for name in _config.EXPERIMENTS:
        common(sub.add_parser(name, help=f"run the {name} experiment"))
    common(sub.add_parser("run", help="run the experiment named in --config"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        values = _config.load(args.config) if args.config else {}
        experiment = args.command
        if experiment == "run":
            if "experiment" not in values:
                raise _config.ConfigError("config must set 'experiment' for 'rlmc run'")
            experiment = values["experiment"]
        if args.seed is not None:
            values["seed"] = str(args.seed)
        cfg = make_config(experiment, values)
        seed = cfg.seed()
        out = args.out or Path(cfg.get_str("output.path", f"results/{experiment}.csv"))
        log.info("running %s (seed %d, %d workers, %s kernels)", experiment, seed,
                 args.workers, BACKEND)
        result = run_experiment(cfg, args.workers)
    except _config.ConfigError as exc:
        print(f"rlmc: config error: {exc}", file=sys.stderr)
        return 2

    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(result, out)
    summary = out.with_name(out.name + ".summary")
    write_summary(result, summary, seed, args.workers)
    for line in summary_lines(result):
        print(line)
    print(f"wrote {out} and {summary}")
    return 0 if result.all_pass else 1


if __name__ == "__main__":
    sys.exit(main())
