"""Command line: ``ogan run|compare|monitor|curve``.

Exit codes: 0 success, 1 configuration or input error, 2 SUT failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .engine import ConfigError
from .experiment import compare, load_config, load_report, report_data, run_experiment
from .stl import SignalRange, StlError, Trace, eval_boolean, eval_robustness, parse_stl
from .survival import kaplan_meier
from .sut import SutError

EXIT_OK, EXIT_CONFIG, EXIT_SUT = 0, 1, 2
log = logging.getLogger("ogan")


def _fmt(x, digits=2):
    return "--" if x is None else f"{x:.{digits}f}"


def cmd_run(args) -> int:
    config = load_config(args.config)
    if args.replicas is not None:
        config = replace(config, replicas=args.replicas)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.out is not None:
        config = replace(config, out=args.out)

    def progress(rec):
        if "error" in rec:
            log.warning("replica %d failed: %s", rec["replica"], rec["error"])
        else:
            log.info("replica %d: %s after %d executions", rec["replica"],
                     "falsified" if rec["falsified"] else "censored", rec["executions"])

    report = run_experiment(config, workers=args.workers, progress=progress)
    ci = report["ci"] or [None, None]
    print(f"{report['algorithm']} on {report['sut']}: FR {_fmt(report['fr'])} "
          f"[{_fmt(ci[0])}, {_fmt(ci[1])}]  mean executions {_fmt(report['mean_executions'], 1)}")
    print(f"outputs in {config.out}")
    return EXIT_SUT if report["errors"] else EXIT_OK


def cmd_compare(args) -> int:
    a, b = load_report(args.report_a), load_report(args.report_b)
    try:
        result = compare(a, b, args.csv)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result.pop("csv")
    print(json.dumps(result, indent=2))
    return EXIT_OK


def _parse_ranges(items: list[str]) -> dict[str, SignalRange]:
    out = {}
    for item in items or []:
        try:
            name, bounds = item.split("=", 1)
            lo, hi = (float(x) for x in bounds.split(","))
        except ValueError as exc:
            raise ConfigError(f"range must look like name=lo,hi, got {item!r}") from exc
        out[name.strip()] = SignalRange(lo, hi)
    return out


def cmd_monitor(args) -> int:
    phi = parse_stl(Path(args.stl_file).read_text())
    trace = Trace.from_csv(Path(args.trace))
    ranges = _parse_ranges(args.range)
    for name in trace.names:
        if name not in ranges:
            lo, hi = float(trace[name].min()), float(trace[name].max())
            # observed extent stands in for an undeclared range
            ranges[name] = SignalRange(lo, hi if hi > lo else lo + 1.0)
    res = eval_robustness(phi, trace, ranges)
    print(json.dumps({
        "satisfied": eval_boolean(phi, trace),
        "robustness": res.value,
        "effective_range": [res.effective_lo, res.effective_hi],
        "scaled": res.scaled,
    }, indent=2))
    return EXIT_OK


def cmd_curve(args) -> int:
    text = kaplan_meier(report_data(load_report(args.report))).to_csv(args.out)
    if args.out is None:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ogan", description="Requirement falsification experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the replicas described by a TOML config")
    p.add_argument("config")
    p.add_argument("--replicas", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="log-rank comparison of two reports")
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.add_argument("--csv", help="write the overlaid survival curves here")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("monitor", help="robustness of a trace CSV")
    p.add_argument("stl_file")
    p.add_argument("trace")
    p.add_argument("--range", action="append", metavar="NAME=LO,HI")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("curve", help="Kaplan-Meier curve of a report as CSV")
    p.add_argument("report")
    p.add_argument("--out")
    p.set_defaults(func=cmd_curve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except SutError as exc:
        print(f"error: SUT failure: {exc}", file=sys.stderr)
        return EXIT_SUT
    except (ConfigError, StlError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
