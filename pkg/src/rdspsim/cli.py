"""rdspsim command line.

Exit codes: 0 success, 1 usage error, 2 invalid scenario or input,
3 failure while running or writing results.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from . import campaign
from .engine import PROTOCOLS, ConfigurationError, EventTrace, run
from .metrics import compute, to_csv
from .model import Kind, MessageId
from .scenario import (ScenarioConfig, ScenarioError, builtin_campus, builtin_fig7,
                       dump_scenario, load_scenario)

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3
OUT_DIR_ENV = "RDSP_OUT_DIR"

# flag name -> RadioModel field
_RADIO_FLAGS = {
    "range_m": float, "bitrate_bps": float, "per_hop_proc_s": float,
    "csma_max_backoff_s": float, "frame_overhead_s": float,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _Failure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def parse_seeds(text: str) -> list[int]:
    """``1..5``, ``3`` or ``1,4,9``."""
    try:
        if ".." in text:
            lo, hi = (int(t) for t in text.split("..", 1))
            seeds = list(range(lo, hi + 1))
        else:
            seeds = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed list {text!r}") from None
    if not seeds:
        raise argparse.ArgumentTypeError("at least one seed is required")
    return seeds


def _add_scenario_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("scenario", nargs="?", help="scenario file")
    p.add_argument("--builtin-campus", action="store_true", help="use the built-in campus layout")
    group = p.add_argument_group("radio and timing")
    for name, kind in _RADIO_FLAGS.items():
        group.add_argument("--" + name.replace("_", "-"), type=kind, default=None, metavar="X")
    group.add_argument("--no-collision-loss", action="store_true",
                       help="deliver overlapping frames instead of destroying them")
    group.add_argument("--calibrated", action="store_true",
                       help="start from the calibration radio settings; explicit flags still win")
    group.add_argument("--timer-jitter", type=float, default=None, metavar="F",
                       help="fraction of each period periodic emissions are delayed by")


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_DIR_ENV) or ".")


def _scenario(args) -> ScenarioConfig:
    if args.builtin_campus and args.scenario:
        raise _Failure(EXIT_USAGE, "give either a scenario file or --builtin-campus, not both")
    if not args.builtin_campus and not args.scenario:
        raise _Failure(EXIT_USAGE, "a scenario file or --builtin-campus is required")
    try:
        config = builtin_campus() if args.builtin_campus else load_scenario(args.scenario)
        radio = dict(campaign.CALIBRATION) if args.calibrated else {}
        radio.update({k: getattr(args, k) for k in _RADIO_FLAGS if getattr(args, k) is not None})
        if args.no_collision_loss:
            radio["loss_on_collision"] = False
        if radio:
            config = config.with_radio(**radio)
        if args.timer_jitter is not None:
            config = replace(config, timer_jitter=args.timer_jitter)
        return config.validate()
    except FileNotFoundError as exc:
        raise _Failure(EXIT_INVALID, str(exc)) from None
    except ValueError as exc:
        raise _Failure(EXIT_INVALID, str(exc)) from None


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise _Failure(EXIT_RUNTIME, f"cannot write {path}: {exc.strerror or exc}") from None


def cmd_run(args) -> int:
    config = _scenario(args)
    path = args.path
    if path is not None:
        try:
            config = config.activate_path(path)
        except ScenarioError as exc:
            raise _Failure(EXIT_INVALID, str(exc)) from None
    try:
        trace = run(config, args.protocol, args.seed)
    except ConfigurationError as exc:
        raise _Failure(EXIT_INVALID, str(exc)) from None
    out = _out_dir(args)
    stem = f"{args.protocol}-{path or 'all'}-seed{args.seed}"
    trace_path = Path(args.trace) if args.trace else out / f"{stem}.trace"
    csv_path = Path(args.csv) if args.csv else out / f"{stem}.csv"
    _write(trace_path, trace.to_text())
    report = compute(trace, config, path, args.protocol)
    _write(csv_path, to_csv([report]))
    print(f"trace {trace_path} ({len(trace)} records, sha256 {trace.digest()[:16]})")
    print(f"metrics {csv_path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    config = _scenario(args)
    if not config.named_paths:
        raise _Failure(EXIT_INVALID, "scenario defines no paths to compare")
    out = _out_dir(args)
    # fail before the campaign rather than after it
    _write(out / "comparison.csv", "")
    result = campaign.run_campaign(config, args.seeds, jobs=args.jobs)
    _write(out / "comparison.csv", to_csv(result.ordered()))
    table = campaign.summary_table(result)
    _write(out / "summary.txt", table)
    sys.stdout.write(table)
    print(f"wrote {out / 'comparison.csv'} and {out / 'summary.txt'}")
    return EXIT_OK


def cmd_trace_fig7(args) -> int:
    config = builtin_fig7()
    trace = run(config, "rdsp", args.seed)
    ids = {}
    for rec in trace.select("assign"):
        ids[rec.node] = int(rec.fields()["dynamic_id"])
    for name, relays in config.named_paths:
        cells = ", ".join(f"{config.label(r)}={ids.get(r, -1)}" for r in relays)
        print(f"{name} branch ids (client side first): {cells}")
    presses = trace.select("press")
    if not presses:
        raise _Failure(EXIT_RUNTIME, "no request was issued")
    mid = MessageId.parse(presses[0].fields()["id"])
    for kind in (Kind.REQUEST, Kind.ACK):
        route = campaign.hop_route(trace, kind, mid)
        print(f"{kind.value} route: " + ", ".join(config.label(n) for n in route))
    return EXIT_OK


def cmd_export_campus(args) -> int:
    text = dump_scenario(builtin_campus())
    if args.output:
        _write(Path(args.output), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rdspsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="simulate one scenario under one protocol")
    _add_scenario_args(p)
    p.add_argument("--protocol", choices=PROTOCOLS, required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--path", help="activate only this named path")
    p.add_argument("--trace", help="trace output file")
    p.add_argument("--csv", help="metrics CSV output file")
    p.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV} or .)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="both protocols over every path and seed")
    _add_scenario_args(p)
    p.add_argument("--seeds", type=parse_seeds, default=parse_seeds("1..5"))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help=f"output directory (default ${OUT_DIR_ENV} or .)")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("trace-fig7", help="ID assignment and routes on the two-branch layout")
    p.add_argument("--seed", type=int, default=1)
    p.set_defaults(func=cmd_trace_fig7)

    p = sub.add_parser("export-campus", help="write the built-in campus scenario file")
    p.add_argument("output", nargs="?", help="file to write (default stdout)")
    p.set_defaults(func=cmd_export_campus)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("rdspsim: error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except _Failure as exc:
        print(f"rdspsim: error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigurationError, ScenarioError) as exc:
        print(f"rdspsim: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - report, do not dump a traceback on users
        print(f"rdspsim: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
