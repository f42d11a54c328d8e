"""Command-line front end: ``xcalc typecheck|run|simulate|trace-check|snapshot``.

Exit codes: 0 on success, 1 on a domain error (type error, sensor error,
axiom violation, bad config), 2 on a usage error or unreadable input.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import ValidationError

from .device import Round, TreeFormatError, deserialize_tree, serialize_tree
from .errors import XCRuntimeError
from .literals import Con
from .network import (
    SimulationError,
    Simulator,
    TraceFormatError,
    cross_device_precursors,
    load_config,
    position_at,
    read_trace_csv,
    snapshot,
    snapshot_csv,
    stabilisation_time,
    validate_trace,
)
from .nvalue import NValue, lift
from .syntax import DesugarError, LexError, ParseError, compile_source, parse_literal
from .typesys import XCTypeError, check_program

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2
SOURCE_ERRORS = (LexError, ParseError, DesugarError, XCTypeError)


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _compile(path: str):
    prog = compile_source(_read(path), path)
    types = check_program(prog.expr)
    return prog, types


def _sensor_flag(text: str) -> tuple[str, object]:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise UsageError(f"--sensor expects name=literal, got {text!r}")
    try:
        return name, parse_literal(value)
    except (LexError, ParseError) as exc:
        raise UsageError(f"--sensor {name}: {exc}") from None


def _neighbour_tree(path: str) -> tuple[int, object]:
    lines = _read(path).splitlines()
    if len(lines) < 2 or not lines[0].strip().isdigit():
        raise UsageError(f"{path}: expected a device id line followed by a serialized tree")
    try:
        return int(lines[0]), deserialize_tree(lines[1])
    except TreeFormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


# subcommands


def cmd_typecheck(args) -> int:
    _, types = _compile(args.file)
    for line in types.lines():
        print(line)
    return EXIT_OK


def cmd_run(args) -> int:
    prog, _ = _compile(args.file)
    fixed = dict(_sensor_flag(s) for s in args.sensor)
    neighbours = dict(_neighbour_tree(p) for p in args.neighbour_tree)
    me = args.device
    own = None
    for r in range(1, args.rounds + 1):
        theta = {d: t for d, t in neighbours.items() if d != me}
        if own is not None:
            theta[me] = own
        sigma = {
            "time": lift(float(r)),
            "gps": lift(Con("Pair", (0.0, 0.0))),
            "senseDist": NValue(float("inf"), {me: 0.0, **{d: 1.0 for d in theta if d != me}}),
        }
        sigma.update({k: lift(v) for k, v in fixed.items()})
        w, own = Round(me, sigma, budget=args.budget).run(prog.expr, theta)
        print(w.render())
    if args.save_tree and own is not None:
        Path(args.save_tree).write_text(f"{me}\n{serialize_tree(own)}\n")
    return EXIT_OK


def _simulate_one(cfg, prog, out: str) -> None:
    sim = Simulator(cfg, prog)
    trace = sim.run()
    final = snapshot(trace.events, cfg.end_time)
    pos = {rt.id: rt.pos for rt in sim.devices}
    Path(f"{out}.trace.csv").write_text(trace.to_csv())
    meta = trace.meta()
    Path(f"{out}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    Path(f"{out}.snapshot.csv").write_text(snapshot_csv(final, pos.__getitem__))
    aborted = sum(1 for e in trace.events if e.aborted)
    stable = stabilisation_time(trace.events, cfg.period, cfg.end_time)
    print(f"seed {cfg.seed}: {len(trace.events)} events, {aborted} aborted, "
          f"{cross_device_precursors(trace.events)} cross-device precursors")
    if stable is None:
        print("stabilisation: not detected")
    else:
        print(f"stabilisation: t={stable:g} (round {round(stable / cfg.period)})")
    print(f"wrote {out}.trace.csv, {out}.meta.json, {out}.snapshot.csv")


def _seed_range(text: str) -> list[int]:
    lo, sep, hi = text.partition("..")
    try:
        seeds = list(range(int(lo), int(hi) + 1)) if sep else [int(text)]
    except ValueError:
        raise UsageError(f"--seeds expects a..b, got {text!r}") from None
    if not seeds:
        raise UsageError(f"--seeds range {text!r} is empty")
    return seeds


def cmd_simulate(args) -> int:
    if not Path(args.config).exists():
        raise UsageError(f"cannot read {args.config}")
    cfg = load_config(args.config)
    if not Path(cfg.program).exists():
        raise SimulationError(f"config names a missing program: {cfg.program}")
    prog, _ = _compile(cfg.program)
    if args.seeds:
        for s in _seed_range(args.seeds):
            _simulate_one(cfg.model_copy(update={"seed": s}), prog, f"{args.out}.seed{s}")
    else:
        if args.seed is not None:
            cfg = cfg.model_copy(update={"seed": args.seed})
        _simulate_one(cfg, prog, args.out)
    return EXIT_OK


def _load_trace(path: str):
    try:
        return read_trace_csv(_read(path))
    except TraceFormatError as exc:
        raise UsageError(f"{path}: malformed trace: {exc}") from None


def cmd_trace_check(args) -> int:
    events = _load_trace(args.trace)
    report = validate_trace(events)
    for v in report.violations:
        print(f"violation {v}")
    status = "ok" if report.ok else "FAILED"
    print(f"{status}: {report.events} events, {len(report.violations)} violations")
    return EXIT_OK if report.ok else EXIT_DOMAIN


def _meta_for(trace_path: str) -> Optional[dict]:
    p = Path(trace_path)
    name = p.name[: -len(".trace.csv")] if p.name.endswith(".trace.csv") else p.stem
    meta = p.with_name(f"{name}.meta.json")
    return json.loads(meta.read_text()) if meta.exists() else None


def cmd_snapshot(args) -> int:
    events = _load_trace(args.trace)
    snap = snapshot(events, args.time)
    meta = _meta_for(args.trace)

    def where(d):
        return position_at(meta, d, args.time) if meta else (float("nan"), float("nan"))

    text = snapshot_csv(snap, where)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xcalc", description="Type-check, run and simulate XC programs.")
    sub = p.add_subparsers(dest="command", required=True)

    tc = sub.add_parser("typecheck", help="print the type of every definition")
    tc.add_argument("file")
    tc.set_defaults(func=cmd_typecheck)

    run = sub.add_parser("run", help="run rounds of a single device")
    run.add_argument("file")
    run.add_argument("--rounds", type=int, default=1)
    run.add_argument("--sensor", action="append", default=[], metavar="NAME=LITERAL")
    run.add_argument("--neighbour-tree", action="append", default=[], metavar="FILE")
    run.add_argument("--device", type=int, default=0)
    run.add_argument("--budget", type=int, default=10**6)
    run.add_argument("--save-tree", metavar="FILE")
    run.set_defaults(func=cmd_run)

    sim = sub.add_parser("simulate", help="simulate a network from a JSON config")
    sim.add_argument("config")
    sim.add_argument("--seed", type=int)
    sim.add_argument("--seeds", metavar="A..B")
    sim.add_argument("--out", required=True, metavar="PREFIX")
    sim.set_defaults(func=cmd_simulate)

    chk = sub.add_parser("trace-check", help="validate the event-structure axioms of a trace")
    chk.add_argument("trace")
    chk.set_defaults(func=cmd_trace_check)

    snap = sub.add_parser("snapshot", help="latest value per device at a time")
    snap.add_argument("trace")
    snap.add_argument("--time", type=float, required=True)
    snap.add_argument("--out")
    snap.set_defaults(func=cmd_snapshot)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "rounds", 1) < 0:
        print("xcalc: error: --rounds must be non-negative", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"xcalc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SOURCE_ERRORS as exc:
        print(exc, file=sys.stderr)
        return EXIT_DOMAIN
    except (XCRuntimeError, SimulationError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ValidationError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except json.JSONDecodeError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
