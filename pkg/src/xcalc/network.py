"""Deterministic discrete-event simulation of a network of XC devices.

Devices fire asynchronously (period plus seeded jitter). A firing consumes
the non-expired messages in the device's buffer, evaluates the program once,
keeps its own value-tree as a message to itself and broadcasts it to every
device within the communication radius. Messages arrive instantly but only
become visible to firings strictly later than the send, and each recipient
drops a message independently with the configured probability.
"""
from __future__ import annotations

import csv
import hashlib
import heapq
import io
import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .device import DEFAULT_STEP_BUDGET, Round
from .errors import StepBudgetExceeded
from .syntax.lexer import LexError
from .literals import Con
from .nvalue import NValue, lift
from .syntax.desugar import CompiledProgram, compile_source
from .syntax.parser import ParseError, parse_literal, parse_nvalue

INF = float("inf")
LiteralSpec = Union[bool, float, str]


# configuration


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSpec(_Strict):
    cols: int = Field(gt=0)
    rows: int = Field(gt=0)
    spacing: float = Field(default=1.0, gt=0)


class RandomSpec(_Strict):
    count: int = Field(gt=0)
    width: float = Field(gt=0)
    height: float = Field(gt=0)


class SensorSpec(_Strict):
    default: LiteralSpec
    devices: dict[int, LiteralSpec] = {}


class Waypoint(_Strict):
    device: int = Field(ge=0)
    time: float = Field(ge=0)
    x: float
    y: float


class DeviceEvent(_Strict):
    device: int = Field(ge=0)
    time: float = Field(ge=0)


class Failure(_Strict):
    device: int = Field(ge=0)
    start: float = Field(ge=0)
    end: Optional[float] = None


class NetworkConfig(_Strict):
    """Network description; exactly one of ``positions``, ``grid``, ``random`` places devices."""

    program: str
    positions: Optional[list[tuple[float, float]]] = None
    grid: Optional[GridSpec] = None
    random: Optional[RandomSpec] = None
    radius: float = Field(gt=0)
    period: float = Field(default=1.0, gt=0)
    jitter: float = Field(default=0.0, ge=0)
    drop: float = Field(default=0.0, ge=0, le=1)
    ttl: float = Field(default=2.0, gt=0)
    end_time: float = Field(ge=0)
    seed: int = 0
    sensors: dict[str, SensorSpec] = {}
    mobility: list[Waypoint] = []
    reboots: list[DeviceEvent] = []
    failures: list[Failure] = []
    step_budget: int = Field(default=DEFAULT_STEP_BUDGET, gt=0)

    @model_validator(mode="after")
    def _check(self):
        placements = [p for p in (self.positions, self.grid, self.random) if p is not None]
        if len(placements) != 1:
            raise ValueError("give exactly one of positions, grid, random")
        if self.jitter >= self.period:
            raise ValueError("jitter must be smaller than period")
        n = self.device_count
        for item in [*self.mobility, *self.reboots, *self.failures]:
            if item.device >= n:
                raise ValueError(f"device {item.device} does not exist (network has {n})")
        for name, spec in self.sensors.items():
            for d in spec.devices:
                if d >= n:
                    raise ValueError(f"sensor {name!r}: device {d} does not exist")
            for v in [spec.default, *spec.devices.values()]:
                try:
                    _literal(v)
                except (LexError, ParseError) as exc:
                    raise ValueError(f"sensor {name!r}: {exc}") from None
        return self

    @property
    def device_count(self) -> int:
        if self.positions is not None:
            return len(self.positions)
        if self.grid is not None:
            return self.grid.cols * self.grid.rows
        return self.random.count


def _literal(v: LiteralSpec):
    if isinstance(v, bool):
        return v
    if isinstance(v, (int, float)):
        return float(v)
    return parse_literal(v)


def load_config(path: Union[str, Path]) -> NetworkConfig:
    """Read a JSON config; a relative program path is resolved against the config's folder."""
    path = Path(path)
    data = json.loads(path.read_text())
    cfg = NetworkConfig.model_validate(data)
    prog = Path(cfg.program)
    if not prog.is_absolute():
        candidate = path.parent / prog
        if candidate.exists() or not prog.exists():
            prog = candidate
    return cfg.model_copy(update={"program": str(prog)})


def initial_positions(cfg: NetworkConfig, rng: random.Random) -> list[tuple[float, float]]:
    if cfg.positions is not None:
        return [(float(x), float(y)) for x, y in cfg.positions]
    if cfg.grid is not None:
        g = cfg.grid
        return [((k % g.cols) * g.spacing, (k // g.cols) * g.spacing) for k in range(g.cols * g.rows)]
    r = cfg.random
    return [(rng.uniform(0, r.width), rng.uniform(0, r.height)) for _ in range(r.count)]


# runtime state and trace


@dataclass
class BufferEntry:
    tree: object
    recv_time: float
    sender_pos: tuple
    event_id: str
    # the entry this one replaced, kept while the replacement is not yet visible
    older: Optional["BufferEntry"] = None

    def visible_at(self, t: float) -> Optional["BufferEntry"]:
        entry = self
        while entry is not None and not entry.recv_time < t:
            entry = entry.older
        return entry


@dataclass
class DeviceRuntime:
    id: int
    pos: tuple
    next_fire: float
    buffer: dict = field(default_factory=dict)
    alive: bool = True
    round: int = 0


@dataclass
class EventRecord:
    event_id: str
    device: int
    time: float
    round: int
    precursors: tuple
    aborted: bool
    result: Optional[NValue]

    @property
    def result_text(self) -> str:
        return "" if self.result is None else self.result.render()


@dataclass
class EventTrace:
    events: list
    config: dict
    program_digest: str
    positions: dict

    def to_csv(self) -> str:
        return trace_to_csv(self.events)

    def meta(self) -> dict:
        return {
            "config": self.config,
            "program_digest": self.program_digest,
            "positions": {str(d): list(p) for d, p in sorted(self.positions.items())},
            "events": len(self.events),
        }


TRACE_HEADER = ["event_id", "device", "time", "round", "precursors", "aborted", "result"]


def _fmt_time(t: float) -> str:
    return repr(float(t))


def trace_to_csv(events: Iterable[EventRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for ev in events:
        w.writerow([
            ev.event_id, ev.device, _fmt_time(ev.time), ev.round,
            ";".join(ev.precursors), "1" if ev.aborted else "0", ev.result_text,
        ])
    return buf.getvalue()


class TraceFormatError(ValueError):
    pass


def read_trace_csv(text: str, parse_results: bool = True) -> list[EventRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != TRACE_HEADER:
        raise TraceFormatError(f"expected header {','.join(TRACE_HEADER)}")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(TRACE_HEADER):
            raise TraceFormatError(f"line {lineno}: expected {len(TRACE_HEADER)} columns, got {len(row)}")
        eid, dev, t, rnd, prec, aborted, result = row
        try:
            value = parse_nvalue(result) if (parse_results and result) else None
            out.append(EventRecord(
                eid, int(dev), float(t), int(rnd),
                tuple(p for p in prec.split(";") if p), aborted == "1", value,
            ))
        except Exception as exc:
            raise TraceFormatError(f"line {lineno}: {exc}") from None
    return out


# simulation


_CONTROL, _FIRE = 0, 1


class SimulationError(Exception):
    pass


class Simulator:
    def __init__(
        self,
        config: NetworkConfig,
        program: Optional[CompiledProgram] = None,
        *,
        tracer: Optional[Callable] = None,
        check_alignment: bool = False,
    ):
        self.config = config
        if program is None:
            path = Path(config.program)
            program = compile_source(path.read_text(), str(path))
            self.source_text = path.read_text()
        else:
            self.source_text = None
        self.program = program
        self.expr = program.expr
        self.tracer = tracer
        self.check_alignment = check_alignment
        self.rng = random.Random(config.seed)
        self.time = 0.0
        self.events: list[EventRecord] = []
        self.queue: list = []
        self._seq = 0

        positions = initial_positions(config, self.rng)
        self.initial_positions = {d: p for d, p in enumerate(positions)}
        self.devices = []
        for d, p in enumerate(positions):
            first = config.period + self._jitter()
            rt = DeviceRuntime(d, p, first)
            self.devices.append(rt)
            self._push(first, _FIRE, d, None)
        for m in config.mobility:
            self._push(m.time, _CONTROL, m.device, ("move", (m.x, m.y)))
        for r in config.reboots:
            self._push(r.time, _CONTROL, r.device, ("reboot", None))
        for f in config.failures:
            self._push(f.start, _CONTROL, f.device, ("fail", None))
            if f.end is not None:
                self._push(f.end, _CONTROL, f.device, ("recover", None))
        self._sensor_cache = [self._static_sensors(d) for d in range(len(self.devices))]
        self._adjacency: Optional[list] = None

    # setup helpers

    def _jitter(self) -> float:
        j = self.config.jitter
        return self.rng.uniform(-j, j) if j > 0 else 0.0

    def _push(self, t: float, kind: int, device: int, payload) -> None:
        self._seq += 1
        heapq.heappush(self.queue, (t, kind, device, self._seq, payload))

    def _static_sensors(self, d: int) -> dict:
        out = {}
        for name, spec in self.config.sensors.items():
            v = spec.devices.get(d, spec.default)
            out[name] = lift(_literal(v))
        return out

    def neighbours(self, d: int) -> list[int]:
        if self._adjacency is None:
            r2 = self.config.radius ** 2
            pos = [rt.pos for rt in self.devices]
            adj = []
            for i, (xi, yi) in enumerate(pos):
                adj.append([j for j, (xj, yj) in enumerate(pos)
                            if j != i and (xi - xj) ** 2 + (yi - yj) ** 2 <= r2])
            self._adjacency = adj
        return self._adjacency[d]

    # main loop

    def run_until(self, end: float) -> list[EventRecord]:
        """Process every queued event with time <= ``end``; returns the new records."""
        start = len(self.events)
        while self.queue and self.queue[0][0] <= end:
            t, kind, d, _, payload = heapq.heappop(self.queue)
            self.time = t
            if kind == _CONTROL:
                self._control(d, payload)
            else:
                self._fire(d, t)
        self.time = max(self.time, end)
        return self.events[start:]

    def run(self) -> EventTrace:
        self.run_until(self.config.end_time)
        return self.trace()

    def trace(self) -> EventTrace:
        digest_src = self.source_text if self.source_text is not None else repr(self.program.expr)
        return EventTrace(
            list(self.events),
            self.config.model_dump(mode="json"),
            hashlib.sha256(digest_src.encode()).hexdigest(),
            dict(self.initial_positions),
        )

    def _control(self, d: int, payload) -> None:
        kind, arg = payload
        rt = self.devices[d]
        if kind == "move":
            rt.pos = arg
            self._adjacency = None
        elif kind == "reboot":
            rt.buffer.clear()
        elif kind == "fail":
            rt.alive = False
        elif kind == "recover":
            rt.alive = True

    def sensors_for(self, rt: DeviceRuntime, t: float, visible: list) -> dict:
        sigma = dict(self._sensor_cache[rt.id])
        sigma["time"] = lift(float(t))
        sigma["gps"] = lift(Con("Pair", (float(rt.pos[0]), float(rt.pos[1]))))
        x, y = rt.pos
        dist = {rt.id: 0.0}
        for k, entry in visible:
            if k != rt.id:
                sx, sy = entry.sender_pos
                dist[k] = math.hypot(sx - x, sy - y)
        sigma["senseDist"] = NValue(INF, dist)
        return sigma

    def _fire(self, d: int, t: float) -> None:
        cfg = self.config
        rt = self.devices[d]
        if rt.alive:
            self._execute(rt, t)
        nxt = t + cfg.period + self._jitter()
        rt.next_fire = nxt
        self._push(nxt, _FIRE, d, None)

    def _execute(self, rt: DeviceRuntime, t: float) -> None:
        cfg = self.config
        buf = rt.buffer
        visible = []
        for k in sorted(buf):
            entry = buf[k]
            seen = entry.visible_at(t)
            if seen is not None and t - seen.recv_time > cfg.ttl:
                if entry is seen:
                    del buf[k]
                else:
                    entry.older = None
                seen = None
            if seen is not None:
                visible.append((k, seen))
        theta = {k: e.tree for k, e in visible}
        precursors = tuple(e.event_id for _, e in visible)
        rt.round += 1
        eid = f"{rt.id}:{rt.round}"
        sigma = self.sensors_for(rt, t, visible)
        evaluator = Round(
            rt.id, sigma, budget=cfg.step_budget, tracer=self.tracer, check_alignment=self.check_alignment
        )
        if self.tracer is not None:
            self.current_event = eid
        try:
            w, tree = evaluator.run(self.expr, theta)
        except StepBudgetExceeded:
            self.events.append(EventRecord(eid, rt.id, t, rt.round, precursors, True, None))
            return
        pos = rt.pos
        _deliver(buf, rt.id, BufferEntry(tree, t, pos, eid))
        for other in self.neighbours(rt.id):
            ort = self.devices[other]
            if not ort.alive:
                continue
            if cfg.drop > 0 and self.rng.random() < cfg.drop:
                continue
            _deliver(ort.buffer, rt.id, BufferEntry(tree, t, pos, eid))
        self.events.append(EventRecord(eid, rt.id, t, rt.round, precursors, False, w))


def _deliver(buf: dict, sender: int, entry: BufferEntry) -> None:
    """Replace the sender's entry; the old one stays reachable only until the new one is visible."""
    prev = buf.get(sender)
    if prev is not None:
        entry.older = prev if prev.recv_time < entry.recv_time else prev.older
    buf[sender] = entry


def init(config: NetworkConfig, program: Optional[CompiledProgram] = None) -> Simulator:
    return Simulator(config, program)


def run(config: NetworkConfig, program: Optional[CompiledProgram] = None, **options) -> EventTrace:
    return Simulator(config, program, **options).run()


# analysis


def snapshot(events: Iterable[EventRecord], time: float) -> dict[int, NValue]:
    """Latest non-aborted result per device at or before ``time``."""
    out: dict[int, NValue] = {}
    for ev in events:
        if ev.time <= time and not ev.aborted and ev.result is not None:
            out[ev.device] = ev.result
    return dict(sorted(out.items()))


def _snapshots_on_grid(events: list, period: float, end: float) -> list:
    ordered = sorted(events, key=lambda e: (e.time, e.device))
    current: dict = {}
    out = []
    i = 0
    k = 1
    while k * period <= end + 1e-9:
        t = k * period
        while i < len(ordered) and ordered[i].time <= t + 1e-9:
            ev = ordered[i]
            if not ev.aborted and ev.result is not None:
                current[ev.device] = ev.result
            i += 1
        out.append((t, dict(current)))
        k += 1
    return out


def stabilisation_time(events: list, period: float, end: float, min_periods: int = 3) -> Optional[float]:
    """First period boundary after which the snapshot never changes, if followed by ``min_periods`` more."""
    grid = _snapshots_on_grid(events, period, end)
    if not grid:
        return None
    final = grid[-1][1]
    if not final:
        return None
    stable_from = None
    for t, snap in reversed(grid):
        if snap != final:
            break
        stable_from = t
    if stable_from is None or grid[-1][0] - stable_from < min_periods * period - 1e-9:
        return None
    return stable_from


def cross_device_precursors(events: Iterable[EventRecord]) -> int:
    n = 0
    for ev in events:
        for p in ev.precursors:
            if int(p.split(":")[0]) != ev.device:
                n += 1
    return n


@dataclass
class Violation:
    axiom: str
    event_id: str
    detail: str

    def __str__(self) -> str:
        return f"{self.axiom}: {self.event_id}: {self.detail}"


@dataclass
class TraceReport:
    events: int
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    def axioms(self) -> set:
        return {v.axiom for v in self.violations}


def validate_trace(events: list) -> TraceReport:
    """Check the event-structure axioms on a recorded trace."""
    violations = []
    by_id = {}
    for ev in events:
        if ev.event_id in by_id:
            violations.append(Violation("unique-event-ids", ev.event_id, "event id appears twice"))
        by_id[ev.event_id] = ev

    for ev in events:
        seen_devices: dict = {}
        for p in ev.precursors:
            src = by_id.get(p)
            if src is None:
                violations.append(Violation("local-finiteness", ev.event_id, f"precursor {p} is not in the trace"))
                continue
            if src.device in seen_devices:
                violations.append(Violation(
                    "distinct-device-precursors", ev.event_id,
                    f"precursors {seen_devices[src.device]} and {p} are both on device {src.device}",
                ))
            else:
                seen_devices[src.device] = p
            if p != ev.event_id and not src.time < ev.time:
                violations.append(Violation(
                    "precursor-order", ev.event_id, f"precursor {p} at {src.time} is not earlier than {ev.time}"
                ))

    # acyclicity: Kahn's algorithm over the messaging relation
    indeg = {eid: 0 for eid in by_id}
    succ: dict = {eid: [] for eid in by_id}
    for ev in by_id.values():
        for p in ev.precursors:
            if p in by_id:
                succ[p].append(ev.event_id)
                indeg[ev.event_id] += 1
    ready = [eid for eid, n in indeg.items() if n == 0]
    done = 0
    while ready:
        eid = ready.pop()
        done += 1
        for s in succ[eid]:
            indeg[s] -= 1
            if indeg[s] == 0:
                ready.append(s)
    if done < len(by_id):
        for eid, n in sorted(indeg.items()):
            if n > 0:
                violations.append(Violation("acyclicity", eid, "event lies on or after a cycle of precursors"))

    last: dict = {}
    for ev in events:
        prev = last.get(ev.device)
        if prev is not None and not (ev.time > prev.time and ev.round > prev.round):
            violations.append(Violation(
                "monotone-time", ev.event_id, f"follows {prev.event_id} on device {ev.device} without advancing"
            ))
        last[ev.device] = ev
    return TraceReport(len(events), violations)


def position_at(meta: dict, device: int, time: float) -> tuple:
    pos = tuple(meta["positions"][str(device)])
    for m in sorted(meta["config"].get("mobility", []), key=lambda m: m["time"]):
        if m["device"] == device and m["time"] <= time:
            pos = (m["x"], m["y"])
    return pos


def snapshot_csv(snap: dict, positions: Callable[[int], tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["device", "x", "y", "value"])
    for d, v in sorted(snap.items()):
        x, y = positions(d)
        w.writerow([d, repr(float(x)), repr(float(y)), v.render()])
    return buf.getvalue()
