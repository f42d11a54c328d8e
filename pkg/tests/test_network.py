import json

import pytest
from pydantic import ValidationError

from xcalc.network import (
    EventRecord,
    NetworkConfig,
    Simulator,
    TraceFormatError,
    load_config,
    read_trace_csv,
    snapshot,
    stabilisation_time,
    trace_to_csv,
    validate_trace,
)
from xcalc.nvalue import lift
from xcalc.stdlib.corpus import load
from xcalc.syntax import compile_source

INF = float("inf")


def config(**fields):
    base = dict(program="inline", positions=[(0.0, 0.0), (1.0, 0.0)], radius=1.5, period=1.0, end_time=5.0)
    base.update(fields)
    return NetworkConfig(**base)


def simulate(source, **fields):
    return Simulator(config(**fields), compile_source(source)).run()


def results(trace, device):
    return [ev.result for ev in trace.events if ev.device == device]


def test_zero_jitter_fires_together_in_id_order():
    sim = Simulator(config(), compile_source("1"))
    assert [rt.next_fire for rt in sim.devices] == [1.0, 1.0]
    trace = sim.run()
    assert [ev.event_id for ev in trace.events[:2]] == ["0:1", "1:1"]


def test_seeded_init_is_reproducible():
    cfg = config(random={"count": 6, "width": 4.0, "height": 4.0}, positions=None, jitter=0.3, seed=42)
    a, b = Simulator(cfg, compile_source("1")), Simulator(cfg, compile_source("1"))
    assert a.initial_positions == b.initial_positions
    assert [d.next_fire for d in a.devices] == [d.next_fire for d in b.devices]


def test_grid_placement():
    sim = Simulator(config(positions=None, grid={"cols": 10, "rows": 10}), compile_source("1"))
    assert sim.devices[0].pos == (0.0, 0.0)
    assert sim.devices[23].pos == (3.0, 2.0)
    assert sim.devices[99].pos == (9.0, 9.0)


def test_isolated_device_has_infinite_distance():
    trace = Simulator(config(positions=[(0.0, 0.0)], sensors={"src": {"default": False}}), load("distanceTo").compile()).run()
    assert results(trace, 0) == [lift(INF)] * 5


def test_end_time_zero_gives_empty_trace():
    assert simulate("1", end_time=0.0).events == []


def test_snapshot_examples():
    trace = simulate("exchange(0, (o, n) => retsend n + 1)")
    assert snapshot(trace.events, 0.5) == {}
    snap = snapshot(trace.events, 3.0)
    assert set(snap) == {0, 1}
    assert snap[0].lookup(1) == 3.0 and snap[1].lookup(0) == 3.0


def test_stabilised_gradient_snapshot_is_stable():
    cfg = config(positions=None, grid={"cols": 4, "rows": 4}, end_time=20.0,
                 sensors={"src": {"default": False, "devices": {0: True}}})
    trace = Simulator(cfg, load("distanceTo").compile()).run()
    assert snapshot(trace.events, 20.0) == snapshot(trace.events, 19.0)
    t = stabilisation_time(trace.events, 1.0, 20.0)
    assert t is not None and t <= 8.0


def test_ttl_shorter_than_period_forgets_everything():
    trace = simulate("exchange(0, (o, n) => retsend n + 1)", ttl=0.5)
    assert all(ev.result == lift(1.0) for ev in trace.events)
    assert all(ev.precursors == () for ev in trace.events)


def test_self_message_carries_state():
    trace = simulate(load("rounds").source, positions=[(0.0, 0.0)])
    assert [r.default for r in results(trace, 0)] == [1.0, 2.0, 3.0, 4.0, 5.0]


def test_reboot_clears_buffer_including_self():
    trace = simulate(load("rounds").source, positions=[(0.0, 0.0)], reboots=[{"device": 0, "time": 3.5}])
    assert [r.default for r in results(trace, 0)] == [1.0, 2.0, 3.0, 1.0, 2.0]


def test_failed_device_neither_fires_nor_receives():
    trace = simulate("exchange(0, (o, n) => retsend n + 1)", end_time=8.0,
                     failures=[{"device": 1, "start": 2.5, "end": 5.5}])
    assert [ev.round for ev in trace.events if ev.device == 1] == [1, 2, 3, 4, 5]
    times = [ev.time for ev in trace.events if ev.device == 1]
    assert times == [1.0, 2.0, 6.0, 7.0, 8.0]
    after = next(ev for ev in trace.events if ev.device == 1 and ev.time == 6.0)
    # 0:5 was sent at 5.0 while device 1 was down, and its own 2.0 entry has expired
    assert after.precursors == ()
    nxt = next(ev for ev in trace.events if ev.device == 1 and ev.time == 7.0)
    assert set(nxt.precursors) == {"0:6", "1:3"}


def test_aborted_rounds_send_nothing():
    src = "if (uid() == 0) { fun f(x) { f(x) }(1) } else { exchange(0, (o, n) => retsend n + 1) }"
    trace = simulate(src, step_budget=2000)
    aborted = [ev for ev in trace.events if ev.device == 0]
    assert aborted and all(ev.aborted and ev.result is None for ev in aborted)
    for ev in trace.events:
        assert not any(p.startswith("0:") for p in ev.precursors)
    assert validate_trace(trace.events).ok


def test_sense_dist_uses_position_at_receive_time():
    src = "nfold(+, senseDist, 0)"
    trace = simulate(src, radius=5.0, mobility=[{"device": 1, "time": 1.5, "x": 3.0, "y": 0.0}], end_time=3.0)
    by_id = {ev.event_id: ev.result.default for ev in trace.events}
    assert by_id["0:1"] == 0.0
    assert by_id["0:2"] == 1.0
    assert by_id["0:3"] == 3.0


def test_drop_is_per_recipient_and_seeded():
    cfg = dict(positions=[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)], drop=0.5, end_time=30.0, seed=5)
    a = simulate("exchange(0, (o, n) => retsend n + 1)", **cfg)
    b = simulate("exchange(0, (o, n) => retsend n + 1)", **cfg)
    assert trace_to_csv(a.events) == trace_to_csv(b.events)
    cross = [p for ev in a.events for p in ev.precursors if not p.startswith(f"{ev.device}:")]
    assert 0 < len(cross) < 2 * 3 * 30


def test_trace_csv_round_trip():
    trace = simulate("exchange(0, (o, n) => retsend n + 1)")
    text = trace.to_csv()
    assert text.splitlines()[0] == "event_id,device,time,round,precursors,aborted,result"
    back = read_trace_csv(text)
    assert back == trace.events


@pytest.mark.parametrize("bad", ["", "a,b\n", "event_id,device,time,round,precursors,aborted,result\nx,1\n",
                                 "event_id,device,time,round,precursors,aborted,result\n0:1,zero,1.0,1,,0,0[]\n"])
def test_malformed_trace_csv(bad):
    with pytest.raises(TraceFormatError):
        read_trace_csv(bad)


def ev(eid, device, time, rnd, precursors=()):
    return EventRecord(eid, device, time, rnd, tuple(precursors), False, lift(0.0))


def test_validate_trace_axioms():
    good = [ev("0:1", 0, 1.0, 1), ev("1:1", 1, 1.5, 1, ["0:1"]), ev("0:2", 0, 2.0, 2, ["0:1", "1:1"])]
    assert validate_trace(good).ok
    assert validate_trace([ev("0:1", 0, 1.0, 1, ["0:1"])]).axioms() == {"acyclicity"}
    same_device = good + [ev("1:2", 1, 3.0, 2, ["0:1", "0:2"])]
    assert validate_trace(same_device).axioms() == {"distinct-device-precursors"}
    assert validate_trace([ev("0:1", 0, 1.0, 1, ["7:3"])]).axioms() == {"local-finiteness"}
    late = [ev("0:1", 0, 2.0, 1), ev("1:1", 1, 1.0, 1, ["0:1"])]
    assert validate_trace(late).axioms() == {"precursor-order"}
    backwards = [ev("0:1", 0, 2.0, 1), ev("0:2", 0, 1.0, 2)]
    assert validate_trace(backwards).axioms() == {"monotone-time"}


def test_config_validation():
    with pytest.raises(ValidationError):
        config(colour="red")
    with pytest.raises(ValidationError):
        config(grid={"cols": 2, "rows": 2})
    with pytest.raises(ValidationError):
        config(jitter=1.0)
    with pytest.raises(ValidationError):
        config(radius=0.0)
    with pytest.raises(ValidationError):
        config(drop=1.5)
    with pytest.raises(ValidationError):
        config(ttl=0.0)
    with pytest.raises(ValidationError):
        config(reboots=[{"device": 5, "time": 1.0}])
    with pytest.raises(ValidationError):
        config(sensors={"src": {"default": "Pair(1,"}})


def test_load_config_resolves_program_relative_to_file(tmp_path):
    (tmp_path / "progs").mkdir()
    (tmp_path / "progs" / "p.xc").write_text("uid()\n")
    path = tmp_path / "net.json"
    path.write_text(json.dumps({"program": "progs/p.xc", "positions": [[0, 0]], "radius": 1, "end_time": 2}))
    cfg = load_config(path)
    trace = Simulator(cfg).run()
    assert [e.result for e in trace.events] == [lift(0.0), lift(0.0)]
    assert len(trace.program_digest) == 64


def test_sensor_literals_from_config():
    trace = simulate("fst(pos) + mux(flag, 1, 0)", positions=[(0.0, 0.0)], end_time=1.0,
                     sensors={"pos": {"default": "Pair(2, True)"}, "flag": {"default": True}})
    assert trace.events[0].result == lift(3.0)
