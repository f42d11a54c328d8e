import json
import subprocess
import sys

import pytest

from xcalc.cli import main
from xcalc.stdlib.corpus import corpus


def call(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def line_config(workdir, corpus_path, **extra):
    cfg = {
        "program": corpus_path("distanceTo"),
        "positions": [[0, 0], [1, 0], [2, 0]],
        "radius": 1.5,
        "end_time": 6,
        "sensors": {"src": {"default": False, "devices": {"0": True}}},
    }
    cfg.update(extra)
    (workdir / "line.json").write_text(json.dumps(cfg))
    return "line.json"


@pytest.mark.parametrize("prog", corpus(), ids=lambda p: p.name)
def test_typecheck_corpus(prog, capsys, golden):
    code, out, _ = call(capsys, "typecheck", str(prog.path))
    assert code == 0
    golden(f"typecheck-{prog.name}.txt", out)


def test_typecheck_named_types(capsys, corpus_path):
    _, out, _ = call(capsys, "typecheck", corpus_path("distanceTo"))
    assert "distanceTo : (bool) -> num" in out.splitlines()
    _, out, _ = call(capsys, "typecheck", corpus_path("ping-pong"))
    assert "ping-pong : () -> field[num]" in out.splitlines()


def test_typecheck_error_names_span(workdir, capsys):
    (workdir / "bad.xc").write_text("1 + True\n")
    code, out, err = call(capsys, "typecheck", "bad.xc")
    assert code == 1 and out == ""
    assert err.startswith("bad.xc:1:5: type error:")


def test_run_uniconn_without_neighbours(capsys, corpus_path, golden):
    code, out, _ = call(capsys, "run", corpus_path("uniconn"), "--rounds", "3")
    assert code == 0 and out.splitlines() == ["0[]"] * 3
    golden("run-uniconn.txt", out)


def test_run_distance_at_source(capsys, corpus_path):
    code, out, _ = call(capsys, "run", corpus_path("distanceTo"), "--rounds", "3", "--sensor", "src=True")
    assert code == 0 and out.splitlines() == ["0[]"] * 3


def test_run_counts_rounds_through_self_tree(capsys, corpus_path):
    _, out, _ = call(capsys, "run", corpus_path("rounds"), "--rounds", "3")
    assert out.splitlines() == ["1[]", "2[]", "3[]"]


def test_run_missing_sensor_is_domain_error(capsys, corpus_path):
    code, _, err = call(capsys, "run", corpus_path("distanceTo"))
    assert code == 1 and "src" in err


def test_neighbour_tree_round_trip(workdir, capsys, corpus_path, golden):
    code, _, _ = call(capsys, "run", corpus_path("ping-pong"), "--device", "0", "--rounds", "2", "--save-tree", "zero.tree")
    assert code == 0
    saved = (workdir / "zero.tree").read_text()
    assert saved.splitlines()[0] == "0"
    golden("ping-pong-device0.tree", saved)
    code, out, _ = call(capsys, "run", corpus_path("ping-pong"), "--device", "1", "--rounds", "2", "--neighbour-tree", "zero.tree")
    assert code == 0
    # device 0's round 2 sent 1[0->2], whose default 1 is what device 1 reads
    assert out.splitlines() == ["1[0->2]", "1[0->2, 1->2]"]


def test_run_usage_errors(workdir, capsys, corpus_path):
    assert call(capsys, "run", "nowhere.xc")[0] == 2
    assert call(capsys, "run", corpus_path("rounds"), "--sensor", "novalue")[0] == 2
    assert call(capsys, "run", corpus_path("rounds"), "--sensor", "x=Pair(1,")[0] == 2
    (workdir / "junk.tree").write_text("zero\nB0;\n")
    assert call(capsys, "run", corpus_path("rounds"), "--neighbour-tree", "junk.tree")[0] == 2
    (workdir / "junk.tree").write_text("1\nB9;\n")
    assert call(capsys, "run", corpus_path("rounds"), "--neighbour-tree", "junk.tree")[0] == 2
    assert call(capsys, "run", corpus_path("rounds"), "--rounds", "-1")[0] == 2


def test_argparse_usage_errors_exit_2(capsys):
    for argv in ([], ["frobnicate"], ["snapshot", "t.csv"], ["simulate", "c.json"]):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2
    capsys.readouterr()


def test_simulate_writes_outputs(workdir, capsys, corpus_path, golden):
    cfg = line_config(workdir, corpus_path)
    code, out, _ = call(capsys, "simulate", cfg, "--out", "grad")
    assert code == 0
    golden("simulate-line.stdout.txt", out)
    golden("simulate-line.trace.csv", (workdir / "grad.trace.csv").read_text())
    golden("simulate-line.snapshot.csv", (workdir / "grad.snapshot.csv").read_text())
    meta = json.loads((workdir / "grad.meta.json").read_text())
    assert meta["events"] == 18 and meta["positions"]["2"] == [2.0, 0.0]
    assert sorted(p.name for p in workdir.iterdir()) == ["grad.meta.json", "grad.snapshot.csv", "grad.trace.csv", "line.json"]


def test_simulate_seed_range(workdir, capsys, corpus_path):
    cfg = line_config(workdir, corpus_path, drop=0.3, jitter=0.1)
    code, out, _ = call(capsys, "simulate", cfg, "--seeds", "3..4", "--out", "run")
    assert code == 0
    assert [l.split(":")[0] for l in out.splitlines() if l.startswith("seed")] == ["seed 3", "seed 4"]
    one = (workdir / "run.seed3.trace.csv").read_text()
    call(capsys, "simulate", cfg, "--seed", "3", "--out", "single")
    assert (workdir / "single.trace.csv").read_text() == one
    assert call(capsys, "simulate", cfg, "--seeds", "5..1", "--out", "x")[0] == 2


def test_simulate_drop_everything(workdir, capsys, corpus_path):
    cfg = line_config(workdir, corpus_path, drop=1.0)
    _, out, _ = call(capsys, "simulate", cfg, "--out", "silent")
    assert "0 cross-device precursors" in out.splitlines()[0]


def test_simulate_errors(workdir, capsys, corpus_path):
    assert call(capsys, "simulate", "absent.json", "--out", "x")[0] == 2
    (workdir / "broken.json").write_text("{")
    assert call(capsys, "simulate", "broken.json", "--out", "x")[0] == 1
    line_config(workdir, corpus_path, colour="red")
    assert call(capsys, "simulate", "line.json", "--out", "x")[0] == 1
    line_config(workdir, corpus_path, program="missing.xc")
    assert call(capsys, "simulate", "line.json", "--out", "x")[0] == 1
    (workdir / "bad.xc").write_text("1 + True\n")
    line_config(workdir, corpus_path, program="bad.xc")
    assert call(capsys, "simulate", "line.json", "--out", "x")[0] == 1
    assert not list(workdir.glob("x.*"))


def test_trace_check_and_snapshot(workdir, capsys, corpus_path, golden):
    call(capsys, "simulate", line_config(workdir, corpus_path), "--out", "grad")
    code, out, _ = call(capsys, "trace-check", "grad.trace.csv")
    assert code == 0 and out == "ok: 18 events, 0 violations\n"
    code, out, _ = call(capsys, "snapshot", "grad.trace.csv", "--time", "2.5")
    assert code == 0
    golden("snapshot-line-2.5.csv", out)
    call(capsys, "snapshot", "grad.trace.csv", "--time", "6", "--out", "final.csv")
    assert (workdir / "final.csv").read_text() == (workdir / "grad.snapshot.csv").read_text()


def test_snapshot_without_meta_has_unknown_positions(workdir, capsys, corpus_path):
    call(capsys, "simulate", line_config(workdir, corpus_path), "--out", "grad")
    (workdir / "grad.meta.json").unlink()
    _, out, _ = call(capsys, "snapshot", "grad.trace.csv", "--time", "1")
    assert out.splitlines()[1] == "0,nan,nan,0[]"


def test_trace_check_violations_and_malformed(workdir, capsys):
    header = "event_id,device,time,round,precursors,aborted,result\n"
    (workdir / "cyc.csv").write_text(header + "0:1,0,1.0,1,0:1,0,0[]\n")
    code, out, _ = call(capsys, "trace-check", "cyc.csv")
    assert code == 1
    assert out.splitlines()[0].startswith("violation acyclicity: 0:1")
    assert out.splitlines()[-1].startswith("FAILED: 1 events")
    (workdir / "junk.csv").write_text("not,a,trace\n")
    assert call(capsys, "trace-check", "junk.csv")[0] == 2
    assert call(capsys, "trace-check", "absent.csv")[0] == 2


def test_module_entry_point(corpus_path):
    proc = subprocess.run([sys.executable, "-m", "xcalc", "typecheck", corpus_path("rounds")],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "rounds : () -> num"
