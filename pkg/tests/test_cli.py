import json
import subprocess
import sys

import numpy as np
import pytest

import submodqp as sq
from submodqp import cli, model


def _run(argv):
    return cli.main(argv)


def test_generate_writes_instance_and_truth(tmp_path):
    out = tmp_path / "inst.json"
    code = _run([
        "generate", "--topology", "chain", "--dims", "8", "--sparsity", "0.5",
        "--outlier-fraction", "0.25", "--seed", "3", "--mode", "robust",
        "--output", str(out),
    ])
    assert code == cli.EXIT_OK
    assert out.exists()
    truth = json.loads((tmp_path / "inst_truth.json").read_text())
    assert len(truth["outliers"]) == 2
    inst = sq.load_instance(out)
    assert inst.mode == "robust" and inst.n == 8


def test_solve_round_trip_is_deterministic(tmp_path, capsys):
    out = tmp_path / "inst.json"
    _run(["generate", "--dims", "6", "--seed", "1", "--cost", "0.8", "--output", str(out)])
    sol1 = tmp_path / "sol1.json"
    sol2 = tmp_path / "sol2.json"
    assert _run(["solve", str(out), "--engine", "mnp", "--output", str(sol1)]) == cli.EXIT_OK
    assert _run(["solve", str(out), "--engine", "mnp", "--output", str(sol2)]) == cli.EXIT_OK
    d1 = json.loads(sol1.read_text())
    d2 = json.loads(sol2.read_text())
    d1.pop("wall_time_ms"), d2.pop("wall_time_ms")
    assert d1 == d2
    # indices in the output refer to instance vertices
    assert all(0 <= i < 6 for i in (d1["discarded"] or []))
    assert len(d1["z"]) == 6


def test_solve_engines_agree(tmp_path):
    out = tmp_path / "inst.json"
    _run(["generate", "--dims", "5", "--seed", "7", "--cost", "0.5", "--output", str(out)])
    s1, s2 = tmp_path / "a.json", tmp_path / "b.json"
    _run(["solve", str(out), "--engine", "exhaustive", "--output", str(s1)])
    _run(["solve", str(out), "--engine", "mnp", "--output", str(s2)])
    v1 = json.loads(s1.read_text())["value"]
    v2 = json.loads(s2.read_text())["value"]
    assert v1 == pytest.approx(v2, abs=1e-6)


def test_solve_known_instance(tmp_path, capsys):
    # instance compiling to Q=[[2,-1],[-1,2]], a=(1,0), k0=0.5 with c=0.1:
    # the optimum keeps vertex 0 only, at value k0 - 0.15
    inst = sq.ProblemInstance(
        sq.chain_graph(2, weight=0.5), a=[1, 0], node_weights=[0.5, 0.5],
        c=[0.1, 0.1], l=[0, 0], u=[10, 10],
    )
    path = tmp_path / "inst.json"
    sq.save_instance(inst, path)
    out = tmp_path / "sol.json"
    assert _run(["solve", str(path), "--engine", "exhaustive", "--output", str(out)]) == cli.EXIT_OK
    d = json.loads(out.read_text())
    assert d["z"] == [1, 0]
    assert d["value"] == pytest.approx(0.5 - 0.15, abs=1e-9)


def test_eval_all_off_prints_constant_term(tmp_path, capsys):
    inst = sq.ProblemInstance(
        sq.chain_graph(2, weight=0.5), a=[1, 0], node_weights=[1, 1],
        c=[0, 0], l=[0, 0], u=[10, 10],
    )
    path = tmp_path / "inst.json"
    sq.save_instance(inst, path)
    assert _run(["eval", str(path), "--z", "0,0"]) == cli.EXIT_OK
    outp = capsys.readouterr().out
    assert "v(z) = 1" in outp  # k0 = sum nw_i a_i^2 = 1


def test_eval_rejects_bad_z(tmp_path):
    inst, _ = model.generate("chain", (3,), seed=0)
    path = tmp_path / "inst.json"
    sq.save_instance(inst, path)
    assert _run(["eval", str(path), "--z", "0,1"]) == cli.EXIT_INPUT
    assert _run(["eval", str(path), "--z", "0,2,1"]) == cli.EXIT_INPUT


def test_trace_writes_value_chain(tmp_path):
    inst, _ = model.generate("chain", (4,), seed=2)
    path = tmp_path / "inst.json"
    sq.save_instance(inst, path)
    out = tmp_path / "chain.json"
    assert _run(["trace", str(path), "--output", str(out)]) == cli.EXIT_OK
    d = json.loads(out.read_text())
    assert set(d) == {"kind", "order", "values", "breakpoints"}
    assert len(d["values"]) == len(d["order"]) + 1


def test_malformed_json_is_input_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert _run(["solve", str(bad)]) == cli.EXIT_INPUT
    assert "input error" in capsys.readouterr().err


def test_unknown_key_is_named(tmp_path, capsys):
    inst, _ = model.generate("chain", (3,), seed=0)
    d = model.instance_to_json_dict(inst)
    d["mystery"] = 1
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(d))
    assert _run(["solve", str(path)]) == cli.EXIT_INPUT
    assert "mystery" in capsys.readouterr().err


def test_bench_single_size(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    assert _run(["bench", "--sizes", "12", "--reps", "1", "--output", str(out)]) == cli.EXIT_OK
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "n,t_chain_ms,t_naive_ms,breakpoints"
    assert len(lines) == 2
    assert "ratio" not in capsys.readouterr().out


def test_bench_rejects_tiny_sizes():
    assert _run(["bench", "--sizes", "1", "--reps", "1"]) == cli.EXIT_INPUT


def test_verify_ok(tmp_path):
    out = tmp_path / "report.json"
    code = _run(["verify", "--trials", "2", "--n", "4", "--seed", "0", "--output", str(out)])
    assert code == cli.EXIT_OK
    assert json.loads(out.read_text())["ok"] is True


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "submodqp.cli", "bench", "--sizes", "8", "--reps", "1"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("n,t_chain_ms")
