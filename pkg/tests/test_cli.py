import json
import subprocess
import sys

import pytest

from cgensemble import Instance, Item
from cgensemble.cli import build_config, build_parser, main


def write(path, inst):
    path.write_text(inst.dumps())
    return str(path)


@pytest.fixture
def three(tmp_path):
    return write(tmp_path / "three.json", Instance([Item(2, size=s) for s in (3, 4, 5)], 10))


def test_solve_writes_report(three, tmp_path, capsys):
    out = tmp_path / "rep.json"
    code = main(["solve", "--instance", three, "--strategy", "mcmp", "--num-column", "3", "--num-path", "10",
                 "--output", str(out)])
    assert code == 0
    rep = json.loads(out.read_text())
    assert rep["z_irmp"] == 3 and rep["proven_optimal"] is True
    assert main(["solve", "--instance", three]) == 0
    assert json.loads(capsys.readouterr().out)["z_irmp"] == 3


def test_solve_early_stop_flags(tmp_path, capsys):
    main(["gen", "--family", "linear", "--k", "20", "--seed", "3", "--out", str(tmp_path)])
    path = str(tmp_path / "case_0.json")
    code = main(["solve", "--instance", path, "--strategy", "baseline", "--no-convergence",
                 "--dual-objective-threshold", "0.05", "--dual-throttles", "4"])
    assert code == 0
    rep = json.loads(capsys.readouterr().out)
    assert "farley_lb" in rep
    if rep["farley_lb"] is not None:
        assert rep["farley_lb"] <= rep["z_irmp"]


def test_config_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"num_column": 5, "num_path": 2, "depth": 7}))
    args = build_parser().parse_args(["solve", "--instance", "x", "--config", str(cfg), "--strategy", "MC3",
                                      "--depth", "2"])
    c = build_config(args, "linear")
    assert (c.num_column, c.num_path, c.depth) == (3, 0, 2)
    args = build_parser().parse_args(["solve", "--instance", "x", "--strategy", "mp"])
    assert build_config(args, "chance").num_column == 1
    cfg.write_text(json.dumps({"colour": 1}))
    assert main(["solve", "--instance", "x", "--config", str(cfg)]) == 1


def test_infeasible_instance_exit_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"kind": "linear", "capacity": 10,
                                "items": [{"size": 3, "demand": 1}, {"size": 12, "demand": 1}]}))
    assert main(["solve", "--instance", str(path)]) == 2
    assert "item 1" in capsys.readouterr().err


def test_malformed_json_exit_1(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["solve", "--instance", str(path)]) == 1
    assert "malformed" in capsys.readouterr().err
    assert main(["solve", "--instance", str(tmp_path / "missing.json")]) == 1


def test_gen_is_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["gen", "--family", "linear", "--k", "50", "--count", "50", "--seed", "1", "--out", str(d)]) == 0
    files = sorted(p.name for p in a.iterdir())
    assert len(files) == 50
    assert all((a / f).read_bytes() == (b / f).read_bytes() for f in files)
    assert main(["gen", "--family", "chance", "--k", "35", "--out", str(tmp_path / "c")]) == 1


def test_oracle_command(three, tmp_path, capsys):
    assert main(["oracle", "--instance", three]) == 0
    lines = dict(line.split(" ", 1) for line in capsys.readouterr().out.splitlines())
    assert lines["z_ip"] == "3" and lines["patterns"] == "11" and lines["proven"] == "true"
    single = write(tmp_path / "one.json", Instance([Item(7, size=5)], 10))
    assert main(["oracle", "--instance", single]) == 0
    assert "z_ip 4" in capsys.readouterr().out
    main(["gen", "--family", "linear", "--k", "50", "--out", str(tmp_path / "big")])
    assert main(["oracle", "--instance", str(tmp_path / "big" / "case_0.json")]) == 3
    assert "budget" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["--family", "linear", "--k", "6", "--cases", "2", "--strategies", "baseline", "MC3"],
    ["--family", "chance", "--k", "4", "--cases", "2", "--strategies", "baseline", "MCMP+ES", "--format", "json"],
    ["--family", "linear", "--k", "5", "7", "--cases", "1", "--strategies", "baseline", "MP2", "MP2MC3",
     "--format", "csv", "--oracle"],
])
def test_bench_smoke(argv, tmp_path, capsys):
    out = tmp_path / "bench"
    assert main(["bench", *argv, "--out", str(out)]) == 0
    assert (out / "report.csv").exists() and (out / "summary.json").exists()
    text = capsys.readouterr().out
    assert text.strip()


def test_bench_config_file(tmp_path, capsys):
    cfg = tmp_path / "bench.json"
    cfg.write_text(json.dumps({"family": "linear", "k": [5], "cases": 2, "strategies": ["baseline", "MC3"],
                               "config": {"selection_times": 2}, "csp_node_limit": 50}))
    assert main(["bench", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert summary["overrides"] == {"selection_times": 2, "csp_node_limit": 50}
    cfg.write_text(json.dumps({"frobnicate": 1}))
    assert main(["bench", "--config", str(cfg)]) == 1


def test_module_entry_point(three):
    done = subprocess.run([sys.executable, "-m", "cgensemble", "oracle", "--instance", three],
                          capture_output=True, text=True)
    assert done.returncode == 0 and "z_ip 3" in done.stdout
