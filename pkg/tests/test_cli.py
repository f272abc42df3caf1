import json
import subprocess
import sys

import pytest

from obsgraph.cli import parse_lattice_set, parse_number, run


def report(capsys, argv):
    status = run(argv)
    out = capsys.readouterr().out
    return status, json.loads(out) if out.strip().startswith("{") else out


def test_bohr_example(capsys):
    status, rep = report(capsys, ["bohr", "--p", "4", "--residues", "0,1", "--time", "1"])
    assert status == 0
    assert rep["result"]["observable"] is True and rep["result"]["g"] == 1
    assert {"observable", "g", "m_T", "C_obs", "failing_fiber"} <= set(rep["result"])


def test_observability_example(capsys):
    status, rep = report(capsys, ["observability", "--graph", "cycle:4", "--set", "0 mod 2", "--time", "1"])
    assert status == 0
    res = rep["result"]
    assert res["observable"] is False and res["witness"] is not None
    assert res["restriction"]["observable"] is False and res["hautus"]["observable"] is False


def test_torus_example(capsys):
    status, rep = report(capsys, ["torus", "--N", "8", "--d", "2", "--construct", "product"])
    assert status == 0
    res = rep["result"]
    assert res["E_size"] == 48 and res["ratio"] == 0.75
    assert res["verified_unobservable"] is True and res["method"] in ("witness", "gramian")


def test_report_envelope(capsys):
    _, rep = report(capsys, ["counterexample", "--p", "2", "--delta", "pi/200", "--t", "1", "--seed", "3"])
    assert set(rep) == {"command", "inputs", "tolerances", "seed", "result", "exit_status", "wall_time"}
    assert rep["seed"] == 3 and rep["result"]["holds"]


@pytest.mark.parametrize(
    "argv",
    [
        ["observability", "--graph", "cycle:6", "--set", "{0,3}", "--time", "2"],
        ["density", "--set", "rotation(sqrt2, 0.3)", "--R", "1e3,1e4", "--L", "1..8"],
        ["torus", "--N", "8", "--d", "2", "--construct", "donoho-stark", "--r", "2,2", "--trials", "10"],
    ],
)
def test_reports_reproducible_except_wall_time(capsys, argv):
    _, a = report(capsys, argv)
    _, b = report(capsys, argv)
    a.pop("wall_time"), b.pop("wall_time")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_density_csv(capsys):
    status, out = report(capsys, ["density", "--set", "0 mod 2", "--L", "1..3", "--R", "1e3", "--format", "csv"])
    lines = out.strip().splitlines()
    assert status == 0
    assert lines[0] == "kind,L_or_R,lower,upper"
    assert lines[1].startswith("L,1,0.333")
    assert lines[-1].startswith("R,1000,0.5,")


def test_config_file_and_out(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"graph": "path:2", "set": "{0}", "time": "pi"}))
    out = tmp_path / "report.json"
    assert run(["observability", "--config", str(cfg), "--out", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert rep["result"]["C_obs"] == pytest.approx(2 / 3.141592653589793, abs=1e-9)


@pytest.mark.parametrize(
    "argv",
    [
        ["observability", "--graph", "cycle:4", "--set", "{9}"],
        ["observability", "--graph", "hexagon:4", "--set", "{0}"],
        ["observability", "--graph", "cycle:4"],
        ["bohr", "--p", "4", "--residues", ""],
        ["counterexample", "--p", "4", "--delta", "pi/200", "--t", "1"],
        ["density", "--set", "garbage", "--L", "1"],
        ["torus", "--N", "2", "--d", "2"],
        ["nosuch"],
    ],
)
def test_invalid_input_exits_one(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        sys.exit(run(argv))
    assert exc.value.code == 1


@pytest.mark.parametrize(
    "argv",
    [
        ["observability", "--graph", "path:6", "--set", "{0}", "--tau-rank", "10"],
        ["observability", "--graph", "cycle:4", "--set", "0 mod 2", "--tau-obs", "-1"],
        ["bohr", "--p", "4", "--residues", "0,1", "--threshold", "1e3"],
        ["hautus", "--graph", "path:3", "--set", "{0}", "--tau-rank", "10"],
    ],
)
def test_injected_faults_exit_two(argv, capsys):
    assert run(argv) == 2


def test_hautus_subcommand(capsys):
    status, rep = report(capsys, ["hautus", "--graph", "path:3", "--set", "{1}"])
    assert status == 0 and rep["result"]["observable"] is False


def test_oracle_suite_subset(capsys):
    status, rep = report(capsys, ["oracle-suite", "--only", "2,8"])
    assert status == 0 and rep["result"]["all_passed"]
    assert set(rep["result"]["experiments"]) == {"2_bohr_instances", "8_fiber_cycle"}


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "obsgraph", "bohr", "--p", "2", "--residues", "0"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["observable"] is False


def test_number_and_set_parsers():
    assert parse_number("pi/200") == pytest.approx(3.141592653589793 / 200)
    assert parse_number("2*pi") == pytest.approx(6.283185307179586)
    assert parse_lattice_set("{0,1} mod 4").params == {"p": 4, "R": [0, 1]}
    assert parse_lattice_set("mixed(0.7)").kind == "composite"
