import json
import math
import subprocess
import sys

import pytest

from varlp_lab.cli import EX_CONFIG, EX_SOFTWARE, main
from varlp_lab.exponent import ExponentField, GridFunction, Cube, save_exponent
from varlp_lab.report import loads_csv

E2 = repr(math.exp(-2))


def run(tmp_path, *args, name="out.txt"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, (out.read_text() if out.exists() else "")


# -- exit codes --------------------------------------------------------------


@pytest.mark.parametrize("args, code", [
    (["check", "ussc", "--family", "sinloglog", "--param", "c=2.4", "--param", "alpha=0.4"], 0),
    (["check", "uinf", "--family", "constant", "--param", "value=2.0"], 0),
    (["check", "lh0", "--family", "lh_prototype"], 0),
    (["check", "apdot", "--family", "step", "--param", "low=2", "--param", "high=3"], 1),
    (["check", "ussc", "--family", "sinlog", "--param", "c=2.5", "--param", "alpha=0.5"], 1),
    (["check", "lhinf", "--family", "sinloglog", "--param", "c=2.4", "--param", "alpha=0.4",
      "--p-inf", "2.4"], 1),
])
def test_check_exit_codes(tmp_path, args, code):
    got, text = run(tmp_path, *args)
    assert got == code
    doc = json.loads(text)
    assert doc["reports"][0]["exit_code"] == code


@pytest.mark.parametrize("args", [
    ["check", "bogus"],
    ["check", "ussc", "--family", "nope"],
    ["check", "ussc"],
    ["check", "ninf", "--family", "lh_prototype", "--c", "1.5"],
    ["check", "ninf", "--family", "lh_prototype", "--c", "0.1,0.2"],
    ["check", "lh0", "--family", "lh_prototype", "--levels", "0"],
    ["check", "lh0", "--family", "lh_prototype", "--seed", "-1"],
    ["norm", "--family", "constant", "--param", "value=2", "--function", "/nonexistent.json"],
    ["check", "lh0", "--exponent", "/nonexistent.json"],
])
def test_bad_configuration_exits_64(tmp_path, args, capsys):
    assert main(args) == EX_CONFIG
    assert "varlp-lab:" in capsys.readouterr().err


def test_convergence_failure_exits_70(tmp_path, monkeypatch):
    import varlp_lab.cli as cli
    from varlp_lab.errors import ConvergenceError

    def boom(*a, **k):
        raise ConvergenceError("bisection stalled")

    monkeypatch.setattr(cli, "luxemburg_norm", boom)
    code, _ = run(tmp_path, "norm", "--family", "constant", "--param", "value=2", "--m", "4")
    assert code == EX_SOFTWARE


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "varlp_lab.cli", "check", "uinf", "--family", "constant",
                           "--param", "value=2"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["command"] == "check uinf"


# -- scans -------------------------------------------------------------------


def test_scan_ninf_lists_every_tuple_and_combines_existentially(tmp_path):
    code, text = run(tmp_path, "scan", "ninf", "--family", "lh_prototype", "--levels", "3",
                     "--c", f"{E2},0.5", "--p-inf", "2")
    doc = json.loads(text)
    verdicts = [s["verdict"] for s in doc["summary"][:-1]]
    assert verdicts == ["bounded", "growing"]
    assert doc["summary"][-1] == {"overall": "bounded"} and code == 0
    assert {r["row"] for r in doc["rows"]} == {"level"}
    assert len(doc["rows"]) == 2 * 3


def test_scan_csv_output_parses_back(tmp_path):
    code, text = run(tmp_path, "scan", "ninf", "--family", "lh_prototype", "--levels", "2", "--c", "0.5",
                     "--p-inf", "2,2.5", "--format", "csv", "--seed", "11")
    seed, rows = loads_csv(text)
    assert seed == 11 and len(rows) == 4
    assert {r["p_inf"] for r in rows} == {2.0, 2.5}
    assert code == 1


def test_scan_uses_default_grid_without_flags(tmp_path):
    code, text = run(tmp_path, "scan", "ussc", "--family", "sinloglog", "--param", "c=2.4",
                     "--param", "alpha=0.4")
    doc = json.loads(text)
    assert len(doc["reports"]) == 3
    assert code == 0


def test_reruns_are_byte_identical(tmp_path):
    args = ["check", "uinf", "--family", "lh_prototype", "--m", "64", "--levels", "2", "--depth", "2",
            "--format", "csv"]
    _, a = run(tmp_path, *args, name="a.csv")
    _, b = run(tmp_path, *args, name="b.csv")
    assert a == b and a.startswith("# seed=0\n")


# -- examples and direct commands -------------------------------------------


def test_examples_table(tmp_path, capsys):
    code, text = run(tmp_path, "examples", "--levels", "2")
    assert code == 0
    table = {row["exponent"]: row for row in json.loads(text)["summary"]}
    assert table["lh_prototype"]["lh0"] == "bounded"
    assert table["step"]["lh0"] == "growing" and table["step"]["apdot"] == "growing"
    assert table["sinloglog"]["ussc"] == "pass"
    assert table["constant"]["uinf"] == "bounded"
    assert "exponent" in capsys.readouterr().err


def test_rearrange_command(tmp_path):
    code, text = run(tmp_path, "rearrange", "--family", "step", "--param", "low=2", "--param", "high=3",
                     "--m", "8", "--format", "csv")
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0] == "t_start,t_end,value"
    assert [ln.split(",")[2] for ln in lines[1:]] == ["3", "2"]
    assert float(lines[-1].split(",")[1]) == 16.0


def test_norm_command_constant_exponent(tmp_path):
    code, text = run(tmp_path, "norm", "--family", "constant", "--param", "value=2", "--m", "16")
    res = json.loads(text)["result"]
    # ||1||_2 on a box of side 16
    assert code == 0 and res["value"] == pytest.approx(4.0, rel=1e-9)


def test_norm_command_reads_function_files(tmp_path):
    g = GridFunction(Cube.interval(0, 2), 2, [3.0, 4.0])
    path = tmp_path / "f.json"
    path.write_text(json.dumps(g.to_dict()))
    exp = tmp_path / "p.json"
    save_exponent(ExponentField.constant(2.0), exp)
    code, text = run(tmp_path, "norm", "--exponent", str(exp), "--function", str(path))
    assert code == 0 and json.loads(text)["result"]["value"] == pytest.approx(5.0, rel=1e-9)


def test_maximal_command(tmp_path):
    code, text = run(tmp_path, "maximal", "--function", "indicator", "--support", "0,1", "--m", "8",
                     "--format", "csv")
    assert code == 0
    lines = text.strip().splitlines()
    assert lines[0] == "x0,f,Mf"
    mf = [float(ln.split(",")[2]) for ln in lines[1:]]
    f = [float(ln.split(",")[1]) for ln in lines[1:]]
    assert all(b >= a for a, b in zip(f, mf))
    assert max(mf) == 1.0
