import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from ltpg import reports
from ltpg.cli import run

ROOT = Path(__file__).resolve().parents[1]
INPUTS = ROOT / "inputs"


def call(capsys, *args):
    code = run([str(a) for a in args])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip().startswith("{") else out)


def inp(name):
    return INPUTS / name


@pytest.mark.parametrize("args,code", [
    (["fg", "--field", inp("q3.json"), "--phi", "mult", "--prec", "6"], 0),
    (["endo", "--field", inp("q3.json"), "--a", "2", "--prec", "8"], 0),
    (["check", inp("trivial.json")], 0),
    (["check", inp("not_commuting.json")], 2),
    (["height", inp("height1.json")], 0),
    (["height", inp("height1.json"), "--bound", "0"], 2),
    (["level", inp("twist_z9.json")], 0),
    (["lifts", inp("trivial.json")], 0),
    (["lifts", inp("trivial.json"), "--F", "0"], 0),
    (["obstruct", inp("ur2.json"), "--extension", inp("split.json")], 0),
    (["tquasi", inp("trivial.json"), "--op", "1"], 2),
    (["tquasi", inp("twist_z9.json"), "--equivalences"], 0),
    (["oracle-koszul", inp("koszul.json")], 0),
    (["suite", "nope"], 1),
    (["check", inp("missing.json")], 1),
])
def test_exit_codes(capsys, args, code):
    got, report = call(capsys, *args)
    assert got == code
    if isinstance(report, dict):
        assert report["schema"] == "ltpg/1"


def test_fg_multiplicative(capsys):
    code, rep = call(capsys, "fg", "--field", inp("q3.json"), "--phi", "mult", "--prec", "6")
    assert rep["result"]["coefficients"] == {"0,1": [1], "1,0": [1], "1,1": [1]}


def test_herr_trivial_reports_evidence(capsys):
    code, rep = call(capsys, "herr", inp("trivial.json"), "--precisions", "30,60")
    assert code == 0
    res = rep["result"]
    assert [res["cohomology"][str(r)]["length"] for r in range(3)] == [1, 2, 0]
    assert res["cohomology"]["1"]["evidence"]["agree"]


def test_herr_basechange(capsys):
    code, rep = call(capsys, "herr-basechange", inp("trivial_z9.json"))
    assert code == 0 and rep["status"] == "ok"


def test_malformed_json_reports_location(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": "ltpg/1",\n  "p": 3,,\n}')
    code, rep = call(capsys, "check", bad)
    assert code == 1
    assert "line 2" in rep["result"]["message"] and "column" in rep["result"]["message"]


def test_schema_violation_is_input_error(capsys, tmp_path):
    bad = tmp_path / "field.json"
    bad.write_text('{"schema": "ltpg/1", "p": "three"}')
    code, rep = call(capsys, "fg", "--field", bad)
    assert code == 1


def test_reports_validate_against_schema(capsys):
    for args in (["check", inp("trivial.json")], ["lifts", inp("trivial.json")],
                 ["oracle-koszul", inp("koszul.json")]):
        code, rep = call(capsys, *args)
        reports.validate(rep, "report")


def test_out_file_matches_stdout(capsys, tmp_path):
    out = tmp_path / "r.json"
    run(["--out", str(out), "check", str(inp("trivial.json"))])
    printed = capsys.readouterr().out
    assert out.read_text() == printed


def _cli(args, env=None):
    e = dict(os.environ)
    e.update(env or {})
    return subprocess.run([sys.executable, "-m", "ltpg", *map(str, args)], capture_output=True,
                          env=e, cwd=ROOT, timeout=300)


def test_byte_identical_runs():
    args = ["herr", inp("twist_z9.json")]
    a, b = _cli(args), _cli(args)
    assert a.returncode == 0 and a.stdout == b.stdout


def test_precision_environment_variable():
    r = _cli(["herr", inp("trivial.json"), "--degrees", "0"], {"LTPG_PREC": "30"})
    rep = json.loads(r.stdout)
    assert sorted(rep["result"]["cohomology"]["0"]["evidence"]["divisors_by_precision"]) == ["30", "60"]
