import json
import subprocess
import sys

import pytest

from wavesym.cli import main
from wavesym.liefields import conformal_basis
from wavesym.parser import parse
from wavesym.symmetry import report_from_json


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_algebra_dim3(capsys):
    code, out, _ = run(capsys, "algebra", "--dim", "3", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert len(data["basis"]) == 15 and data["closed"]


def test_algebra_thm2(capsys):
    code, out, _ = run(capsys, "algebra", "--dim", "2", "--realization", "thm2", "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert len(data["basis"]) == 10
    assert data["matches_geometric"] is True
    assert data["eta"][data["basis"].index("D")] == "-1/2*u"


def test_algebra_text(capsys):
    code, out, _ = run(capsys, "algebra", "--dim", "2")
    assert code == 0 and out.strip().endswith("closed")


def test_algebra_dim1(capsys):
    code, _, err = run(capsys, "algebra", "--dim", "1")
    assert code == 2 and "dim" in err


def test_check_conformal_power(capsys):
    code, out, _ = run(capsys, "check", "--dim", "3", "--class", "reduced", "--F", "F0*u^3",
                       "--Q", "K0 + (-2)*x0*u du", "--format", "json")
    assert code == 0
    assert json.loads(out)["verdict"] == "symmetry"


def test_check_klein_gordon_mass(capsys):
    code, out, _ = run(capsys, "check", "--dim", "3", "--class", "reduced", "--F", "m^2*u", "--Q", "D")
    assert code == 1
    assert "residual = 2*m^2*u" in out


def test_check_general(capsys):
    code, out, _ = run(capsys, "check", "--dim", "2", "--class", "general", "--F", "u_0^2", "--Q", "P1",
                       "--format", "json")
    data = json.loads(out)
    assert code == 0 and data["oracle"] == "symmetry"


def test_check_raw_list_and_eta_only(capsys):
    code, _, _ = run(capsys, "check", "--dim", "2", "--class", "reduced", "--F", "0", "--Q", "u du")
    assert code == 0
    code, _, _ = run(capsys, "check", "--dim", "2", "--F", "0", "--Q", "[1, 0, 0, 0]")
    assert code == 0


@pytest.mark.parametrize(
    "argv, code",
    [
        (["check", "--dim", "3", "--F", "x0 +", "--Q", "P0"], 2),
        (["check", "--dim", "3", "--F", "x7", "--Q", "P0"], 2),
        (["check", "--dim", "3", "--F", "0", "--Q", "K9"], 2),
        (["check", "--dim", "3", "--class", "reduced", "--F", "u_0", "--Q", "P0"], 2),
        (["check", "--dim", "2", "--F", "0", "--Q", "[x0, 0, 0, 0]"], 3),
        (["check", "--dim", "2", "--F", "0", "--Q", "[u, 0, 0, 0]"], 3),
        (["check", "--dim", "2", "--F", "0"], 2),
    ],
)
def test_check_errors(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_parse_error_has_caret(capsys):
    _, _, err = run(capsys, "check", "--dim", "3", "--F", "x0 +", "--Q", "P0")
    assert "offset 4" in err
    assert err.rstrip().splitlines()[-1] == " " * 4 + "^"


def write(tmp_path, data):
    p = tmp_path / "t.json"
    p.write_text(json.dumps(data), encoding="utf-8")
    return str(p)


def test_transform_identity(capsys, tmp_path):
    path = write(tmp_path, {"n": 2, "X": ["x0", "x1", "x2"], "U": "u"})
    code, out, _ = run(capsys, "transform", "--F", "u_0*u + x1", "--transform", path, "--format", "json")
    data = json.loads(out)
    assert code == 0
    assert parse(data["F_tilde"], 2) == parse("u_0*u + x1", 2)
    assert data["lambda"] == "1"


def test_transform_scaling(capsys, tmp_path):
    path = write(tmp_path, {"n": 2, "X": ["x0", "x1", "x2"], "U": "2*u"})
    code, out, _ = run(capsys, "transform", "--F", "x1*u^3", "--transform", path, "--format", "json")
    assert code == 0
    assert parse(json.loads(out)["F_tilde"], 2) == parse("2*x1*(u/2)^3", 2)


def test_transform_reduced_constraint(capsys, tmp_path):
    path = write(tmp_path, {"n": 2, "X": ["x0", "x1", "x2"], "A": "exp(x0)"})
    code, out, _ = run(capsys, "transform", "--F", "u^3", "--transform", path, "--format", "json")
    assert code == 1
    assert json.loads(out)["constraint_ok"] is False


def test_transform_anisotropic(capsys, tmp_path):
    path = write(tmp_path, {"n": 2, "X": ["x0", "2*x1", "x2"], "U": "u"})
    code, _, err = run(capsys, "transform", "--F", "u", "--transform", path)
    assert code == 3
    assert "(1,1)" in err


@pytest.mark.parametrize(
    "data, extra",
    [
        ({"n": 2, "X": ["x0", "x1"], "U": "u"}, []),
        ({"X": ["x0", "x1", "x2"], "U": "u"}, []),
        ({"n": 2, "X": ["x0", "x1", "x2"]}, []),
        ({"n": 2, "X": ["x0", "x1", "x2"], "U": "u"}, ["--dim", "3"]),
    ],
)
def test_transform_bad_files(capsys, tmp_path, data, extra):
    path = write(tmp_path, data)
    assert run(capsys, "transform", "--F", "u", "--transform", path, *extra)[0] == 2


def test_transform_missing_file(capsys, tmp_path):
    assert run(capsys, "transform", "--F", "u", "--transform", str(tmp_path / "nope.json"))[0] == 2


def test_json_report_round_trip(capsys):
    names = [X.name for X in conformal_basis(3)]
    for q in ("K1 + (-2)*x1*u du", "D - u du", "J12"):
        code, out, _ = run(capsys, "check", "--dim", "3", "--class", "reduced", "--F", "F0*u^3",
                           "--Q", q, "--format", "json")
        data = json.loads(out)
        again = report_from_json(data)
        assert again.to_json()["residual"] == data["residual"]
        assert (code == 0) == again.is_symmetry
        assert data["generator"].split()[0] in names


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "wavesym", "algebra", "--dim", "2", "--format", "json"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["dim"] == 2
