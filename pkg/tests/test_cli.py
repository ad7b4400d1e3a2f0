"""
测试命令行：各子命令的输出、退出码与错误诊断
"""

import sys
import os

# 添加父目录到Python路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import json
import math

import pandas as pd
import pytest

from src.cli import main
from src.config_loader import reset_config_loader
from src.spectra import STRICT

BVP = {
    "schema": "dirac-bvp/1",
    "n": 2,
    "ell": 1.0,
    "weights": [{"kind": "constant", "data": -1}, {"kind": "constant", "data": 1}],
    "C": [[2, 0], [0, 3]],
    "D": [[-1, 0], [0, -1]],
}

BEAM = {
    "schema": "tim-beam/1",
    "ell": 1.0,
    "rho": {"kind": "constant", "data": 1.0},
    "I_rho": {"kind": "constant", "data": 1.0},
    "K": {"kind": "constant", "data": 4.0},
    "EI": {"kind": "constant", "data": 1.0},
    "alpha1": 3.0,
    "alpha2": 1.0,
    "speeds": "separated",
    "rational": [2, 1],
}


@pytest.fixture(autouse=True)
def fresh_loader():
    reset_config_loader()
    yield
    reset_config_loader()


@pytest.fixture
def bvp_file(tmp_path):
    path = tmp_path / "bvp.json"
    path.write_text(json.dumps(BVP, indent=2), encoding="utf-8")
    return str(path)


@pytest.fixture
def beam_file(tmp_path):
    path = tmp_path / "beam.json"
    path.write_text(json.dumps(BEAM, indent=2), encoding="utf-8")
    return str(path)


def test_validate_bvp(bvp_file, capsys):
    assert main(["validate", bvp_file]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["valid"]
    assert payload["n"] == 2
    assert payload["regularity"]["regular"]
    assert payload["config"]["command"] == "validate"


def test_validate_beam(beam_file, capsys):
    assert main(["validate", beam_file]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["speeds"] == "separated"
    assert payload["regularity"]["J_plus"] == [12.0, 0.0]
    assert payload["n"] == 4


def test_classify(bvp_file, beam_file, capsys):
    assert main(["classify", bvp_file]) == 0
    assert json.loads(capsys.readouterr().out)["status"] == STRICT
    assert main(["classify", beam_file]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["regime"] == "distinct-speeds-(ii)"
    assert payload["status"] == STRICT


def test_spectrum_csv_to_file(bvp_file, tmp_path, capsys):
    out = tmp_path / "zeros.csv"
    assert main(["spectrum", bvp_file, "--window=-1,7", "--format", "csv", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["re", "im", "multiplicity", "residual"]
    assert frame["multiplicity"].sum() == 4


def test_spectrum_json_to_stdout(bvp_file, capsys):
    assert main(["spectrum", bvp_file, "--window=-1,7", "--jobs", "2"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["count"] == 4
    assert payload["config"]["jobs"] == 2


def test_compare_with_itself(bvp_file, capsys):
    assert main(["compare", bvp_file, "--reference", bvp_file, "--window=-1,7"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["spectrum"]["count"] == payload["reference"]["count"] == 4


def test_invalid_input_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({**BVP, "ell": -1.0}, indent=2), encoding="utf-8")
    assert main(["validate", str(path)]) == 1
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "ParseError"
    assert main(["validate", str(tmp_path / "missing.json")]) == 1


def test_empty_window_rejected(bvp_file, capsys):
    assert main(["spectrum", bvp_file, "--window=3,1"]) == 1
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "ValidationError"


def test_timoshenko_requires_beam(bvp_file, capsys):
    assert main(["timoshenko", bvp_file, "--window=0,5"]) == 1


def test_compare_separated_window_edges_on_reference_zeros(tmp_path, capsys):
    separated = {**BVP, "C": [[1, 1], [0, 0]], "D": [[0, 0], [1, 2]]}
    reference = tmp_path / "ref.json"
    reference.write_text(json.dumps(separated, indent=2), encoding="utf-8")
    perturbed = tmp_path / "bvp.json"
    perturbed.write_text(json.dumps({**separated, "Q": [
        [{"kind": "zero"}, {"kind": "constant", "data": 0.3}],
        [{"kind": "constant", "data": 0.2}, {"kind": "zero"}]]}, indent=2), encoding="utf-8")
    assert main(["compare", str(perturbed), "--reference", str(reference), "--window=0,18.84955592153876"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["spectrum"]["window"] == pytest.approx([0.0, 6 * math.pi], abs=1e-10)
    assert payload["reference"]["window"] == pytest.approx([0.0, 6 * math.pi], abs=1e-10)
    assert payload["pairing"]["mismatch"] is None
