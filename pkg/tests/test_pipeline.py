"""
测试运行配置校验与报告输出
"""

import sys
import os

# 添加父目录到Python路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import json

import numpy as np
import pandas as pd
import pytest

from src.errors import ValidationError
from src.pipeline import RunConfig, get_pipeline, pipeline_map
from src.tools.report_writer import flatten, to_jsonable, write_csv, write_json, write_report


@pytest.mark.parametrize("kwargs", [
    {"window": (2.0, 2.0)},
    {"window": (0.0, 1.0), "strip": 0.0},
    {"window": (0.0, 1.0), "tol": -1e-3},
    {"window": (0.0, 1.0), "jobs": 0},
    {"fmt": "xml"},
])
def test_run_config_rejects(kwargs):
    with pytest.raises(ValidationError):
        RunConfig(command="spectrum", input="x.json", **kwargs)


def test_run_config_window_required():
    config = RunConfig(command="spectrum", input="x.json")
    with pytest.raises(ValidationError):
        config.require_window()
    assert RunConfig(command="spectrum", input="x.json", window=[0, 3]).window == (0.0, 3.0)


def test_pipeline_registry():
    assert set(pipeline_map) == {"validate", "classify", "spectrum", "compare", "timoshenko"}
    assert get_pipeline("compare").name == "compare"
    with pytest.raises(ValidationError):
        get_pipeline("bogus")


def test_to_jsonable():
    data = {"z": 1 + 2j, "a": np.array([1.5, np.nan]), "n": np.int64(3), "inf": float("inf"), "t": (np.bool_(True),)}
    assert to_jsonable(data) == {"z": [1.0, 2.0], "a": [1.5, None], "n": 3, "inf": "inf", "t": [True]}


def test_json_uses_fixed_float_format():
    value = 0.1 + 0.2
    text = write_json({"x": value, "y": 1 / 3, "n": 3, "z": 1 - 0.5j})
    assert '"x": 3.000000000000e-01' in text
    assert '"n": 3' in text
    parsed = json.loads(text)
    assert parsed["y"] == pytest.approx(1 / 3, rel=1e-12)
    assert parsed["z"] == [1.0, -0.5]
    assert text == write_json({"z": 1 - 0.5j, "n": 3, "y": 1 / 3, "x": value})
    assert '"x": 0.3' in write_json({"x": value}, float_format="%.1f")
    assert json.loads(write_json({"x": value}, float_format="%.17g"))["x"] == value


def test_csv_uses_fixed_float_format(tmp_path):
    frame = pd.DataFrame({"re": [1.0], "im": [-0.5]})
    text = write_csv(frame, tmp_path / "sub" / "out.csv")
    assert text.splitlines() == ["re,im", "1.000000000000e+00,-5.000000000000e-01"]
    assert (tmp_path / "sub" / "out.csv").read_text(encoding="utf-8") == text


def test_write_report_dispatch():
    report = {"status": "strict", "reason": {"clause": "ln-clause"}}
    frame = flatten(report)
    assert list(frame.columns) == ["status", "reason.clause"]
    assert write_report(report, "csv").splitlines()[0] == "status,reason.clause"
    assert json.loads(write_report(report, "json")) == report
    with pytest.raises(ValueError):
        write_report(report, "xml")
