"""
报告输出 - CSV（pandas）与 JSON（键排序），浮点数统一按 float_format 输出
"""

import json
import logging
import re
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np
import pandas as pd

from ..config_loader import get_setting

logger = logging.getLogger(__name__)

_FLOAT_TAG = "@@float@@"
_FLOAT_PATTERN = re.compile(f"\"{_FLOAT_TAG}([^\"]*){_FLOAT_TAG}\"")


def to_jsonable(value: Any) -> Any:
    """numpy 标量/数组、复数与元组转换为 JSON 可表示的对象"""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, float) and not np.isfinite(value):
        return None if np.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


def _emit(text: str, out: Optional[Union[str, Path]]) -> str:
    if out is not None:
        path = Path(out)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        logger.info("报告已写入 %s", path)
    return text


def _tag_floats(value: Any, float_format: str) -> Any:
    if isinstance(value, dict):
        return {k: _tag_floats(v, float_format) for k, v in value.items()}
    if isinstance(value, list):
        return [_tag_floats(v, float_format) for v in value]
    if isinstance(value, float):
        return f"{_FLOAT_TAG}{float_format % value}{_FLOAT_TAG}"
    return value


def write_json(data: Any, out: Optional[Union[str, Path]] = None, float_format: Optional[str] = None) -> str:
    """浮点数按配置 float_format 输出（与 CSV 一致），键排序"""
    float_format = float_format or str(get_setting("float_format"))
    tagged = _tag_floats(to_jsonable(data), float_format)
    text = json.dumps(tagged, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"
    return _emit(_FLOAT_PATTERN.sub(r"\1", text), out)


def write_csv(frame: pd.DataFrame, out: Optional[Union[str, Path]] = None,
              float_format: Optional[str] = None) -> str:
    float_format = float_format or str(get_setting("float_format"))
    text = frame.to_csv(index=False, float_format=float_format, lineterminator="\n")
    return _emit(text, out)


def flatten(data: dict) -> pd.DataFrame:
    """没有表格形式的报告展开为单行"""
    return pd.json_normalize(to_jsonable(data), sep=".")


def write_report(report: Any, fmt: str = "json", out: Optional[Union[str, Path]] = None) -> str:
    """
    输出报告

    Args:
        report: 带 to_dict() 的报告对象或字典；CSV 输出优先使用 to_frame()
        fmt: "json" 或 "csv"
        out: 输出路径，None 时只返回文本

    Returns:
        str: 写出的文本
    """
    if fmt == "json":
        data = report.to_dict() if hasattr(report, "to_dict") else report
        return write_json(data, out)
    if fmt == "csv":
        if hasattr(report, "to_frame"):
            frame = report.to_frame()
        elif isinstance(report, pd.DataFrame):
            frame = report
        else:
            frame = flatten(report.to_dict() if hasattr(report, "to_dict") else report)
        return write_csv(frame, out)
    raise ValueError(f"未知的输出格式: {fmt}")
