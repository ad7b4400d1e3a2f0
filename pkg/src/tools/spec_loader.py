"""
规格文件解析 - "dirac-bvp/1" 与 "tim-beam/1"（UTF-8 JSON）

复数写作数字或 [re, im]；标量函数写作 {"kind": ..., "data": ...}：
  zero                 data 省略
  constant             data = 数值
  piecewise-polynomial data = {"breaks": [...], "coefficients": [[升幂系数], ...]}
  tabulated            data = {"nodes": [...], "values": [...]}
"""

import json
import logging
from pathlib import Path
from typing import Any, List, Literal, Optional, Tuple, Union

import numpy as np
import pydantic
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..bvp_core import (CommensurateDeclaration, ConstantFunction, DiracBVP, PiecewisePolynomial, PotentialMatrix,
                        ScalarFunction, TabulatedFunction, ZeroFunction, build_dirac_bvp)
from ..errors import ParseError
from ..timoshenko import TimoshenkoModel

logger = logging.getLogger(__name__)

BVP_SCHEMA = "dirac-bvp/1"
BEAM_SCHEMA = "tim-beam/1"

ComplexLike = Union[float, Tuple[float, float]]


def to_complex(value: ComplexLike) -> complex:
    if isinstance(value, (tuple, list)):
        return complex(value[0], value[1])
    return complex(value)


def from_complex(value: complex) -> ComplexLike:
    value = complex(value)
    return value.real if value.imag == 0 else (value.real, value.imag)


class FunctionSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["zero", "constant", "piecewise-polynomial", "tabulated"]
    data: Any = None

    @model_validator(mode="after")
    def check_data(self):
        if self.kind == "zero":
            return self
        if self.data is None:
            raise ValueError(f"kind={self.kind} 需要 data")
        if self.kind == "constant":
            to_complex(self.data)
        elif self.kind == "piecewise-polynomial":
            if not isinstance(self.data, dict) or set(self.data) != {"breaks", "coefficients"}:
                raise ValueError("piecewise-polynomial 的 data 需要 breaks 与 coefficients")
        elif not isinstance(self.data, dict) or set(self.data) != {"nodes", "values"}:
            raise ValueError("tabulated 的 data 需要 nodes 与 values")
        return self

    def build(self) -> ScalarFunction:
        if self.kind == "zero":
            return ZeroFunction()
        if self.kind == "constant":
            value = to_complex(self.data)
            return ZeroFunction() if value == 0 else ConstantFunction(value)
        if self.kind == "piecewise-polynomial":
            coefficients = [[to_complex(c) for c in piece] for piece in self.data["coefficients"]]
            return PiecewisePolynomial(self.data["breaks"], coefficients)
        return TabulatedFunction(self.data["nodes"], [to_complex(v) for v in self.data["values"]])

    @classmethod
    def describe(cls, fn: ScalarFunction) -> "FunctionSpec":
        """反向：由标量函数生成规格条目"""
        if isinstance(fn, ZeroFunction):
            return cls(kind="zero")
        if isinstance(fn, ConstantFunction):
            return cls(kind="constant", data=from_complex(fn.value))
        if isinstance(fn, PiecewisePolynomial):
            return cls(kind="piecewise-polynomial",
                       data={"breaks": fn.breaks.tolist(),
                             "coefficients": [[from_complex(c) for c in piece] for piece in fn.coefficients]})
        if isinstance(fn, TabulatedFunction):
            return cls(kind="tabulated",
                       data={"nodes": fn.nodes.tolist(), "values": [from_complex(v) for v in fn.values]})
        raise TypeError(f"无法序列化的函数类型: {type(fn).__name__}")


class CommensurateSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    base: float = Field(gt=0)
    multiples: List[int]


class BVPSpec(BaseModel):
    """dirac-bvp/1"""

    model_config = ConfigDict(extra="forbid")

    schema_: Literal["dirac-bvp/1"] = Field(alias="schema")
    n: int = Field(ge=1)
    ell: float = Field(gt=0)
    weights: List[FunctionSpec]
    Q: Optional[List[List[FunctionSpec]]] = None
    C: List[List[ComplexLike]]
    D: List[List[ComplexLike]]
    bound: Optional[float] = Field(default=None, gt=0)
    commensurate: Optional[CommensurateSpec] = None

    @model_validator(mode="after")
    def check_shapes(self):
        n = self.n
        if len(self.weights) != n:
            raise ValueError(f"weights 应有 {n} 项，实际 {len(self.weights)}")
        if self.Q is not None and (len(self.Q) != n or any(len(row) != n for row in self.Q)):
            raise ValueError(f"Q 应为 {n}×{n}")
        for name in ("C", "D"):
            rows = getattr(self, name)
            if len(rows) != n or any(len(row) != n for row in rows):
                raise ValueError(f"{name} 应为 {n}×{n}")
        if self.commensurate is not None and len(self.commensurate.multiples) != n:
            raise ValueError("commensurate.multiples 的长度应与 n 一致")
        return self

    def build(self) -> DiracBVP:
        weights = [w.build() for w in self.weights]
        Q = None if self.Q is None else PotentialMatrix(tuple(tuple(e.build() for e in row) for row in self.Q))
        C = np.array([[to_complex(v) for v in row] for row in self.C], dtype=complex)
        D = np.array([[to_complex(v) for v in row] for row in self.D], dtype=complex)
        commensurate = None
        if self.commensurate is not None:
            commensurate = CommensurateDeclaration(base=self.commensurate.base,
                                                   multiples=tuple(self.commensurate.multiples))
        return build_dirac_bvp(weights, Q, C, D, self.ell, bound=self.bound, commensurate=commensurate)


class BeamSpec(BaseModel):
    """tim-beam/1"""

    model_config = ConfigDict(extra="forbid")

    schema_: Literal["tim-beam/1"] = Field(alias="schema")
    ell: float = Field(gt=0)
    rho: FunctionSpec
    I_rho: FunctionSpec
    K: FunctionSpec
    EI: FunctionSpec
    p1: FunctionSpec = FunctionSpec(kind="zero")
    p2: FunctionSpec = FunctionSpec(kind="zero")
    alpha1: ComplexLike
    alpha2: ComplexLike
    gamma1: ComplexLike = 0.0
    gamma2: ComplexLike = 0.0
    speeds: Optional[Literal["separated", "equal"]] = None
    rational: Optional[Tuple[int, int]] = None
    bound: Optional[float] = Field(default=None, gt=0)

    @field_validator("rational")
    @classmethod
    def check_rational(cls, value):
        if value is not None and (value[0] <= 0 or value[1] <= 0):
            raise ValueError("rational 应为正整数对 [n1, n2]")
        return value

    def build(self) -> TimoshenkoModel:
        return TimoshenkoModel(rho=self.rho.build(), I_rho=self.I_rho.build(), K=self.K.build(), EI=self.EI.build(),
                               ell=self.ell, alpha1=to_complex(self.alpha1), alpha2=to_complex(self.alpha2),
                               gamma1=to_complex(self.gamma1), gamma2=to_complex(self.gamma2),
                               p1=self.p1.build(), p2=self.p2.build(), bound=self.bound, speeds=self.speeds,
                               rational=self.rational)


SCHEMAS = {BVP_SCHEMA: BVPSpec, BEAM_SCHEMA: BeamSpec}


def _line_of(text: str, loc: Tuple[Any, ...]) -> Optional[int]:
    """按字段路径在原文中依次定位键名，返回行号（1 起）"""
    position = 0
    found = None
    for part in loc:
        if isinstance(part, int):
            continue
        idx = text.find(f'"{part}"', position)
        if idx < 0:
            break
        position = idx
        found = text.count("\n", 0, idx) + 1
    return found


def parse_text(text: str, source: str = "<string>") -> Union[BVPSpec, BeamSpec]:
    """
    解析规格文本

    Args:
        text: JSON 文本
        source: 用于诊断信息的来源名

    Returns:
        BVPSpec 或 BeamSpec，由 schema 字段决定

    Raises:
        ParseError: JSON 语法错误、未知 schema 或字段校验失败（附行号与字段路径）
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{source}:{e.lineno}:{e.colno}: JSON 语法错误: {e.msg}",
                         line=e.lineno, column=e.colno, field=None, source=source) from e
    if not isinstance(document, dict):
        raise ParseError(f"{source}: 顶层应为对象", line=1, field=None, source=source)
    schema = document.get("schema")
    if schema not in SCHEMAS:
        raise ParseError(f"{source}: 未知的 schema {schema!r}，支持 {sorted(SCHEMAS)}",
                         line=_line_of(text, ("schema",)), field="schema", source=source)
    try:
        return SCHEMAS[schema].model_validate(document)
    except pydantic.ValidationError as e:
        first = e.errors()[0]
        loc = tuple(first.get("loc", ()))
        field = ".".join(str(p) for p in loc) or None
        line = _line_of(text, loc)
        raise ParseError(f"{source}:{line}: 字段 {field}: {first.get('msg')}",
                         line=line, field=field, source=source, count=e.error_count()) from e


def load_spec(path: Union[str, Path]) -> Union[BVPSpec, BeamSpec]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ParseError(f"无法读取 {path}: {e}", line=None, field=None, source=str(path)) from e
    spec = parse_text(text, source=str(path))
    logger.info("读取 %s (%s)", path, spec.schema_)
    return spec


def load_bvp(path: Union[str, Path]) -> DiracBVP:
    spec = load_spec(path)
    if not isinstance(spec, BVPSpec):
        raise ParseError(f"{path}: 需要 {BVP_SCHEMA} 文件", line=_line_of(Path(path).read_text("utf-8"), ("schema",)),
                         field="schema", source=str(path))
    return spec.build()


def load_beam(path: Union[str, Path]) -> TimoshenkoModel:
    spec = load_spec(path)
    if not isinstance(spec, BeamSpec):
        raise ParseError(f"{path}: 需要 {BEAM_SCHEMA} 文件", line=_line_of(Path(path).read_text("utf-8"), ("schema",)),
                         field="schema", source=str(path))
    return spec.build()


def dump_spec(spec: Union[BVPSpec, BeamSpec], path: Optional[Union[str, Path]] = None) -> str:
    """规范序列化：按别名输出、键排序、两空格缩进"""
    text = json.dumps(spec.model_dump(mode="json", by_alias=True, exclude_none=True), sort_keys=True, indent=2,
                      ensure_ascii=False) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
