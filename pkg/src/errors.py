"""
错误类型 - 所有模块共享的异常层次
ValidationError 对应输入/约定违例（CLI 退出码 1），NumericalError 对应数值失败（退出码 2）
"""

from typing import Any, Optional


class DiracSpecError(Exception):
    """所有错误的基类，附带结构化上下文"""

    exit_code = 2

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context = context
        for key, value in context.items():
            setattr(self, key, value)

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "message": self.message,
                **{k: repr(v) for k, v in self.context.items()}}


class ValidationError(DiracSpecError):
    exit_code = 1


class NumericalError(DiracSpecError):
    exit_code = 2


# bvp-core
class NonSeparated(ValidationError):
    pass


class SignChange(ValidationError):
    pass


class ZeroWeight(ValidationError):
    pass


class BoundViolated(ValidationError):
    pass


class IndexOutOfRange(ValidationError):
    pass


class XOutOfDomain(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


# fundamental
class OrderMismatch(ValidationError):
    pass


class BlockDiagonalityViolated(ValidationError):
    pass


class StepLimitExceeded(NumericalError):
    pass


class NonFiniteValue(NumericalError):
    pass


# boundary
class RankDeficientPair(ValidationError):
    pass


class NotRegular(ValidationError):
    pass


class NotCanonical(ValidationError):
    pass


class IntegrationFailure(NumericalError):
    pass


# spectra
class InsufficientTerms(ValidationError):
    pass


class SignPatternViolated(ValidationError):
    pass


class WindingMismatch(NumericalError):
    pass


class ContourThroughZero(NumericalError):
    pass


class NotAnEigenvalue(NumericalError):
    pass


class CountMismatch(NumericalError):
    pass


# transform-kernels
class EqualWeights(ValidationError):
    pass


class KernelMissing(ValidationError):
    pass


class NoConvergence(NumericalError):
    pass


# riesz
class GridMismatch(ValidationError):
    pass


class NotSimpleZero(NumericalError):
    pass


class DegeneratePairing(NumericalError):
    pass


# timoshenko
class SpeedSeparationUnknown(ValidationError):
    pass


class SpeedsNotEqual(ValidationError):
    pass


class RegimeUndetermined(ValidationError):
    pass


class RegularityViolated(ValidationError):
    pass


# cli
class ParseError(ValidationError):
    """输入文件解析失败，附带行号/字段路径"""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None, **context: Any):
        location = []
        if line is not None:
            location.append(f"第{line}行")
        if field:
            location.append(f"字段 {field}")
        full = f"{message} ({', '.join(location)})" if location else message
        super().__init__(full, line=line, field=field, **context)
