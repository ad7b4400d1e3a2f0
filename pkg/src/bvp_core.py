"""
BVP 核心类型 - 权函数、势矩阵、边界条件对以及 Dirac 型边值问题

所有类型构造后不可变，可在多个工作线程间并发读取。
下标统一从 0 开始。
"""

import hashlib
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly

from .config_loader import get_setting
from .errors import (BoundViolated, DimensionMismatch, IndexOutOfRange, NonSeparated, RankDeficientPair,
                     SignChange, ValidationError, XOutOfDomain, ZeroWeight)

logger = logging.getLogger(__name__)

_DOMAIN_SLACK = 1e-12


# ---------------------------------------------------------------------------
# 标量函数
# ---------------------------------------------------------------------------

class ScalarFunction(ABC):
    """[0, ℓ] 上的标量函数（常数 / 分段多项式 / 表格插值 / 零）"""

    @abstractmethod
    def __call__(self, x):
        """逐点求值，x 可以是标量或数组"""

    @abstractmethod
    def antiderivative(self, x):
        """∫₀ˣ f(t) dt"""

    @abstractmethod
    def derivative(self, x):
        """f′(x)，在断点处取右导数"""

    @abstractmethod
    def key(self) -> tuple:
        """结构化表示，用于恒等判定与缓存键"""

    @abstractmethod
    def conjugate(self) -> "ScalarFunction":
        pass

    @abstractmethod
    def scale(self, c: complex) -> "ScalarFunction":
        pass

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        """可能不连续的内部点"""
        return ()

    @property
    def is_real(self) -> bool:
        return True

    def critical_points(self) -> np.ndarray:
        """极值候选点（用于 θ 的认证）"""
        return np.empty(0)

    def is_zero(self) -> bool:
        return False

    def __eq__(self, other):
        return isinstance(other, ScalarFunction) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())


def _complex_key(value: complex) -> tuple:
    value = complex(value)
    return (float(value.real), float(value.imag))


class ZeroFunction(ScalarFunction):
    """恒为零的函数（势矩阵的结构零元）"""

    def __call__(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def antiderivative(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def derivative(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def key(self) -> tuple:
        return ("zero",)

    def conjugate(self) -> "ScalarFunction":
        return self

    def scale(self, c: complex) -> "ScalarFunction":
        return self

    def is_zero(self) -> bool:
        return True

    def __repr__(self):
        return "ZeroFunction()"


class ConstantFunction(ScalarFunction):
    def __init__(self, value: complex):
        value = complex(value)
        self.value = value.real if value.imag == 0 else value

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape, self.value, dtype=complex if not self.is_real else float)

    def antiderivative(self, x):
        return self.value * np.asarray(x, dtype=float)

    def derivative(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    def key(self) -> tuple:
        return ("constant", _complex_key(self.value))

    @property
    def is_real(self) -> bool:
        return not isinstance(self.value, complex)

    def conjugate(self) -> "ScalarFunction":
        return ConstantFunction(np.conj(self.value))

    def scale(self, c: complex) -> "ScalarFunction":
        if c == 0:
            return ZeroFunction()
        return ConstantFunction(self.value * c)

    def is_zero(self) -> bool:
        return self.value == 0

    def __repr__(self):
        return f"ConstantFunction({self.value!r})"


class PiecewisePolynomial(ScalarFunction):
    """
    分段多项式：第 i 段在 [breaks[i], breaks[i+1]) 上为 Σ c_{i,p} (x − breaks[i])^p

    Args:
        breaks: 递增断点，首尾为定义域端点
        coefficients: 每段的升幂系数
    """

    def __init__(self, breaks: Sequence[float], coefficients: Sequence[Sequence[complex]]):
        self.breaks = np.asarray(breaks, dtype=float)
        if self.breaks.ndim != 1 or len(self.breaks) < 2 or np.any(np.diff(self.breaks) <= 0):
            raise ValidationError("分段多项式的断点必须严格递增且至少两个")
        if len(coefficients) != len(self.breaks) - 1:
            raise DimensionMismatch("分段多项式的段数与断点数不一致",
                                    pieces=len(coefficients), breaks=len(self.breaks))
        coeffs = [np.atleast_1d(np.asarray(c, dtype=complex)) for c in coefficients]
        self._real = all(np.all(c.imag == 0) for c in coeffs)
        self.coefficients = [c.real if self._real else c for c in coeffs]
        self._antider = [npoly.polyint(c) for c in self.coefficients]
        self._deriv = [npoly.polyder(c) if len(c) > 1 else np.zeros(1) for c in self.coefficients]
        widths = np.diff(self.breaks)
        piece_integrals = [npoly.polyval(w, a) for w, a in zip(widths, self._antider)]
        self._cumulative = np.concatenate([[0.0], np.cumsum(piece_integrals)])
        # ∫₀^{breaks[0]} 用首段外推
        self._offset = -npoly.polyval(-self.breaks[0], self._antider[0]) if self.breaks[0] != 0 else 0.0

    def _piece_index(self, x: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.breaks, x, side="right") - 1
        return np.clip(idx, 0, len(self.coefficients) - 1)

    def _apply(self, x, table: List[np.ndarray]):
        x = np.asarray(x, dtype=float)
        idx = self._piece_index(x)
        out = np.zeros(x.shape, dtype=float if self._real else complex)
        for i, c in enumerate(table):
            mask = idx == i
            if np.any(mask):
                out[mask] = npoly.polyval(x[mask] - self.breaks[i], c)
        return out

    def __call__(self, x):
        return self._apply(x, self.coefficients)

    def derivative(self, x):
        return self._apply(x, self._deriv)

    def antiderivative(self, x):
        x = np.asarray(x, dtype=float)
        idx = self._piece_index(x)
        out = np.zeros(x.shape, dtype=float if self._real else complex)
        for i, a in enumerate(self._antider):
            mask = idx == i
            if np.any(mask):
                out[mask] = self._cumulative[i] + npoly.polyval(x[mask] - self.breaks[i], a)
        return out + self._offset

    def key(self) -> tuple:
        return ("piecewise-polynomial", tuple(self.breaks.tolist()),
                tuple(tuple(_complex_key(v) for v in c) for c in self.coefficients))

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return tuple(self.breaks[1:-1].tolist())

    @property
    def is_real(self) -> bool:
        return self._real

    def critical_points(self) -> np.ndarray:
        points = [self.breaks]
        for i, d in enumerate(self._deriv):
            if len(d) < 2 or not self._real:
                continue
            roots = npoly.polyroots(d)
            roots = roots[np.abs(roots.imag) < 1e-12].real
            width = self.breaks[i + 1] - self.breaks[i]
            points.append(self.breaks[i] + roots[(roots >= 0) & (roots <= width)])
        return np.unique(np.concatenate(points))

    def conjugate(self) -> "ScalarFunction":
        return PiecewisePolynomial(self.breaks, [np.conj(c) for c in self.coefficients])

    def scale(self, c: complex) -> "ScalarFunction":
        if c == 0:
            return ZeroFunction()
        return PiecewisePolynomial(self.breaks, [c * a for a in self.coefficients])

    def is_zero(self) -> bool:
        return all(np.all(c == 0) for c in self.coefficients)

    def __repr__(self):
        return f"PiecewisePolynomial(breaks={self.breaks.tolist()}, pieces={len(self.coefficients)})"


class TabulatedFunction(ScalarFunction):
    """表格数据 + 线性插值，节点外常数延拓；原函数按梯形公式精确累积"""

    def __init__(self, nodes: Sequence[float], values: Sequence[complex]):
        self.nodes = np.asarray(nodes, dtype=float)
        vals = np.asarray(values, dtype=complex)
        if self.nodes.ndim != 1 or len(self.nodes) < 2 or np.any(np.diff(self.nodes) <= 0):
            raise ValidationError("表格函数的节点必须严格递增且至少两个")
        if vals.shape != self.nodes.shape:
            raise DimensionMismatch("表格函数节点与数值长度不一致",
                                    nodes=len(self.nodes), values=len(vals))
        self._real = bool(np.all(vals.imag == 0))
        self.values = vals.real if self._real else vals
        self._slopes = np.diff(self.values) / np.diff(self.nodes)
        steps = 0.5 * (self.values[1:] + self.values[:-1]) * np.diff(self.nodes)
        self._cumulative = np.concatenate([[0.0], np.cumsum(steps)])
        self._origin = self._raw_antiderivative(np.asarray(0.0))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self._real:
            return np.interp(x, self.nodes, self.values)
        return np.interp(x, self.nodes, self.values.real) + 1j * np.interp(x, self.nodes, self.values.imag)

    def _raw_antiderivative(self, x: np.ndarray):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.nodes, x, side="right") - 1, 0, len(self.nodes) - 2)
        d = x - self.nodes[idx]
        inside = self._cumulative[idx] + self.values[idx] * d + 0.5 * self._slopes[idx] * d * d
        left = (x - self.nodes[0]) * self.values[0]
        right = self._cumulative[-1] + (x - self.nodes[-1]) * self.values[-1]
        return np.where(x < self.nodes[0], left, np.where(x > self.nodes[-1], right, inside))

    def antiderivative(self, x):
        return self._raw_antiderivative(x) - self._origin

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.nodes, x, side="right") - 1, 0, len(self.nodes) - 2)
        inside = (x >= self.nodes[0]) & (x <= self.nodes[-1])
        return np.where(inside, self._slopes[idx], 0.0)

    def key(self) -> tuple:
        digest = hashlib.sha1(self.nodes.tobytes() + np.asarray(self.values, dtype=complex).tobytes()).hexdigest()
        return ("tabulated", len(self.nodes), digest)

    @property
    def is_real(self) -> bool:
        return self._real

    def critical_points(self) -> np.ndarray:
        return self.nodes

    def conjugate(self) -> "ScalarFunction":
        return TabulatedFunction(self.nodes, np.conj(self.values))

    def scale(self, c: complex) -> "ScalarFunction":
        if c == 0:
            return ZeroFunction()
        return TabulatedFunction(self.nodes, c * self.values)

    def is_zero(self) -> bool:
        return bool(np.all(self.values == 0))

    def __repr__(self):
        return f"TabulatedFunction(nodes={len(self.nodes)})"


WeightFunction = ScalarFunction


def as_function(value) -> ScalarFunction:
    """数字转换为常数函数，零转换为 ZeroFunction"""
    if isinstance(value, ScalarFunction):
        return value
    if value == 0:
        return ZeroFunction()
    return ConstantFunction(value)


def tabulate(fn: Callable[[np.ndarray], np.ndarray], ell: float, nodes: int = 2049) -> TabulatedFunction:
    """在 [0, ℓ] 的均匀网格上把任意可调用对象制表"""
    grid = np.linspace(0.0, ell, nodes)
    return TabulatedFunction(grid, fn(grid))


# ---------------------------------------------------------------------------
# 单调函数的反函数
# ---------------------------------------------------------------------------

class MonotoneMap:
    """
    [0, ℓ] 上严格单调的函数 g，区间外按端点斜率线性延拓。
    反函数用二分法加 Newton 修正求到 1e-13 绝对精度。
    """

    def __init__(self, fn: Callable, dfn: Callable, ell: float, linear_slope: Optional[float] = None,
                 offset: float = 0.0):
        self.fn = fn
        self.dfn = dfn
        self.ell = ell
        self.linear_slope = linear_slope
        self.offset = offset
        self.g0 = float(np.real(fn(np.asarray(0.0))))
        self.gl = float(np.real(fn(np.asarray(ell))))
        self.slope0 = float(np.real(dfn(np.asarray(0.0))))
        self.slopel = float(np.real(dfn(np.asarray(ell - 1e-15 * max(ell, 1.0)))))
        self.increasing = self.gl > self.g0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.linear_slope is not None:
            return self.offset + self.linear_slope * x
        inner = np.real(self.fn(np.clip(x, 0.0, self.ell)))
        return np.where(x < 0, self.g0 + self.slope0 * x,
                        np.where(x > self.ell, self.gl + self.slopel * (x - self.ell), inner))

    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        if self.linear_slope is not None:
            return (y - self.offset) / self.linear_slope
        shape = y.shape
        y = np.atleast_1d(y).ravel()
        lo_val, hi_val = (self.g0, self.gl) if self.increasing else (self.gl, self.g0)
        low, high = y < lo_val, y > hi_val
        left = (y - self.g0) / self.slope0
        right = self.ell + (y - self.gl) / self.slopel
        result = np.where(low == self.increasing, left, right)
        inside = ~(low | high)
        if np.any(inside):
            result[inside] = self._bisect(y[inside])
        return result.reshape(shape)

    def _bisect(self, target: np.ndarray) -> np.ndarray:
        lo = np.zeros_like(target)
        hi = np.full_like(target, self.ell)
        sign = 1.0 if self.increasing else -1.0
        for _ in range(48):
            mid = 0.5 * (lo + hi)
            below = sign * (np.real(self.fn(mid)) - target) < 0
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        x = 0.5 * (lo + hi)
        for _ in range(3):
            slope = np.real(self.dfn(x))
            step = (np.real(self.fn(x)) - target) / np.where(slope == 0, 1.0, slope)
            x = np.clip(x - step, lo - 1e-12, hi + 1e-12)
        return np.clip(x, 0.0, self.ell)


# ---------------------------------------------------------------------------
# 权函数剖面
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CommensurateDeclaration:
    """声明 b_k = N_k·base（整数倍），只接受显式声明，不从浮点数推断"""

    base: float
    multiples: Tuple[int, ...]

    def permuted(self, order: Sequence[int]) -> "CommensurateDeclaration":
        return CommensurateDeclaration(self.base, tuple(self.multiples[i] for i in order))


@dataclass(frozen=True)
class SignatureData:
    S: np.ndarray
    P_plus: np.ndarray
    P_minus: np.ndarray


@dataclass(frozen=True, eq=False)
class WeightProfile:
    """对角权 B(x) = diag(β_1, …, β_n)，已按规范顺序排列"""

    entries: Tuple[ScalarFunction, ...]
    ell: float
    b: np.ndarray
    n_minus: int
    theta: float
    b_minus: float
    b_plus: float
    blocks: Tuple[Tuple[int, ...], ...]
    order: Tuple[int, ...]
    commensurate: Optional[CommensurateDeclaration] = None
    bound: Optional[float] = None
    _maps: Dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def n_plus(self) -> int:
        return self.n - self.n_minus

    @property
    def block_partition(self) -> Tuple[int, ...]:
        return tuple(len(block) for block in self.blocks)

    @property
    def simple_spectrum(self) -> bool:
        return all(len(block) == 1 for block in self.blocks)

    @property
    def signs(self) -> np.ndarray:
        return np.where(self.b < 0, -1.0, 1.0)

    def block_of(self, k: int) -> int:
        for idx, block in enumerate(self.blocks):
            if k in block:
                return idx
        raise IndexOutOfRange(f"下标越界: {k}", index=k)

    def same_weight(self, j: int, k: int) -> bool:
        """β_j ≡ β_k（结构判定）"""
        return self.block_of(j) == self.block_of(k)

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        points = set()
        for entry in self.entries:
            points.update(entry.breakpoints)
        return tuple(sorted(p for p in points if 0 < p < self.ell))

    def beta(self, k: int, x):
        return np.real(self.entries[k](np.clip(np.asarray(x, dtype=float), 0.0, self.ell)))

    def beta_all(self, x) -> np.ndarray:
        """形状 (n, len(x)) 的 β 值"""
        return np.stack([self.beta(k, x) for k in range(self.n)])

    def rho(self, k: int, x):
        """ρ_k(x)，x 超出 [0, ℓ] 时按常数延拓的权线性延拓"""
        return self.rho_map(k)(x)

    def rho_all(self, x) -> np.ndarray:
        return np.stack([self.rho(k, x) for k in range(self.n)])

    def rho_map(self, k: int) -> MonotoneMap:
        key = ("rho", k)
        if key not in self._maps:
            entry = self.entries[k]
            slope = float(entry.value) if isinstance(entry, ConstantFunction) else None
            self._maps[key] = MonotoneMap(lambda x, e=entry: np.real(e.antiderivative(x)),
                                          lambda x, e=entry: np.real(e(x)), self.ell, slope)
        return self._maps[key]

    def rho_inverse(self, k: int, y):
        return self.rho_map(k).inverse(y)

    def difference_map(self, j: int, k: int) -> MonotoneMap:
        """ρ_j − ρ_k（要求 β_j ≢ β_k）"""
        key = ("diff", j, k)
        if key not in self._maps:
            ej, ek = self.entries[j], self.entries[k]
            slope = None
            if isinstance(ej, ConstantFunction) and isinstance(ek, ConstantFunction):
                slope = float(ej.value) - float(ek.value)
            self._maps[key] = MonotoneMap(
                lambda x: np.real(ej.antiderivative(x) - ek.antiderivative(x)),
                lambda x: np.real(ej(x) - ek(x)), self.ell, slope)
        return self._maps[key]

    def key(self) -> tuple:
        return (tuple(e.key() for e in self.entries), float(self.ell))


def _sample_points(entries: Sequence[ScalarFunction], ell: float, grid: int) -> np.ndarray:
    pts = [np.linspace(0.0, ell, grid)]
    for entry in entries:
        cp = entry.critical_points()
        pts.append(cp[(cp >= 0) & (cp <= ell)])
        for bp in entry.breakpoints:
            # 断点两侧
            pts.append(np.array([bp - 1e-12 * ell, bp]))
    x = np.unique(np.concatenate(pts))
    return x[(x >= 0) & (x <= ell)]


def build_weight_profile(entries: Sequence[ScalarFunction], ell: float, theta_check_grid: Optional[int] = None,
                         bound: Optional[float] = None,
                         commensurate: Optional[CommensurateDeclaration] = None) -> WeightProfile:
    """
    构建规范顺序的权剖面

    Args:
        entries: 权函数列表（任意顺序）
        ell: 区间长度
        theta_check_grid: θ 认证网格点数，默认读取配置 theta_grid
        bound: 声明的界 M，要求 M⁻¹ ≤ |β| ≤ M
        commensurate: b_k 的整数倍声明（按输入顺序）

    Returns:
        WeightProfile: 规范排序后的剖面
    """
    if ell <= 0:
        raise XOutOfDomain(f"区间长度必须为正: {ell}", x=ell)
    entries = tuple(as_function(e) for e in entries)
    if not entries:
        raise DimensionMismatch("权函数列表为空")
    grid = int(theta_check_grid or get_setting("theta_grid"))
    x = _sample_points(entries, ell, grid)

    samples = []
    for k, entry in enumerate(entries):
        if not entry.is_real:
            raise ValidationError(f"权函数 {k} 必须为实值", index=k)
        values = np.real(entry(x))
        if entry.is_zero() or np.any(values == 0):
            bad = float(x[np.argmax(values == 0)]) if np.any(values == 0) else 0.0
            raise ZeroWeight(f"权函数 {k} 在 x={bad} 处为零", index=k, x=bad)
        if np.any(np.sign(values) != np.sign(values[0])):
            bad = float(x[np.argmax(np.sign(values) != np.sign(values[0]))])
            raise SignChange(f"权函数 {k} 在 x={bad} 附近变号", index=k, x=bad)
        if bound is not None and (np.min(np.abs(values)) < 1.0 / bound or np.max(np.abs(values)) > bound):
            raise BoundViolated(f"权函数 {k} 超出声明的界 M={bound}", index=k, bound=bound,
                                observed=(float(np.min(np.abs(values))), float(np.max(np.abs(values)))))
        samples.append(values)

    mid = np.real([e(np.asarray(0.5 * ell)) for e in entries])
    order = tuple(int(i) for i in np.argsort(mid, kind="stable"))
    ordered = tuple(entries[i] for i in order)
    ordered_samples = [samples[i] for i in order]

    blocks: List[List[int]] = [[0]]
    theta = np.inf
    for k in range(1, len(ordered)):
        if ordered[k].key() == ordered[k - 1].key():
            blocks[-1].append(k)
            continue
        gap = ordered_samples[k] - ordered_samples[k - 1]
        min_gap = float(np.min(gap))
        if min_gap <= 0:
            bad = float(x[np.argmin(gap)])
            raise NonSeparated(f"权函数 {order[k - 1]} 与 {order[k]} 既不恒等也不分离 (x={bad})",
                               pair=(order[k - 1], order[k]), x=bad)
        theta = min(theta, min_gap)
        blocks.append([k])
    theta = 0.0 if not np.isfinite(theta) else theta

    b = np.array([float(np.real(e.antiderivative(np.asarray(ell)))) for e in ordered])
    n_minus = int(np.sum(b < 0))
    if commensurate is not None:
        if len(commensurate.multiples) != len(entries):
            raise DimensionMismatch("可公度声明长度与权函数个数不一致")
        commensurate = commensurate.permuted(order)
        expected = commensurate.base * np.asarray(commensurate.multiples, dtype=float)
        if np.any(np.abs(expected - b) > 1e-12 * np.maximum(1.0, np.abs(b))):
            raise ValidationError("声明的可公度倍数与 b_k 不符", b=b.tolist(), declared=expected.tolist())

    profile = WeightProfile(entries=ordered, ell=float(ell), b=b, n_minus=n_minus, theta=theta,
                            b_minus=float(np.sum(b[:n_minus])), b_plus=float(np.sum(b[n_minus:])),
                            blocks=tuple(tuple(block) for block in blocks), order=order,
                            commensurate=commensurate, bound=bound)
    logger.debug("权剖面: b=%s, 分块=%s, θ=%.3e", b, profile.block_partition, theta)
    return profile


def evaluate_rho(profile: WeightProfile, k: int, x: float) -> float:
    """
    计算 ρ_k(x) = ∫₀ˣ β_k

    Args:
        profile: 权剖面
        k: 分量下标（0 起）
        x: 位置，0 ≤ x ≤ ℓ

    Returns:
        float: ρ_k(x)；x = ℓ 时精确返回缓存的 b_k
    """
    if not 0 <= k < profile.n:
        raise IndexOutOfRange(f"下标越界: {k}", index=k)
    if x < -_DOMAIN_SLACK * profile.ell or x > profile.ell * (1 + _DOMAIN_SLACK):
        raise XOutOfDomain(f"x={x} 不在 [0, {profile.ell}] 内", x=x)
    if x >= profile.ell:
        return float(profile.b[k])
    return float(profile.rho(k, max(float(x), 0.0)))


def signature_and_projectors(profile: WeightProfile) -> SignatureData:
    positive = (profile.b > 0).astype(float)
    P_plus = np.diag(positive)
    P_minus = np.diag(1.0 - positive)
    return SignatureData(S=P_plus - P_minus, P_plus=P_plus, P_minus=P_minus)


# ---------------------------------------------------------------------------
# 势矩阵与边界条件
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PotentialMatrix:
    entries: Tuple[Tuple[ScalarFunction, ...], ...]

    @classmethod
    def from_entries(cls, entries: Sequence[Sequence]) -> "PotentialMatrix":
        rows = tuple(tuple(as_function(v) for v in row) for row in entries)
        n = len(rows)
        if any(len(row) != n for row in rows):
            raise DimensionMismatch("势矩阵必须为方阵")
        return cls(rows)

    @classmethod
    def zeros(cls, n: int) -> "PotentialMatrix":
        return cls(tuple(tuple(ZeroFunction() for _ in range(n)) for _ in range(n)))

    @classmethod
    def constant(cls, matrix) -> "PotentialMatrix":
        matrix = np.asarray(matrix, dtype=complex)
        return cls.from_entries([[complex(v) for v in row] for row in matrix])

    @property
    def n(self) -> int:
        return len(self.entries)

    def __call__(self, x) -> np.ndarray:
        """形状 x.shape + (n, n) 的复数组"""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape + (self.n, self.n), dtype=complex)
        for j, row in enumerate(self.entries):
            for k, entry in enumerate(row):
                if not entry.is_zero():
                    out[..., j, k] = entry(x)
        return out

    def antiderivative(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape + (self.n, self.n), dtype=complex)
        for j, row in enumerate(self.entries):
            for k, entry in enumerate(row):
                if not entry.is_zero():
                    out[..., j, k] = entry.antiderivative(x)
        return out

    def trace_integral(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        total = np.zeros(x.shape, dtype=complex)
        for k in range(self.n):
            total = total + self.entries[k][k].antiderivative(x)
        return total

    def is_zero_entry(self, j: int, k: int) -> bool:
        return self.entries[j][k].is_zero()

    def is_constant(self) -> bool:
        return all(isinstance(e, (ConstantFunction, ZeroFunction)) for row in self.entries for e in row)

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        points = set()
        for row in self.entries:
            for entry in row:
                points.update(entry.breakpoints)
        return tuple(sorted(points))

    def permuted(self, order: Sequence[int]) -> "PotentialMatrix":
        return PotentialMatrix(tuple(tuple(self.entries[i][j] for j in order) for i in order))

    def conjugate_transpose(self) -> "PotentialMatrix":
        n = self.n
        return PotentialMatrix(tuple(tuple(self.entries[k][j].conjugate() for k in range(n)) for j in range(n)))

    def block_diagonal_part(self, profile: "WeightProfile") -> "PotentialMatrix":
        """保留 β_j ≡ β_k 的元素，其余置零"""
        n = self.n
        return PotentialMatrix(tuple(tuple(self.entries[j][k] if profile.same_weight(j, k) else ZeroFunction()
                                           for k in range(n)) for j in range(n)))

    def off_block_part(self, profile: "WeightProfile") -> "PotentialMatrix":
        n = self.n
        return PotentialMatrix(tuple(tuple(ZeroFunction() if profile.same_weight(j, k) else self.entries[j][k]
                                           for k in range(n)) for j in range(n)))

    def key(self) -> tuple:
        return tuple(tuple(e.key() for e in row) for row in self.entries)


@dataclass(frozen=True, eq=False)
class BoundaryPair:
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        C = np.atleast_2d(np.asarray(self.C, dtype=complex))
        D = np.atleast_2d(np.asarray(self.D, dtype=complex))
        if C.shape != D.shape or C.shape[0] != C.shape[1]:
            raise DimensionMismatch("C 与 D 必须为同阶方阵", C=C.shape, D=D.shape)
        n = C.shape[0]
        rank = np.linalg.matrix_rank(np.hstack([C, D]))
        if rank != n:
            raise RankDeficientPair(f"(C D) 的秩为 {rank}，应为 {n}", rank=rank, n=n)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "D", D)

    @property
    def n(self) -> int:
        return self.C.shape[0]

    def permuted(self, order: Sequence[int]) -> "BoundaryPair":
        order = list(order)
        return BoundaryPair(self.C[np.ix_(order, order)], self.D[np.ix_(order, order)])


@dataclass(frozen=True, eq=False)
class DiracBVP:
    """y′ = (iλB − Q)y,  Cy(0) + Dy(ℓ) = 0，全部数据按规范顺序存储"""

    profile: WeightProfile
    Q: PotentialMatrix
    boundary: BoundaryPair

    def __post_init__(self):
        if self.Q.n != self.profile.n or self.boundary.n != self.profile.n:
            raise DimensionMismatch("势矩阵、边界条件与权剖面维数不一致",
                                    Q=self.Q.n, boundary=self.boundary.n, weights=self.profile.n)

    @property
    def n(self) -> int:
        return self.profile.n

    @property
    def ell(self) -> float:
        return self.profile.ell

    @property
    def C(self) -> np.ndarray:
        return self.boundary.C

    @property
    def D(self) -> np.ndarray:
        return self.boundary.D

    @property
    def permutation(self) -> Tuple[int, ...]:
        """规范下标 i 对应输入下标 permutation[i]"""
        return self.profile.order

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        points = set(self.profile.breakpoints) | set(self.Q.breakpoints)
        return tuple(sorted(p for p in points if 0 < p < self.ell))

    def with_boundary(self, C, D) -> "DiracBVP":
        return replace(self, boundary=BoundaryPair(C, D))

    def with_potential(self, Q: PotentialMatrix) -> "DiracBVP":
        return replace(self, Q=Q)

    def cache_key(self) -> str:
        h = hashlib.sha1()
        h.update(repr(self.profile.key()).encode())
        h.update(repr(self.Q.key()).encode())
        h.update(self.C.tobytes())
        h.update(self.D.tobytes())
        return h.hexdigest()


def build_dirac_bvp(weights: Sequence, Q, C, D, ell: float, theta_check_grid: Optional[int] = None,
                    bound: Optional[float] = None,
                    commensurate: Optional[CommensurateDeclaration] = None) -> DiracBVP:
    """
    按输入顺序给出的数据构建规范顺序的 DiracBVP

    方程（C、D 的行）与未知量（列）用同一置换重排，Δ 与 J_± 保持不变。
    """
    profile = build_weight_profile(weights, ell, theta_check_grid, bound, commensurate)
    if Q is None:
        Q = PotentialMatrix.zeros(profile.n)
    elif not isinstance(Q, PotentialMatrix):
        Q = PotentialMatrix.from_entries(Q)
    if Q.n != profile.n:
        raise DimensionMismatch("势矩阵维数与权函数个数不一致", Q=Q.n, weights=profile.n)
    pair = BoundaryPair(C, D)
    if pair.n != profile.n:
        raise DimensionMismatch("边界矩阵维数与权函数个数不一致", boundary=pair.n, weights=profile.n)
    return DiracBVP(profile=profile, Q=Q.permuted(profile.order), boundary=pair.permuted(profile.order))


@dataclass
class BlockDiagonalReport:
    ok: bool
    violations: List[Tuple[int, int]]

    def __bool__(self) -> bool:
        return self.ok


def validate_zero_block_diagonal(Q: PotentialMatrix, profile: WeightProfile) -> BlockDiagonalReport:
    """检查 β_j ≡ β_k 时 Q_jk ≡ 0（按表示判定，不采样）"""
    if Q.n != profile.n:
        raise DimensionMismatch("势矩阵维数与权剖面不一致", Q=Q.n, weights=profile.n)
    violations = [(j, k) for j in range(Q.n) for k in range(Q.n)
                  if profile.same_weight(j, k) and not Q.is_zero_entry(j, k)]
    return BlockDiagonalReport(ok=not violations, violations=violations)
