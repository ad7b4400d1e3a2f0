"""
基本矩阵 Φ(x,λ) 的积分、无扰 Φ₀ 的闭式、Liouville 公式与子式提升系统

solve_fundamental 使用自适应 RK45（嵌入式 5(4) 对），分段数据的断点强制为网格节点；
monodromy_batch 用四阶 Magnus 格式一次计算大量 λ 的 Φ(ℓ,λ)，零点搜索使用它。
"""

import itertools
import logging
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .bvp_core import (ConstantFunction, DiracBVP, PiecewisePolynomial, WeightProfile, ZeroFunction,
                       validate_zero_block_diagonal)
from .config_loader import get_setting
from .errors import (BlockDiagonalityViolated, IndexOutOfRange, NonFiniteValue, OrderMismatch,
                     StepLimitExceeded, ValidationError, XOutOfDomain)

logger = logging.getLogger(__name__)

MAX_RHS_EVALUATIONS = 2_000_000


@dataclass
class FundamentalTrajectory:
    """
    Φ(x_i, λ) 的采样

    rescaled 时 values 存放 e^{−iλρ_r(x)}Φ(x,λ)，log_scale[i] = iλρ_r(x_i)。
    derivative 为 ∂Φ/∂λ（仅在未缩放时可用）。
    """

    lam: complex
    grid: np.ndarray
    values: np.ndarray
    log_scale: np.ndarray
    reference: Optional[int] = None
    derivative: Optional[np.ndarray] = None

    @property
    def rescaled(self) -> bool:
        return self.reference is not None

    @cached_property
    def dets(self) -> np.ndarray:
        n = self.values.shape[-1]
        return np.linalg.det(self.values) * np.exp(n * self.log_scale)

    def matrix(self, i: int = -1) -> np.ndarray:
        return self.values[i] * np.exp(self.log_scale[i])

    @property
    def end(self) -> np.ndarray:
        return self.matrix(-1)


def _forced_nodes(bvp: DiracBVP, steps: int) -> Tuple[np.ndarray, np.ndarray]:
    ell = bvp.ell
    forced = np.array([0.0, *bvp.breakpoints, ell])
    grid = np.unique(np.concatenate([np.linspace(0.0, ell, steps + 1), forced]))
    return grid, forced


def _integrate_linear(coefficient: Callable[[float], np.ndarray], Y0: np.ndarray, grid: np.ndarray,
                      forced: np.ndarray, tol: float) -> np.ndarray:
    """
    Y′ = A(x)Y，逐段（强制节点之间）用 RK45 积分，返回网格上的 Y

    Raises:
        StepLimitExceeded: 右端求值次数超过上限
        NonFiniteValue: 解溢出
    """
    shape = Y0.shape
    counter = {"calls": 0}

    def rhs(x, y):
        counter["calls"] += 1
        if counter["calls"] > MAX_RHS_EVALUATIONS:
            raise StepLimitExceeded(f"步数超过上限 (x={x:.6g})", x=float(x))
        return (coefficient(x) @ y.reshape(shape)).ravel()

    out = np.empty((len(grid),) + shape, dtype=complex)
    out[0] = Y0
    y = Y0.ravel().astype(complex)
    for s0, s1 in zip(forced[:-1], forced[1:]):
        mask = (grid > s0) & (grid <= s1)
        if not np.any(mask) or s1 <= s0:
            continue
        sol = solve_ivp(rhs, (s0, s1), y, method="RK45", t_eval=grid[mask], rtol=tol, atol=tol * 1e-2)
        if sol.status < 0:
            raise StepLimitExceeded(f"积分失败: {sol.message}", x=float(s0))
        values = sol.y.T
        if not np.all(np.isfinite(values)):
            bad = int(np.argmax(~np.all(np.isfinite(values), axis=1)))
            x_bad = float(grid[mask][bad])
            raise NonFiniteValue(f"基本矩阵在 x={x_bad:.6g} 处溢出", x=x_bad)
        out[mask] = values.reshape((-1,) + shape)
        y = values[-1]
    return out


class TrajectoryCache:
    """按 (bvp 哈希, λ, 参数) 缓存轨迹，插入与读取加锁"""

    def __init__(self, max_size: int = 256):
        self.max_size = max_size
        self._data: "OrderedDict[tuple, FundamentalTrajectory]" = OrderedDict()
        self._lock = threading.Lock()

    def get_or_compute(self, key: tuple, compute: Callable[[], FundamentalTrajectory]) -> FundamentalTrajectory:
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                return self._data[key]
        value = compute()
        with self._lock:
            self._data[key] = value
            self._data.move_to_end(key)
            while len(self._data) > self.max_size:
                self._data.popitem(last=False)
        return value

    def clear(self):
        with self._lock:
            self._data.clear()

    def __len__(self):
        with self._lock:
            return len(self._data)


trajectory_cache = TrajectoryCache()


def _weight_matrix_fn(profile: WeightProfile) -> Callable[[float], np.ndarray]:
    if all(isinstance(e, ConstantFunction) for e in profile.entries):
        const = np.array([float(e.value) for e in profile.entries])
        return lambda x: const
    return lambda x: profile.beta_all(np.asarray(x))


def _potential_fn(bvp: DiracBVP) -> Callable[[float], np.ndarray]:
    if bvp.Q.is_constant():
        const = bvp.Q(np.asarray(0.0))
        return lambda x: const
    return lambda x: bvp.Q(np.asarray(x))


def solve_fundamental(bvp: DiracBVP, lam: complex, steps: Optional[int] = None, tol: Optional[float] = None,
                      reference: Optional[int] = None, with_derivative: bool = False,
                      use_cache: bool = True) -> FundamentalTrajectory:
    """
    积分 Φ′ = (iλB − Q)Φ, Φ(0) = I

    Args:
        bvp: 边值问题
        lam: 谱参数 λ
        steps: 均匀网格段数（≥ 16），默认读取配置 fundamental_steps
        tol: 每步误差容限，默认读取配置 ode_tol
        reference: 缩放参考下标 r；为 None 时在 |Im λ|·max|b| 超过阈值时自动选择
        with_derivative: 同时积分 ∂Φ/∂λ（变分方程）

    Returns:
        FundamentalTrajectory
    """
    steps = int(steps or get_setting("fundamental_steps"))
    if steps < 16:
        raise ValidationError(f"steps 至少为 16，当前 {steps}", steps=steps)
    tol = float(tol or get_setting("ode_tol"))
    lam = complex(lam)
    profile = bvp.profile
    if reference is None and abs(lam.imag) * float(np.max(np.abs(profile.b))) > float(get_setting("rescale_threshold")):
        # 增长最快的分量：Im λ > 0 时 ρ 最小者，反之最大者
        reference = 0 if lam.imag > 0 else profile.n - 1
        logger.debug("λ=%s 超过缩放阈值，使用参考分量 %d", lam, reference)
    if reference is not None and with_derivative:
        raise ValidationError("缩放积分不支持同时计算 ∂Φ/∂λ")

    key = (bvp.cache_key(), lam, steps, tol, reference, with_derivative)
    compute = lambda: _solve(bvp, lam, steps, tol, reference, with_derivative)
    if not use_cache:
        return compute()
    return trajectory_cache.get_or_compute(key, compute)


def _solve(bvp: DiracBVP, lam: complex, steps: int, tol: float, reference: Optional[int],
           with_derivative: bool) -> FundamentalTrajectory:
    n = bvp.n
    grid, forced = _forced_nodes(bvp, steps)
    beta = _weight_matrix_fn(bvp.profile)
    Q = _potential_fn(bvp)
    eye = np.eye(n)

    if reference is None:
        def A(x):
            return 1j * lam * np.diag(beta(x)) - Q(x)
    else:
        def A(x):
            b = beta(x)
            return 1j * lam * np.diag(b - b[reference]) - Q(x)

    if with_derivative:
        def coefficient(x):
            b = np.diag(beta(x))
            top = 1j * lam * b - Q(x)
            return np.block([[top, np.zeros((n, n))], [1j * b, top]])
        Y0 = np.vstack([eye, np.zeros((n, n))]).astype(complex)
        values = _integrate_linear(coefficient, Y0, grid, forced, tol)
        return FundamentalTrajectory(lam=lam, grid=grid, values=values[:, :n, :], log_scale=np.zeros(len(grid), complex),
                                     derivative=values[:, n:, :])

    values = _integrate_linear(A, eye.astype(complex), grid, forced, tol)
    if reference is None:
        log_scale = np.zeros(len(grid), dtype=complex)
    else:
        log_scale = 1j * lam * bvp.profile.rho(reference, grid)
    return FundamentalTrajectory(lam=lam, grid=grid, values=values, log_scale=log_scale, reference=reference)


def propagator(bvp: DiracBVP, lam: complex, x_from: float, x_to: float, tol: Optional[float] = None) -> np.ndarray:
    """从 x_from 出发以单位阵为初值积分到 x_to 的传播矩阵"""
    if not (0 <= x_from <= x_to <= bvp.ell):
        raise XOutOfDomain(f"需要 0 ≤ x_from ≤ x_to ≤ ℓ: ({x_from}, {x_to})", x=x_to)
    tol = float(tol or get_setting("ode_tol"))
    beta = _weight_matrix_fn(bvp.profile)
    Q = _potential_fn(bvp)
    inner = [p for p in bvp.breakpoints if x_from < p < x_to]
    forced = np.array([x_from, *inner, x_to])
    grid = np.unique(forced)
    values = _integrate_linear(lambda x: 1j * complex(lam) * np.diag(beta(x)) - Q(x),
                               np.eye(bvp.n, dtype=complex), grid, forced, tol)
    return values[-1]


def unperturbed_fundamental(profile: WeightProfile, lam: complex, x: float) -> np.ndarray:
    """Φ₀(x,λ) = diag(e^{iλρ_k(x)})"""
    if x < 0 or x > profile.ell * (1 + 1e-12):
        raise XOutOfDomain(f"x={x} 不在 [0, {profile.ell}] 内", x=x)
    rho = profile.b if x >= profile.ell else np.array([profile.rho(k, x) for k in range(profile.n)], dtype=float)
    return np.diag(np.exp(1j * complex(lam) * rho))


def liouville_residual(traj: FundamentalTrajectory, bvp: DiracBVP) -> float:
    """
    max_x |det Φ(x,λ) − exp(iλΣρ_k(x) − ∫₀ˣ tr Q)|

    缩放轨迹按缩放后的量比较（两边同乘 e^{−n·log_scale}）。
    """
    rho_sum = np.sum(bvp.profile.rho_all(traj.grid), axis=0)
    log_expected = 1j * traj.lam * rho_sum - bvp.Q.trace_integral(traj.grid)
    n = bvp.n
    actual = np.linalg.det(traj.values)
    expected = np.exp(log_expected - n * traj.log_scale)
    return float(np.max(np.abs(actual - expected)))


# ---------------------------------------------------------------------------
# 子式与提升系统
# ---------------------------------------------------------------------------

def _check_index(index: Sequence[int], n: int) -> Tuple[int, ...]:
    index = tuple(int(i) for i in index)
    if any(i < 0 or i >= n for i in index) or any(a >= b for a, b in zip(index, index[1:])):
        raise IndexOutOfRange(f"子式下标必须严格递增且在 [0, {n}) 内: {index}", index=index)
    return index


def _sort_sign(seq: List[int]) -> Tuple[Tuple[int, ...], int]:
    """排序并返回置换的符号"""
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(len(seq) - 1 - i):
            if seq[j] > seq[j + 1]:
                seq[j], seq[j + 1] = seq[j + 1], seq[j]
                sign = -sign
    return tuple(seq), sign


@dataclass
class LiftedTrajectory:
    lam: complex
    indices: List[Tuple[int, ...]]
    grid: np.ndarray
    values: np.ndarray

    def minor(self, q: Sequence[int], p: Sequence[int], i: int = -1) -> complex:
        if len(q) != len(p):
            raise OrderMismatch("子式阶数不一致", q=tuple(q), p=tuple(p))
        return complex(self.values[i, self.indices.index(tuple(q)), self.indices.index(tuple(p))])


@dataclass
class LiftedSystem:
    """
    m 阶子式向量 𝔉_𝔮 满足 𝔉′ = (iλ𝔅 − 𝔔)𝔉

    indices 按字典序排列；couplings[(𝔮, 𝔯)] = [(σ, q_s, j), ...] 表示 𝔔_{𝔮𝔯} = Σ σ·Q_{q_s j}
    """

    bvp: DiracBVP
    m: int
    indices: List[Tuple[int, ...]]
    couplings: dict = field(repr=False)

    @property
    def N(self) -> int:
        return len(self.indices)

    def weights(self, x) -> np.ndarray:
        """𝔅(x)，形状 (N,) + x.shape"""
        beta = self.bvp.profile.beta_all(np.atleast_1d(x))
        return np.stack([beta[list(q)].sum(axis=0) for q in self.indices]).reshape((self.N,) + np.shape(x))

    def potential(self, x) -> np.ndarray:
        Q = self.bvp.Q(np.asarray(x))
        out = np.zeros(np.shape(x) + (self.N, self.N), dtype=complex)
        for (a, c), terms in self.couplings.items():
            for sign, row, col in terms:
                out[..., a, c] += sign * Q[..., row, col]
        return out

    def solve(self, lam: complex, steps: Optional[int] = None, tol: Optional[float] = None) -> LiftedTrajectory:
        steps = int(steps or get_setting("fundamental_steps"))
        tol = float(tol or get_setting("ode_tol"))
        grid, forced = _forced_nodes(self.bvp, steps)
        lam = complex(lam)

        def A(x):
            return 1j * lam * np.diag(self.weights(np.asarray(x))) - self.potential(np.asarray(x))

        values = _integrate_linear(A, np.eye(self.N, dtype=complex), grid, forced, tol)
        return LiftedTrajectory(lam=lam, indices=self.indices, grid=grid, values=values)


def build_lifted_system(bvp: DiracBVP, m: int) -> LiftedSystem:
    """
    构造 m 阶子式的提升系统

    𝔅_𝔮 = Σ_s β_{q_s}，𝔔_{𝔮𝔮} = Σ_s Q_{q_s q_s}，
    𝔔_{𝔮𝔯} = σ·Q_{q_s j}，其中 𝔯 为把 q_s 换成 j ∉ 𝔮 后排序所得，σ 为排序置换的符号。
    """
    n = bvp.n
    if not 1 <= m <= n:
        raise IndexOutOfRange(f"阶数 m 必须在 [1, {n}] 内: {m}", index=m)
    report = validate_zero_block_diagonal(bvp.Q, bvp.profile)
    if not report:
        raise BlockDiagonalityViolated(f"Q 的分块对角部分非零: {report.violations}", violations=report.violations)

    indices = list(itertools.combinations(range(n), m))
    position = {q: i for i, q in enumerate(indices)}
    couplings: dict = {}
    for a, q in enumerate(indices):
        for s, qs in enumerate(q):
            couplings.setdefault((a, a), []).append((1, qs, qs))
            for j in range(n):
                if j in q:
                    continue
                replaced = list(q)
                replaced[s] = j
                r, sign = _sort_sign(replaced)
                couplings.setdefault((a, position[r]), []).append((sign, qs, j))
    return LiftedSystem(bvp=bvp, m=m, indices=indices, couplings=couplings)


def minor_of_fundamental(traj: FundamentalTrajectory, q: Sequence[int], p: Sequence[int]) -> complex:
    """Φ(ℓ,λ) 中行 𝔮、列 𝔭 的子式"""
    if len(q) != len(p):
        raise OrderMismatch(f"子式阶数不一致: {len(q)} ≠ {len(p)}", q=tuple(q), p=tuple(p))
    n = traj.values.shape[-1]
    q, p = _check_index(q, n), _check_index(p, n)
    sub = traj.values[-1][np.ix_(q, p)]
    return complex(np.linalg.det(sub) * np.exp(len(q) * traj.log_scale[-1]))


# ---------------------------------------------------------------------------
# 批量 Magnus 积分
# ---------------------------------------------------------------------------

_GAUSS = 0.5 * np.array([1.0 - 1.0 / np.sqrt(3.0), 1.0 + 1.0 / np.sqrt(3.0)])


def _is_piecewise_constant(fn) -> bool:
    if isinstance(fn, (ConstantFunction, ZeroFunction)):
        return True
    return isinstance(fn, PiecewisePolynomial) and all(len(c) == 1 for c in fn.coefficients)


def magnus_nodes(bvp: DiracBVP, lams: np.ndarray, steps: Optional[int] = None) -> np.ndarray:
    """Magnus 步的节点：分段常数数据每段一步即精确，否则步数随 |λ|·max|β| 增长"""
    forced = np.array([0.0, *bvp.breakpoints, bvp.ell])
    exact = all(_is_piecewise_constant(e) for e in bvp.profile.entries) and all(
        _is_piecewise_constant(e) for row in bvp.Q.entries for e in row)
    if exact and steps is None:
        return forced
    if steps is None:
        x = np.linspace(0.0, bvp.ell, 65)
        beta_max = float(np.max(np.abs(bvp.profile.beta_all(x))))
        q_max = float(np.max(np.abs(bvp.Q(x))))
        lam_max = float(np.max(np.abs(lams))) if np.size(lams) else 0.0
        steps = int(np.clip(np.ceil(bvp.ell * (lam_max * beta_max + q_max) * 1.2), 48, 8192))
    grid = np.unique(np.concatenate([np.linspace(0.0, bvp.ell, steps + 1), forced]))
    return grid


def monodromy_batch(bvp: DiracBVP, lams, steps: Optional[int] = None,
                    with_derivative: bool = False) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    四阶 Magnus 格式计算 Φ(ℓ,λ)（以及可选的 ∂Φ(ℓ,λ)/∂λ），λ 为一维数组

    每步 Ω = h/2(A₁+A₂) + (√3/12)h²[A₂, A₁]，A_i 取两个 Gauss 点；
    求导时对增广系数 [[A, 0], [iB, A]] 做同样的推进。

    Returns:
        (Φ, dΦ): 形状 (K, n, n)；不求导时 dΦ 为 None
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    n = bvp.n
    nodes = magnus_nodes(bvp, lams, steps)
    h = np.diff(nodes)
    h = h[h > 0]
    left = nodes[:-1][np.diff(nodes) > 0]
    points = left[:, None] + h[:, None] * _GAUSS[None, :]
    beta = bvp.profile.beta_all(points.ravel()).T.reshape(len(h), 2, n)
    Q = bvp.Q(points.ravel()).reshape(len(h), 2, n, n)

    dim = 2 * n if with_derivative else n
    K = len(lams)
    result = np.broadcast_to(np.eye(dim, dtype=complex), (K, dim, dim)).copy()
    eye_rows = np.arange(n)
    chunk = max(1, 20000 // max(K, 1))
    for start in range(0, len(h), chunk):
        stop = min(start + chunk, len(h))
        hs = h[start:stop]
        # A[step, gauss, λ, :, :]
        A = np.zeros((stop - start, 2, K, dim, dim), dtype=complex)
        lam_beta = 1j * lams[None, None, :, None] * beta[start:stop, :, None, :]
        block = -np.broadcast_to(Q[start:stop, :, None], (stop - start, 2, K, n, n)).copy()
        block[..., eye_rows, eye_rows] += lam_beta
        A[..., :n, :n] = block
        if with_derivative:
            A[..., n:, n:] = block
            A[..., eye_rows + n, eye_rows] = 1j * np.broadcast_to(beta[start:stop, :, None, :], (stop - start, 2, K, n))
        A1, A2 = A[:, 0], A[:, 1]
        commutator = A2 @ A1 - A1 @ A2
        omega = (0.5 * hs[:, None, None, None] * (A1 + A2)
                 + (np.sqrt(3.0) / 12.0) * hs[:, None, None, None] ** 2 * commutator)
        factors = expm(omega)
        for step in range(stop - start):
            result = factors[step] @ result
    if not np.all(np.isfinite(result)):
        raise NonFiniteValue("批量 Magnus 积分溢出", x=bvp.ell)
    Phi = result[:, :n, :n]
    dPhi = result[:, n:, :n] if with_derivative else None
    return Phi, dPhi
