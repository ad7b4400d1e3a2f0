"""
变换算子核 - Goursat 积分方程组的逐次逼近与三角表示的验证

第 k 列核在区域 Ω_k = {(u, v): u ∈ [a_k⁻, a_k⁺], v ∈ [γ_k⁻(u), u]} 上求解：
  R_jk(x,t) = Q̃_jk(a_jk(x,t)) − ∫_{a_jk(x,t)}^x Σ_p Q_jp(u)·R_pk(u, γ_jk^{x,t}(u)) du
对 β_j ≡ β_k 的分量以下边界 R(x, γ_k⁻(x)) = 0 为初始条件（Q̃ 项为零）。
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from tqdm import tqdm

from .bvp_core import PotentialMatrix, WeightProfile, validate_zero_block_diagonal
from .config_loader import get_setting
from .errors import (BlockDiagonalityViolated, EqualWeights, IndexOutOfRange, KernelMissing, NoConvergence,
                     ValidationError)
from .fundamental import _integrate_linear

logger = logging.getLogger(__name__)

_TABLE_NODES = 4097
_CHUNK_NODES = 1_500_000


# ---------------------------------------------------------------------------
# 特征线
# ---------------------------------------------------------------------------

@dataclass
class CharacteristicMaps:
    """γ_jk^{x,t}(u) = ρ_k⁻¹(ρ_j(u) − ρ_j(x) + ρ_k(t))，a_jk(x,t) = (ρ_j − ρ_k)⁻¹(ρ_j(x) − ρ_k(t))"""

    j: int
    k: int
    profile: WeightProfile

    def gamma(self, x, t, u):
        p = self.profile
        return p.rho_inverse(self.k, p.rho(self.j, u) - p.rho(self.j, x) + p.rho(self.k, t))

    def a(self, x, t):
        p = self.profile
        if p.same_weight(self.j, self.k):
            raise EqualWeights(f"β_{self.j} ≡ β_{self.k}，a_jk 无定义", j=self.j, k=self.k)
        return p.difference_map(self.j, self.k).inverse(p.rho(self.j, x) - p.rho(self.k, t))


def characteristic_maps(profile: WeightProfile, j: int, k: int) -> CharacteristicMaps:
    """按常数延拓的权构造特征线映射（0 起下标）"""
    for idx in (j, k):
        if not 0 <= idx < profile.n:
            raise IndexOutOfRange(f"下标越界: {idx}", index=idx)
    return CharacteristicMaps(j=j, k=k, profile=profile)


class _LinearTable:
    """单调函数的节点表，区间外按端点斜率线性外推"""

    def __init__(self, nodes: np.ndarray, values: np.ndarray, slope_left: float, slope_right: float):
        self.x = nodes
        self.y = values
        self.s0 = float(slope_left)
        self.s1 = float(slope_right)
        self.sign = 1.0 if values[-1] > values[0] else -1.0

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        inner = np.interp(u, self.x, self.y)
        return np.where(u < self.x[0], self.y[0] + self.s0 * (u - self.x[0]),
                        np.where(u > self.x[-1], self.y[-1] + self.s1 * (u - self.x[-1]), inner))

    def inverse(self, v):
        v = np.asarray(v, dtype=float)
        if self.sign > 0:
            inner = np.interp(v, self.y, self.x)
        else:
            inner = np.interp(v, self.y[::-1], self.x[::-1])
        before = self.sign * (v - self.y[0]) < 0
        after = self.sign * (v - self.y[-1]) > 0
        return np.where(before, self.x[0] + (v - self.y[0]) / self.s0,
                        np.where(after, self.x[-1] + (v - self.y[-1]) / self.s1, inner))


# ---------------------------------------------------------------------------
# 核网格
# ---------------------------------------------------------------------------

@dataclass
class KernelGrid:
    """
    第 k 列核 R_jk 在曲边网格上的值

    x_i 在 [a_k⁻, a_k⁺] 上均匀，t_{i,m} = γ_k⁻(x_i) + (x_i − γ_k⁻(x_i))·m/M，m = M 为对角线。
    """

    k: int
    x: np.ndarray
    lower: np.ndarray
    M: int
    values: np.ndarray
    ell: float
    coupled: List[int]
    trace_target: np.ndarray
    iterations: int
    residual: float
    history: List[float] = field(default_factory=list)

    @property
    def a_minus(self) -> float:
        return float(self.x[0])

    @property
    def a_plus(self) -> float:
        return float(self.x[-1])

    @property
    def t(self) -> np.ndarray:
        s = np.linspace(0.0, 1.0, self.M + 1)
        return self.lower[:, None] + (self.x - self.lower)[:, None] * s[None, :]

    def contains(self, x, t, slack: float = 1e-9) -> np.ndarray:
        """(x, t) ∈ Ω_k"""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        low = np.interp(x, self.x, self.lower)
        inside_x = (x >= self.a_minus - slack) & (x <= self.a_plus + slack)
        return inside_x & (t >= low - slack) & (t <= x + slack)

    def interpolate(self, component: int, u, v) -> np.ndarray:
        return _bilinear(self.values[component], self.x, self.lower, self.M, u, v)

    def evaluate(self, x, t) -> np.ndarray:
        """R_jk(x,t)，返回形状 (n,) + x.shape"""
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        return np.stack([self.interpolate(j, x, t) for j in range(self.values.shape[0])])

    def diagonal_trace_residual(self) -> float:
        """max_{x∈[0,ℓ]} |R_jk(x,x) − Q̃_jk(x)|，j 取与 k 权不同的分量"""
        inside = (self.x >= 0.0) & (self.x <= self.ell)
        if not self.coupled or not np.any(inside):
            return 0.0
        diag = self.values[self.coupled][:, inside, self.M]
        return float(np.max(np.abs(diag - self.trace_target[self.coupled][:, inside])))

    def to_frame(self) -> pd.DataFrame:
        """(x, t, Re R_j, Im R_j …) 表格导出"""
        t = self.t
        data = {"x": np.repeat(self.x, self.M + 1), "t": t.ravel()}
        for j in range(self.values.shape[0]):
            data[f"re_R{j}"] = self.values[j].real.ravel()
            data[f"im_R{j}"] = self.values[j].imag.ravel()
        return pd.DataFrame(data)


def _bilinear(V: np.ndarray, xs: np.ndarray, lower: np.ndarray, M: int, u, v) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    N = len(xs) - 1
    hx = (xs[-1] - xs[0]) / N
    fu = np.clip((u - xs[0]) / hx, 0.0, N)
    i0 = np.minimum(np.floor(fu).astype(np.int64), N - 1)
    wx = fu - i0
    result = np.zeros(u.shape, dtype=complex)
    for di, weight in ((0, 1.0 - wx), (1, wx)):
        i = i0 + di
        low = lower[i]
        span = xs[i] - low
        s = np.where(span > 0, (v - low) / np.where(span > 0, span, 1.0), 0.0)
        s = np.clip(s, 0.0, 1.0) * M
        m0 = np.minimum(np.floor(s).astype(np.int64), M - 1)
        ws = s - m0
        result += weight * ((1.0 - ws) * V[i, m0] + ws * V[i, m0 + 1])
    return result


class _ColumnGeometry:
    """第 k 列的区域 Ω_k：a_k^±、下边界 γ_k⁻ 以及表格化的 ρ 与 ρ_j − ρ_k"""

    def __init__(self, profile: WeightProfile, k: int):
        self.profile = profile
        self.k = k
        ell = profile.ell
        nodes = np.unique(np.concatenate([np.linspace(0.0, ell, _TABLE_NODES), profile.breakpoints]))
        beta0 = profile.beta_all(np.array([0.0]))[:, 0]
        betal = profile.beta_all(np.array([ell]))[:, 0]
        self.rho = [_LinearTable(nodes, profile.rho(j, nodes), beta0[j], betal[j]) for j in range(profile.n)]
        self.diff: Dict[int, _LinearTable] = {}
        self.ranges: Dict[int, tuple] = {}
        for j in range(profile.n):
            if profile.same_weight(j, k):
                continue
            self.diff[j] = _LinearTable(nodes, profile.rho(j, nodes) - profile.rho(k, nodes),
                                        beta0[j] - beta0[k], betal[j] - betal[k])
            corner = float(self.diff[j].inverse(np.asarray(profile.b[j])))
            if corner < 0.0:
                self.ranges[j] = (corner, ell, "below")
            elif corner > ell:
                self.ranges[j] = (0.0, corner, "beyond")
            else:
                self.ranges[j] = (0.0, ell, "inside")
        self.a_minus = min([0.0] + [lo for lo, _, _ in self.ranges.values()])
        self.a_plus = max([ell] + [hi for _, hi, _ in self.ranges.values()])

    def gamma(self, j: int, x, t, u):
        rho_k = self.rho[self.k]
        return rho_k.inverse(self.rho[j](u) - self.rho[j](x) + rho_k(t))

    def _corner_curve(self, j: int, u):
        """γ_jk^{ℓ,0}(u)"""
        return self.rho[self.k].inverse(self.rho[j](u) - float(self.profile.b[j]))

    def lower(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        ell = self.profile.ell
        result = np.full(u.shape, np.inf)
        for j, (lo, hi, case) in self.ranges.items():
            covered = (u >= lo - 1e-12) & (u <= hi + 1e-12)
            if case == "inside":
                value = np.zeros(u.shape)
            elif case == "below":
                value = self._corner_curve(j, u)
            else:
                value = np.where(u <= ell, 0.0, self._corner_curve(j, u))
            result = np.where(covered, np.minimum(result, value), result)
        return np.where(np.isfinite(result), result, 0.0)

    def a_diagonal(self, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        """Γ_kk^{x,t} 与下边界的交点 a_kk(x,t)"""
        lo = np.full(x.shape, self.a_minus)
        hi = x.copy()
        on_boundary = t <= self.lower(x) + 1e-14
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            above = self.gamma(self.k, x, t, mid) - self.lower(mid) > 0
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        return np.where(on_boundary, x, hi)

    def a_coupled(self, j: int, x: np.ndarray, t: np.ndarray) -> np.ndarray:
        return self.diff[j].inverse(self.rho[j](x) - self.rho[self.k](t))


def _q_tilde(Q: PotentialMatrix, profile: WeightProfile, j: int, k: int, a: np.ndarray) -> np.ndarray:
    """Q̃_jk = Q_jk/(β_j − β_k)，[0, ℓ] 外以宽 ℓ/50 的线性斜坡降为零"""
    ell = profile.ell
    delta = ell / 50.0
    inside = np.clip(a, 0.0, ell)
    base = Q.entries[j][k](inside) / (profile.beta(j, inside) - profile.beta(k, inside))
    factor = np.where(a < 0.0, np.clip(1.0 + a / delta, 0.0, 1.0),
                      np.where(a > ell, np.clip(1.0 - (a - ell) / delta, 0.0, 1.0), 1.0))
    return base * factor


def _potential_on(entry, u: np.ndarray, ell: float) -> np.ndarray:
    """Q 在 [0, ℓ] 外取零"""
    values = entry(np.clip(u, 0.0, ell))
    return np.where((u >= 0.0) & (u <= ell), values, 0.0)


def solve_goursat(profile: WeightProfile, Q: PotentialMatrix, k: int, grid: Optional[int] = None,
                  max_iter: Optional[int] = None, tol: Optional[float] = None,
                  progress: Optional[bool] = None) -> KernelGrid:
    """
    逐次逼近求第 k 列核

    Args:
        profile: 权剖面
        Q: 分块对角为零的势矩阵
        k: 列下标（0 起）
        grid: 每个方向的网格段数，默认 kernel_grid
        max_iter: 最大迭代次数，默认 kernel_max_iter
        tol: 相邻两次迭代的最大变化量阈值，默认 kernel_tol

    Returns:
        KernelGrid

    Raises:
        NoConvergence: 达到 max_iter 仍未收敛
    """
    report = validate_zero_block_diagonal(Q, profile)
    if not report:
        raise BlockDiagonalityViolated("Q 的分块对角部分必须为零", violations=report.violations)
    if not 0 <= k < profile.n:
        raise IndexOutOfRange(f"列下标越界: {k}", index=k)
    N = int(grid or get_setting("kernel_grid"))
    if N < 4:
        raise ValidationError(f"核网格至少 4 段，当前 {N}", grid=N)
    max_iter = int(max_iter or get_setting("kernel_max_iter"))
    tol = float(tol or get_setting("kernel_tol"))
    progress = bool(get_setting("progress") if progress is None else progress)
    n, M, ell = profile.n, N, profile.ell

    geo = _ColumnGeometry(profile, k)
    xs = np.linspace(geo.a_minus, geo.a_plus, N + 1)
    lower = geo.lower(xs)
    s = np.linspace(0.0, 1.0, M + 1)
    X = np.repeat(xs, M + 1)
    T = (lower[:, None] + (xs - lower)[:, None] * s[None, :]).ravel()

    coupled = sorted(geo.diff)
    endpoints, constants, partners = [], [], []
    for j in range(n):
        if j in geo.diff:
            a = geo.a_coupled(j, X, T)
            constants.append(_q_tilde(Q, profile, j, k, a))
        else:
            a = geo.a_diagonal(X, T)
            constants.append(np.zeros(X.shape, dtype=complex))
        endpoints.append(a)
        partners.append([p for p in range(n) if p != j and not Q.is_zero_entry(j, p)])
    trace_target = np.zeros((n, N + 1), dtype=complex)
    for j in coupled:
        trace_target[j] = _q_tilde(Q, profile, j, k, xs)

    nq = max(8, N // 2)
    quad = np.linspace(0.0, 1.0, nq + 1)
    trap = np.full(nq + 1, 1.0 / nq)
    trap[[0, -1]] *= 0.5
    chunk = max(1, _CHUNK_NODES // (nq + 1))

    def sweep(values: np.ndarray, j: int) -> np.ndarray:
        out = constants[j].astype(complex)
        if not partners[j]:
            return out
        rho_j, rho_k = geo.rho[j], geo.rho[k]
        for start in range(0, len(X), chunk):
            sl = slice(start, start + chunk)
            x, t, a = X[sl], T[sl], endpoints[j][sl]
            u = a[:, None] + (x - a)[:, None] * quad[None, :]
            v = rho_k.inverse(rho_j(u) - rho_j(x)[:, None] + rho_k(t)[:, None])
            acc = np.zeros(u.shape, dtype=complex)
            for p in partners[j]:
                acc += _potential_on(Q.entries[j][p], u, ell) * _bilinear(values[p], xs, lower, M, u, v)
            out[sl] -= (x - a) * (acc @ trap)
        return out

    values = np.zeros((n, N + 1, M + 1), dtype=complex)
    history: List[float] = []
    bar = tqdm(total=max_iter, disable=not progress, desc=f"核列 {k}")
    try:
        for iteration in range(1, max_iter + 1):
            flat = values.reshape(n, -1)
            new = np.stack([sweep(values, j) for j in range(n)])
            change = float(np.max(np.abs(new - flat)))
            values = new.reshape(n, N + 1, M + 1)
            history.append(change)
            bar.update(1)
            logger.debug("核列 %d 第 %d 次迭代: sup 变化 %.3e", k, iteration, change)
            if not np.isfinite(change):
                raise NoConvergence(f"核列 {k} 迭代发散", k=k, iteration=iteration)
            if change < tol:
                break
        else:
            raise NoConvergence(f"核列 {k} 在 {max_iter} 次迭代内未收敛 (变化 {history[-1]:.3e})",
                                k=k, history=history)
    finally:
        bar.close()

    return KernelGrid(k=k, x=xs, lower=lower, M=M, values=values, ell=ell, coupled=coupled,
                      trace_target=trace_target, iterations=len(history), residual=history[-1], history=history)


def solve_kernels(profile: WeightProfile, Q: PotentialMatrix, columns: Optional[Sequence[int]] = None,
                  grid: Optional[int] = None, max_iter: Optional[int] = None, tol: Optional[float] = None,
                  jobs: Optional[int] = None) -> Dict[int, KernelGrid]:
    """各列相互独立，按列并行"""
    columns = list(range(profile.n) if columns is None else columns)
    jobs = int(jobs or get_setting("jobs"))
    solve = lambda k: solve_goursat(profile, Q, k, grid=grid, max_iter=max_iter, tol=tol)
    if jobs > 1 and len(columns) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return dict(zip(columns, pool.map(solve, columns)))
    return {k: solve(k) for k in columns}


# ---------------------------------------------------------------------------
# 三角表示验证
# ---------------------------------------------------------------------------

@dataclass
class TransformVerification:
    lams: List[complex]
    residuals: List[float]
    nodes: int

    @property
    def max_residual(self) -> float:
        return float(max(self.residuals)) if self.residuals else 0.0

    def to_dict(self) -> dict:
        return {"lams": [[z.real, z.imag] for z in self.lams], "residuals": self.residuals,
                "max_residual": self.max_residual, "nodes": self.nodes}


def _trapezoid_weights(count: int, h: float) -> np.ndarray:
    w = np.full(count, h)
    if count > 1:
        w[[0, -1]] *= 0.5
    else:
        w[:] = 0.0
    return w


def verify_transform(profile: WeightProfile, Q: PotentialMatrix, A, lams, kernels: Dict[int, KernelGrid],
                     nodes: Optional[int] = None) -> TransformVerification:
    """
    比较直接积分的 Y_A(x,λ) = Φ(x,λ)A 与三角表示

    w = e_A + ∫₀ˣ P(x,t)B(t)e_A(t,λ)dt，Y = w + ∫₀ˣ R(x,t)B(t)w(t)dt，
    其中 P_jj(x,t) = g_j(ρ_j⁻¹(ρ_j(x) − ρ_j(t)))/A_j，g 满足与 λ 无关的 Volterra 方程
    g(x) + ∫₀ˣ R(x,t)B(t)g(t)dt = −R(x,0)A。

    Returns:
        TransformVerification: 每个 λ 的 max_x |Y_direct − Y_repr|
    """
    if not profile.simple_spectrum:
        raise ValidationError("三角表示验证要求各权两两不同（单重分块）")
    report = validate_zero_block_diagonal(Q, profile)
    if not report:
        raise BlockDiagonalityViolated("Q 的分块对角部分必须为零", violations=report.violations)
    A = np.asarray(A, dtype=complex).ravel()
    n = profile.n
    if A.shape != (n,):
        raise ValidationError(f"初值向量长度应为 {n}", length=A.size)
    if np.any(A == 0):
        raise ValidationError("初值向量的分量必须全部非零", A=A)
    missing = [k for k in range(n) if k not in kernels]
    if missing:
        raise KernelMissing(f"缺少第 {missing} 列核", columns=missing)

    ell = profile.ell
    count = int(nodes or (len(next(iter(kernels.values())).x)))
    grid = np.linspace(0.0, ell, count)
    h = grid[1] - grid[0]
    beta = profile.beta_all(grid).T
    rho = profile.rho_all(grid).T

    # R(x_i, t_m)，m ≤ i
    Xi, Tm = np.meshgrid(grid, grid, indexing="ij")
    R = np.zeros((count, count, n, n), dtype=complex)
    lower_tri = Tm <= Xi
    for k, kernel in kernels.items():
        R[lower_tri, :, k] = kernel.evaluate(Xi[lower_tri], Tm[lower_tri]).T

    g = np.zeros((count, n), dtype=complex)
    g[0] = -R[0, 0] @ A
    for i in range(1, count):
        w = _trapezoid_weights(i + 1, h)
        rhs = -R[i, 0] @ A
        rhs -= np.einsum("m,mjk,mk->j", w[:i], R[i, :i] * beta[:i, None, :], g[:i])
        lhs = np.eye(n) + w[i] * R[i, i] * beta[i][None, :]
        g[i] = np.linalg.solve(lhs, rhs)

    # ξ_j(x_i, t_m) = ρ_j⁻¹(ρ_j(x_i) − ρ_j(t_m))
    xi = np.zeros((n, count, count))
    for j in range(n):
        xi[j] = profile.rho_inverse(j, rho[:, j][:, None] - rho[:, j][None, :])
    g_at_xi = np.stack([np.interp(xi[j], grid, g[:, j].real) + 1j * np.interp(xi[j], grid, g[:, j].imag)
                        for j in range(n)])

    lams = [complex(z) for z in np.atleast_1d(lams)]
    residuals = []
    forced = np.array([0.0, *profile.breakpoints, *Q.breakpoints, ell])
    forced = np.unique(forced[(forced >= 0) & (forced <= ell)])
    tol = float(get_setting("ode_tol"))
    for lam in lams:
        e = A[None, :] * np.exp(1j * lam * rho)
        w_vec = e.copy()
        for i in range(1, count):
            weights = _trapezoid_weights(i + 1, h)
            integrand = g_at_xi[:, i, : i + 1].T * beta[: i + 1] * np.exp(1j * lam * rho[: i + 1])
            w_vec[i] += weights @ integrand
        Y = w_vec.copy()
        for i in range(1, count):
            weights = _trapezoid_weights(i + 1, h)
            Y[i] += np.einsum("m,mjk,mk->j", weights, R[i, : i + 1], beta[: i + 1] * w_vec[: i + 1])
        direct = _integrate_linear(lambda x: 1j * lam * np.diag(profile.beta_all(np.array([x]))[:, 0])
                                   - Q(np.asarray(x)), A[:, None], grid, forced, tol)[:, :, 0]
        residual = float(np.max(np.abs(direct - Y)))
        residuals.append(residual)
        logger.debug("λ=%s 的三角表示残差 %.3e", lam, residual)
    return TransformVerification(lams=lams, residuals=residuals, nodes=count)
