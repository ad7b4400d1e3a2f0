"""
Riesz 基诊断 - 加权内积、本征向量配对恒等式、双正交规范化、一致极小性指标、Gram 截断条件数
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.integrate import simpson
from scipy.interpolate import CubicSpline
from tqdm import tqdm

from .boundary import adjoint_of, adjoint_problem, is_canonical
from .bvp_core import BoundaryPair, DiracBVP, PotentialMatrix, WeightProfile
from .config_loader import get_setting
from .errors import DegeneratePairing, GridMismatch, NotCanonical, NotSimpleZero
from .spectra import Eigenvalue, SpectrumReport, adjugate, eigenvector

logger = logging.getLogger(__name__)


@dataclass
class WeightedVectorFunction:
    """[0, ℓ] 网格上的 n 维向量函数，属于 𝔥 = ⊕ L²_{|β_k|}"""

    grid: np.ndarray
    values: np.ndarray
    profile: WeightProfile

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        ell = self.profile.ell
        if self.values.shape != (len(self.grid), self.profile.n):
            raise GridMismatch("取值形状应为 (网格点数, n)", shape=self.values.shape, n=self.profile.n)
        if len(self.grid) < 3 or np.any(np.diff(self.grid) <= 0):
            raise GridMismatch("网格必须严格递增且至少 3 个点", points=len(self.grid))
        if abs(self.grid[0]) > 1e-12 * ell or abs(self.grid[-1] - ell) > 1e-12 * ell:
            raise GridMismatch(f"网格应覆盖 [0, {ell}]", start=self.grid[0], end=self.grid[-1])

    @property
    def n(self) -> int:
        return self.profile.n

    def resample(self, grid) -> "WeightedVectorFunction":
        """三次样条重采样到新网格"""
        grid = np.asarray(grid, dtype=float)
        if len(grid) == len(self.grid) and np.array_equal(grid, self.grid):
            return self
        re = CubicSpline(self.grid, self.values.real, axis=0)(grid)
        im = CubicSpline(self.grid, self.values.imag, axis=0)(grid)
        return WeightedVectorFunction(grid, re + 1j * im, self.profile)

    def scaled(self, factor: complex) -> "WeightedVectorFunction":
        return WeightedVectorFunction(self.grid, self.values * factor, self.profile)

    def norm(self) -> float:
        return float(np.sqrt(max(weighted_inner_product(self, self).real, 0.0)))


def uniform_grid(profile: WeightProfile, nodes: Optional[int] = None) -> np.ndarray:
    """Simpson 用的均匀网格（奇数个节点）"""
    nodes = int(nodes or get_setting("quadrature_grid"))
    nodes += 1 - nodes % 2
    return np.linspace(0.0, profile.ell, nodes)


def weighted_inner_product(f: WeightedVectorFunction, g: WeightedVectorFunction) -> complex:
    """
    (f, g)_𝔥 = ∫₀ℓ Σ_k f_k(x)·conj(g_k(x))·|β_k(x)| dx，复合 Simpson

    Raises:
        GridMismatch: 网格或权剖面不同
    """
    if f.profile is not g.profile and f.profile.key() != g.profile.key():
        raise GridMismatch("两个向量函数的权剖面不同")
    if len(f.grid) != len(g.grid) or not np.allclose(f.grid, g.grid, rtol=0.0, atol=1e-14 * f.profile.ell):
        raise GridMismatch("两个向量函数的网格不同，请先 resample", points=(len(f.grid), len(g.grid)))
    weight = np.abs(f.profile.beta_all(f.grid)).T
    integrand = np.sum(f.values * np.conj(g.values) * weight, axis=1)
    return complex(simpson(integrand, x=f.grid))


def unperturbed_eigenvector(profile: WeightProfile, column, lam: complex,
                            grid: Optional[np.ndarray] = None) -> WeightedVectorFunction:
    """col(a_1·e^{iλρ_1(x)}, …, a_n·e^{iλρ_n(x)})"""
    grid = uniform_grid(profile) if grid is None else np.asarray(grid, dtype=float)
    column = np.asarray(column, dtype=complex).ravel()
    values = column[None, :] * np.exp(1j * complex(lam) * profile.rho_all(grid).T)
    return WeightedVectorFunction(grid, values, profile)


# ---------------------------------------------------------------------------
# 配对恒等式
# ---------------------------------------------------------------------------

@dataclass
class PairingIdentity:
    lam: complex
    p: int
    q: int
    lhs: complex
    rhs: complex
    A_qp: complex
    delta0_prime: complex

    @property
    def residual(self) -> float:
        return float(abs(self.lhs - self.rhs))

    def to_dict(self) -> dict:
        return {"lam": [self.lam.real, self.lam.imag], "p": self.p, "q": self.q,
                "lhs": [self.lhs.real, self.lhs.imag], "rhs": [self.rhs.real, self.rhs.imag],
                "residual": self.residual}


def _unperturbed_adjugates(profile: WeightProfile, C: np.ndarray, D: np.ndarray, lam: complex):
    b = profile.b
    A0 = C + D @ np.diag(np.exp(1j * lam * b))
    dA0 = D @ np.diag(1j * b * np.exp(1j * lam * b))
    adj = adjugate(A0)
    return A0, adj, complex(np.trace(adj @ dA0))


def unperturbed_pair(profile: WeightProfile, C, D, lam: complex, p: int, q: int,
                     grid: Optional[np.ndarray] = None) -> Tuple[WeightedVectorFunction, WeightedVectorFunction]:
    """Q = 0 时的 Y_p⁰(·,λ) 与伴随问题的 Y*_q⁰(·,λ̄)"""
    bvp = DiracBVP(profile=profile, Q=PotentialMatrix.zeros(profile.n), boundary=BoundaryPair(C, D))
    if not is_canonical(bvp.C, bvp.D, profile):
        raise NotCanonical("配对恒等式要求规范型边界条件")
    adjoint = adjoint_problem(bvp)
    lam = complex(lam)
    _, adj, _ = _unperturbed_adjugates(profile, bvp.C, bvp.D, lam)
    _, adj_star, _ = _unperturbed_adjugates(profile, adjoint.C_star, adjoint.D_star, lam.conjugate())
    return (unperturbed_eigenvector(profile, adj[:, p], lam, grid),
            unperturbed_eigenvector(profile, adj_star[:, q], lam.conjugate(), grid))


def pairing_identity_residual(profile: WeightProfile, C, D, lam: complex, p: int, q: int,
                              grid: Optional[np.ndarray] = None) -> PairingIdentity:
    """
    比较 (Y_p⁰(·,λ), Y*_q⁰(·,λ̄))_𝔥 与 −i·𝓔(λ)·e^{i b_q⁻ λ}·A⁰_qp(λ)·Δ₀′(λ)

    左边按求积计算，右边为闭式；𝓔(λ) = exp(−i(b_1+…+b_n)λ)，b_q⁻ = min(b_q, 0)。

    Raises:
        NotSimpleZero: λ 不是 Δ₀ 的单零点
    """
    lam = complex(lam)
    pair = BoundaryPair(C, D)
    A0, adj, d0_prime = _unperturbed_adjugates(profile, pair.C, pair.D, lam)
    scale = max(1.0, float(np.max(np.abs(A0))))
    value = complex(np.linalg.det(A0))
    if abs(value) > 1e-8 * scale ** profile.n:
        raise NotSimpleZero(f"λ={lam} 不是 Δ₀ 的零点 (|Δ₀|={abs(value):.3e})", lam=lam)
    if abs(d0_prime) < 1e-10 * scale ** profile.n:
        raise NotSimpleZero(f"λ={lam} 是 Δ₀ 的重零点", lam=lam, derivative=d0_prime)
    Y, Y_star = unperturbed_pair(profile, pair.C, pair.D, lam, p, q, grid)
    lhs = weighted_inner_product(Y, Y_star)
    b = profile.b
    rhs = -1j * np.exp(-1j * lam * np.sum(b)) * np.exp(1j * min(b[q], 0.0) * lam) * adj[q, p] * d0_prime
    return PairingIdentity(lam=lam, p=p, q=q, lhs=lhs, rhs=complex(rhs), A_qp=complex(adj[q, p]),
                           delta0_prime=d0_prime)


# ---------------------------------------------------------------------------
# 本征向量对与双正交化
# ---------------------------------------------------------------------------

@dataclass
class EigenPair:
    """原问题在 λ 处与伴随问题在 λ̄ 处的本征向量"""

    lam: complex
    f: WeightedVectorFunction
    f_star: WeightedVectorFunction


@dataclass
class EigenpairSet:
    pairs: List[EigenPair]
    excluded: List[complex] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[EigenPair]:
        return iter(self.pairs)


def eigenpairs(bvp: DiracBVP, report: Union[SpectrumReport, Sequence[Eigenvalue]], p: Optional[int] = None,
               grid: Optional[np.ndarray] = None, jobs: Optional[int] = None,
               progress: Optional[bool] = None) -> EigenpairSet:
    """
    对每个单重本征值构造 (f, f*)；重本征值列入 excluded

    Args:
        bvp: 边值问题（须正则，以便取伴随）
        report: zeros_in_window 的结果或本征值列表
        p: 伴随矩阵的列，默认取范数最大列
        grid: 公共网格，默认 uniform_grid(profile)
    """
    eigenvalues = list(report.eigenvalues if isinstance(report, SpectrumReport) else report)
    adjoint = adjoint_of(bvp).bvp
    grid = uniform_grid(bvp.profile) if grid is None else np.asarray(grid, dtype=float)
    simple = [e for e in eigenvalues if e.multiplicity == 1]
    excluded = [e.lam for e in eigenvalues if e.multiplicity != 1]
    if excluded:
        logger.info("跳过 %d 个重本征值", len(excluded))

    def build(eig: Eigenvalue) -> EigenPair:
        primal = eigenvector(bvp, eig, p=p)
        dual = eigenvector(adjoint, eig.lam.conjugate(), p=p)
        f = WeightedVectorFunction(primal.grid, primal.values, bvp.profile).resample(grid)
        f_star = WeightedVectorFunction(dual.grid, dual.values, bvp.profile).resample(grid)
        return EigenPair(lam=eig.lam, f=f, f_star=f_star)

    jobs = int(jobs or get_setting("jobs"))
    progress = bool(get_setting("progress") if progress is None else progress)
    with tqdm(total=len(simple), disable=not progress, desc="本征向量") as bar:
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                pairs = []
                for pair in pool.map(build, simple):
                    pairs.append(pair)
                    bar.update(1)
        else:
            pairs = []
            for eig in simple:
                pairs.append(build(eig))
                bar.update(1)
    return EigenpairSet(pairs=pairs, excluded=excluded)


@dataclass
class BiorthogonalPair:
    lam: complex
    f: WeightedVectorFunction
    f_star: WeightedVectorFunction
    pairing_value: complex

    @property
    def product_norm(self) -> float:
        return self.f.norm() * self.f_star.norm()


@dataclass
class BiorthogonalSystem:
    pairs: List[BiorthogonalPair]
    cross: np.ndarray

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[BiorthogonalPair]:
        return iter(self.pairs)

    def __getitem__(self, index: int) -> BiorthogonalPair:
        return self.pairs[index]

    @property
    def max_cross(self) -> float:
        """max_{j≠k} |(f_j, f*_k)|"""
        if len(self.pairs) < 2:
            return 0.0
        off = self.cross - np.diag(np.diag(self.cross))
        return float(np.max(np.abs(off)))


def biorthogonal_normalize(pairs, normalize_primal: bool = True) -> BiorthogonalSystem:
    """
    把 f*_m 缩放为 (f_m, f*_m) = 1

    f 乘 α 时 f* 相应乘 1/ᾱ；normalize_primal 为真时先令 ‖f_m‖ = 1。

    Raises:
        DegeneratePairing: |(f_m, f*_m)| < 1e-12
    """
    result = []
    for pair in pairs:
        f = pair.f
        if normalize_primal:
            norm = f.norm()
            if norm == 0.0:
                raise DegeneratePairing(f"λ={pair.lam} 的本征向量为零", lam=pair.lam)
            f = f.scaled(1.0 / norm)
        value = weighted_inner_product(f, pair.f_star)
        if abs(value) < 1e-12:
            raise DegeneratePairing(f"λ={pair.lam} 处 (f, f*) 退化: {abs(value):.3e}", lam=pair.lam, value=value)
        f_star = pair.f_star.scaled(1.0 / np.conj(value))
        result.append(BiorthogonalPair(lam=complex(pair.lam), f=f, f_star=f_star, pairing_value=value))
    cross = np.array([[weighted_inner_product(a.f, b.f_star) for b in result] for a in result], dtype=complex)
    if len(result) > 1:
        worst = float(np.max(np.abs(cross - np.diag(np.diag(cross)))))
        logger.debug("双正交交叉项最大值 %.3e", worst)
    return BiorthogonalSystem(pairs=result, cross=cross.reshape(len(result), len(result)))


def _in_window(lam: complex, window: Optional[Tuple[float, float]]) -> bool:
    return window is None or window[0] <= lam.real <= window[1]


def uniform_minimality_index(pairs, window: Optional[Tuple[float, float]] = None) -> float:
    """max_m ‖f_m‖·‖f*_m‖，m 取 Re λ_m 落在窗口内的对"""
    products = [pair.f.norm() * pair.f_star.norm() for pair in pairs if _in_window(pair.lam, window)]
    return float(max(products)) if products else 0.0


def gram_condition(vectors, window: Optional[Tuple[float, float]] = None) -> float:
    """
    有限 Gram 矩阵 G_jk = (f_j, f_k)_𝔥 的条件数 λ_max/λ_min（Riesz 基的数值代理）

    vectors 可以是 WeightedVectorFunction 或带 f 属性的对；G 奇异时返回 inf。
    """
    funcs = []
    for item in vectors:
        if isinstance(item, WeightedVectorFunction):
            funcs.append(item)
        elif _in_window(item.lam, window):
            funcs.append(item.f)
    if not funcs:
        return 1.0
    G = np.array([[weighted_inner_product(a, b) for b in funcs] for a in funcs], dtype=complex)
    G = 0.5 * (G + G.conj().T)
    eig = np.linalg.eigvalsh(G)
    if eig[0] <= 0.0:
        return float("inf")
    return float(eig[-1] / eig[0])


# ---------------------------------------------------------------------------
# 诊断表
# ---------------------------------------------------------------------------

@dataclass
class RieszDiagnostics:
    pairs: pd.DataFrame
    windows: pd.DataFrame
    excluded: List[complex] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"pairs": self.pairs.to_dict(orient="records"), "windows": self.windows.to_dict(orient="records"),
                "excluded": [[z.real, z.imag] for z in self.excluded], "gram_condition_is_proxy": True}


def central_window(system: BiorthogonalSystem, size: int) -> List[BiorthogonalPair]:
    """|Re λ| 最小的 size 个对"""
    return sorted(system.pairs, key=lambda pair: (abs(pair.lam.real), pair.lam.real))[:size]


def riesz_diagnostics(system: BiorthogonalSystem, window_sizes: Sequence[int] = (10, 20, 40),
                      excluded: Optional[Sequence[complex]] = None) -> RieszDiagnostics:
    """逐对的范数表，以及逐窗口的一致极小性指标与 Gram 条件数"""
    ordered = sorted(system.pairs, key=lambda pair: (pair.lam.real, pair.lam.imag))
    rows = []
    for m, pair in enumerate(ordered):
        nf, ns = pair.f.norm(), pair.f_star.norm()
        rows.append({"m": m, "re": pair.lam.real, "im": pair.lam.imag, "norm_f": nf, "norm_f_star": ns,
                     "product": nf * ns})
    windows = []
    for size in window_sizes:
        chosen = central_window(system, size)
        if len(chosen) < size:
            logger.warning("窗口大小 %d 超过可用的本征对数 %d", size, len(chosen))
        windows.append({"size": int(size), "available": len(chosen),
                        "minimality_index": uniform_minimality_index(chosen),
                        "gram_condition": gram_condition(chosen)})
    return RieszDiagnostics(pairs=pd.DataFrame(rows, columns=["m", "re", "im", "norm_f", "norm_f_star", "product"]),
                            windows=pd.DataFrame(windows, columns=["size", "available", "minimality_index",
                                                                   "gram_condition"]),
                            excluded=list(excluded or []))
