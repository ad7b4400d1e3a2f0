"""
特征行列式与谱 - Δ(λ)、指数多项式展开、零点定位、本征向量、渐近配对、严格正则性判别
"""

import logging
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.optimize import linear_sum_assignment

from .boundary import gauge_transform, regularity
from .bvp_core import CommensurateDeclaration, DiracBVP, WeightProfile
from .config_loader import get_setting
from .errors import CountMismatch, InsufficientTerms, NotAnEigenvalue, SignPatternViolated, ValidationError
from .fundamental import monodromy_batch, solve_fundamental
from .zeros import find_zeros

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# 行列式
# ---------------------------------------------------------------------------

def adjugate(M) -> np.ndarray:
    """
    伴随矩阵（余子式转置），对奇异矩阵同样成立

    Args:
        M: 形状 (..., n, n)

    Returns:
        np.ndarray: 与 M 同形状，满足 M·adj(M) = det(M)·I
    """
    M = np.asarray(M, dtype=complex)
    n = M.shape[-1]
    if n == 1:
        return np.ones_like(M)
    adj = np.empty_like(M)
    idx = np.arange(n)
    for i in range(n):
        rows = idx[idx != i]
        for j in range(n):
            cols = idx[idx != j]
            minor = M[..., rows[:, None], cols[None, :]]
            adj[..., j, i] = (-1) ** (i + j) * np.linalg.det(minor)
    return adj


def delta(bvp: DiracBVP, lam: complex, steps: Optional[int] = None, tol: Optional[float] = None) -> complex:
    """Δ(λ) = det(C + D·Φ(ℓ,λ))"""
    traj = solve_fundamental(bvp, lam, steps=steps, tol=tol)
    return complex(np.linalg.det(bvp.C + bvp.D @ traj.end))


def delta_derivative(bvp: DiracBVP, lam: complex, steps: Optional[int] = None, tol: Optional[float] = None) -> complex:
    """Jacobi 公式 Δ′(λ) = tr(adj(C + DΦ(ℓ,λ))·D·∂_λΦ(ℓ,λ))"""
    traj = solve_fundamental(bvp, lam, steps=steps, tol=tol, with_derivative=True)
    A = bvp.C + bvp.D @ traj.end
    return complex(np.trace(adjugate(A) @ bvp.D @ traj.derivative[-1]))


def delta_batch(bvp: DiracBVP, lams, with_derivative: bool = False, steps: Optional[int] = None):
    """
    批量计算 Δ(λ)（Magnus 推进），可选同时给出 Δ′(λ)

    Returns:
        Δ 数组，或 (Δ, Δ′) 元组
    """
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    Phi, dPhi = monodromy_batch(bvp, lams, steps=steps, with_derivative=with_derivative)
    A = bvp.C[None] + bvp.D[None] @ Phi
    values = np.linalg.det(A)
    if not with_derivative:
        return values
    derivative = np.einsum("kii->k", adjugate(A) @ (bvp.D[None] @ dPhi))
    return values, derivative


# ---------------------------------------------------------------------------
# 指数多项式
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ExponentialPolynomial:
    """F(λ) = Σ γ_k e^{iλσ_k}，σ_k 严格递增；声明可公度时 σ_k = m_k·base"""

    exponents: np.ndarray
    coefficients: np.ndarray
    base: Optional[float] = None
    multiples: Optional[Tuple[int, ...]] = None

    @classmethod
    def from_terms(cls, terms: Sequence[Tuple[float, complex]], base: Optional[float] = None,
                   merge_tol: float = 1e-12, drop_tol: float = 1e-12) -> "ExponentialPolynomial":
        """合并相同指数，丢弃相对大小低于 drop_tol 的系数"""
        ordered = sorted(((float(s), complex(g)) for s, g in terms), key=lambda t: t[0])
        merged: List[List] = []
        for s, g in ordered:
            if merged and abs(s - merged[-1][0]) <= merge_tol * max(1.0, abs(s)):
                merged[-1][1] += g
            else:
                merged.append([s, g])
        scale = max((abs(g) for _, g in merged), default=0.0)
        kept = [(s, g) for s, g in merged if abs(g) > drop_tol * scale]
        exponents = np.array([s for s, _ in kept], dtype=float)
        coefficients = np.array([g for _, g in kept], dtype=complex)
        multiples = None
        if base is not None:
            if base < 0:
                base = -base
            multiples = tuple(int(round(s / base)) for s in exponents)
            for s, m in zip(exponents, multiples):
                if abs(s - m * base) > 1e-9 * max(1.0, abs(s)):
                    raise ValidationError(f"指数 {s} 不是 base={base} 的整数倍", exponent=s, base=base)
        return cls(exponents=exponents, coefficients=coefficients, base=base, multiples=multiples)

    @property
    def terms(self) -> List[Tuple[float, complex]]:
        return list(zip(self.exponents.tolist(), self.coefficients.tolist()))

    @property
    def commensurate(self) -> bool:
        return self.base is not None

    def __len__(self) -> int:
        return len(self.exponents)

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=complex)
        phases = np.exp(1j * lam[..., None] * self.exponents)
        return np.sum(self.coefficients * phases, axis=-1)

    def derivative(self, lam):
        lam = np.asarray(lam, dtype=complex)
        phases = np.exp(1j * lam[..., None] * self.exponents)
        return np.sum(1j * self.exponents * self.coefficients * phases, axis=-1)

    def reduced_polynomial(self) -> np.ndarray:
        """P(z) = Σ γ_k z^{m_k − m_min} 的降幂系数，z = e^{iλ·base}"""
        if not self.commensurate:
            raise ValidationError("指数未声明可公度，无法化为代数多项式")
        shift = min(self.multiples)
        degree = max(self.multiples) - shift
        coeffs = np.zeros(degree + 1, dtype=complex)
        for m, g in zip(self.multiples, self.coefficients):
            coeffs[degree - (m - shift)] += g
        return coeffs

    def to_dict(self) -> dict:
        return {"terms": [[s, [g.real, g.imag]] for s, g in self.terms], "base": self.base,
                "multiples": list(self.multiples) if self.multiples is not None else None}


def delta0_expansion(C, D, profile: WeightProfile, base: Optional[float] = None) -> ExponentialPolynomial:
    """
    Δ₀(λ) = Σ_P J_P e^{iλb_P}，J_P = det(C(I − P) + DP)，P 取遍 2ⁿ 个坐标投影

    C、D 的列与 profile 的规范顺序一致；profile 带可公度声明时自动沿用其 base。
    """
    C = np.asarray(C, dtype=complex)
    D = np.asarray(D, dtype=complex)
    n = profile.n
    if base is None and profile.commensurate is not None:
        base = profile.commensurate.base
    terms = []
    for r in range(n + 1):
        for subset in combinations(range(n), r):
            mixed = C.copy()
            cols = list(subset)
            mixed[:, cols] = D[:, cols]
            terms.append((float(np.sum(profile.b[cols])) if cols else 0.0, complex(np.linalg.det(mixed))))
    return ExponentialPolynomial.from_terms(terms, base=base)


def modified_delta0(bvp: DiracBVP) -> ExponentialPolynomial:
    """Δ̃₀(λ) = det(C + D·W(ℓ)·Φ₀(ℓ,λ))，Q 的分块对角部分为零时即 Δ₀"""
    gauge = gauge_transform(bvp)
    return delta0_expansion(bvp.C, gauge.D_tilde, bvp.profile)


@dataclass
class Eigenvalue:
    lam: complex
    multiplicity: int
    residual: float

    def to_dict(self) -> dict:
        return {"re": self.lam.real, "im": self.lam.imag, "multiplicity": self.multiplicity,
                "residual": self.residual}

    @classmethod
    def from_dict(cls, data: dict) -> "Eigenvalue":
        return cls(lam=complex(data["re"], data["im"]), multiplicity=int(data["multiplicity"]),
                   residual=float(data["residual"]))


def _sorted(eigenvalues: List[Eigenvalue]) -> List[Eigenvalue]:
    return sorted(eigenvalues, key=lambda e: (e.lam.real, e.lam.imag))


def _polish_root(coeffs: np.ndarray, z: complex, multiplicity: int) -> complex:
    dcoeffs = np.polyder(coeffs)
    for _ in range(3):
        dp = np.polyval(dcoeffs, z)
        if dp == 0:
            break
        step = multiplicity * np.polyval(coeffs, z) / dp
        if not np.isfinite(step) or abs(step) > 1e-6 * max(1.0, abs(z)):
            break
        z = z - step
    return complex(z)


def polynomial_roots(poly: ExponentialPolynomial, cluster_tol: float = 1e-6) -> List[Tuple[complex, int]]:
    """约化多项式的根及其重数（按距离聚类）"""
    coeffs = poly.reduced_polynomial()
    raw = np.roots(coeffs)
    groups: List[List[complex]] = []
    for z in raw:
        for group in groups:
            if abs(np.mean(group) - z) <= cluster_tol * max(1.0, abs(z)):
                group.append(z)
                break
        else:
            groups.append([z])
    return [(_polish_root(coeffs, complex(np.mean(g)), len(g)), len(g)) for g in groups]


def exp_poly_zeros(poly: ExponentialPolynomial, window: Tuple[float, float], h: float, tol: Optional[float] = None,
                   jobs: Optional[int] = None) -> List[Eigenvalue]:
    """
    指数多项式在 [a, b] × [−h, h] 内的零点

    可公度时由 z = e^{iλ·base} 的代数根给出精确的算术级数，否则用辐角原理。
    """
    if len(poly) < 2:
        raise InsufficientTerms(f"指数多项式只有 {len(poly)} 项，没有零点或恒为零", terms=len(poly))
    a, b = float(window[0]), float(window[1])
    if poly.commensurate:
        sigma = poly.base
        found = []
        for z, mult in polynomial_roots(poly):
            im = -math.log(abs(z)) / sigma
            if abs(im) > h:
                continue
            arg = math.atan2(z.imag, z.real)
            for m in range(math.ceil((a * sigma - arg) / (2 * math.pi)),
                           math.floor((b * sigma - arg) / (2 * math.pi)) + 1):
                lam = complex((arg + 2 * math.pi * m) / sigma, im)
                found.append(Eigenvalue(lam=lam, multiplicity=mult, residual=float(abs(poly(lam)))))
        return _sorted(found)

    search = find_zeros(lambda z: (poly(z), poly.derivative(z)), a, b, -h, h, tol=tol, jobs=jobs)
    return _sorted([Eigenvalue(lam=z.value, multiplicity=z.multiplicity, residual=z.residual)
                    for z in search.zeros])


def default_strip(poly: ExponentialPolynomial, allowance: Optional[float] = None) -> float:
    """
    带宽 h = h₀ + 1 + allowance

    h₀ 在可公度时为级数虚部的精确最大值，否则取首末项占优给出的界。
    """
    allowance = float(get_setting("strip_allowance") if allowance is None else allowance)
    if len(poly) < 2:
        return 1.0 + allowance
    if poly.commensurate:
        h0 = max(abs(math.log(abs(z))) / poly.base for z, _ in polynomial_roots(poly))
    else:
        mags = np.abs(poly.coefficients)
        s = poly.exponents
        top = math.log(max(np.sum(mags[:-1]) / mags[-1], 1e-300)) / (s[-1] - s[-2])
        bottom = math.log(max(np.sum(mags[1:]) / mags[0], 1e-300)) / (s[1] - s[0])
        h0 = max(top, bottom, 0.0)
    return float(h0 + 1.0 + allowance)


# ---------------------------------------------------------------------------
# 谱报告与零点搜索
# ---------------------------------------------------------------------------

@dataclass
class SpectrumReport:
    window: Tuple[float, float]
    h: float
    eigenvalues: List[Eigenvalue]
    tol: float
    winding_total: Optional[int] = None
    warnings: List[str] = field(default_factory=list)
    pairing: Optional["SpectralPairing"] = None

    @property
    def count(self) -> int:
        return sum(e.multiplicity for e in self.eigenvalues)

    def values(self, expand: bool = False) -> np.ndarray:
        if expand:
            return np.array([e.lam for e in self.eigenvalues for _ in range(e.multiplicity)], dtype=complex)
        return np.array([e.lam for e in self.eigenvalues], dtype=complex)

    def shifted(self, offset: complex) -> "SpectrumReport":
        moved = [Eigenvalue(e.lam + offset, e.multiplicity, e.residual) for e in self.eigenvalues]
        return SpectrumReport(window=self.window, h=self.h, eigenvalues=moved, tol=self.tol,
                              winding_total=self.winding_total)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{"re": e.lam.real, "im": e.lam.imag, "multiplicity": e.multiplicity,
                              "residual": e.residual} for e in self.eigenvalues],
                            columns=["re", "im", "multiplicity", "residual"])

    def to_dict(self) -> dict:
        data = {"window": list(self.window), "h": self.h, "tol": self.tol, "winding_total": self.winding_total,
                "count": self.count, "eigenvalues": [e.to_dict() for e in self.eigenvalues],
                "warnings": list(self.warnings)}
        if self.pairing is not None:
            data["pairing"] = self.pairing.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SpectrumReport":
        return cls(window=tuple(data["window"]), h=float(data["h"]), tol=float(data["tol"]),
                   eigenvalues=[Eigenvalue.from_dict(e) for e in data["eigenvalues"]],
                   winding_total=data.get("winding_total"), warnings=list(data.get("warnings", [])))


def zeros_in_window(bvp: DiracBVP, window: Tuple[float, float], h: Optional[float] = None,
                    tol: Optional[float] = None, jobs: Optional[int] = None,
                    progress: Optional[bool] = None) -> SpectrumReport:
    """
    Δ_Q 在 [a, b] × [−h, h] 内的全部零点

    Args:
        bvp: 边值问题
        window: 实部区间 (a, b)
        h: 带宽，默认由 default_strip(modified_delta0(bvp)) 给出
        tol: 根的容限，默认 root_tol
        jobs: 子矩形并行线程数
        progress: 显示进度条

    Returns:
        SpectrumReport: 零点按实部排序，总重数等于窗口边界的绕数
    """
    tol = float(tol or get_setting("root_tol"))
    warnings = []
    report = regularity(bvp.C, bvp.D, bvp.profile)
    if not report.regular:
        warnings.append("boundary conditions are not regular")
        logger.warning("边界条件不正则，零点可能不在带内")
    elif report.marginal:
        warnings.append("boundary conditions are marginally regular")
    if h is None:
        h = default_strip(modified_delta0(bvp))
    a, b = float(window[0]), float(window[1])
    search = find_zeros(lambda z: delta_batch(bvp, z, with_derivative=True), a, b, -h, h,
                        tol=tol, jobs=jobs, progress=progress)
    warnings.extend(search.warnings)
    eigenvalues = _sorted([Eigenvalue(lam=z.value, multiplicity=z.multiplicity, residual=z.residual)
                           for z in search.zeros])
    logger.info("窗口 [%.3f, %.3f] × [−%.3f, %.3f]: %d 个零点（含重数）", a, b, h, h, search.winding_total)
    return SpectrumReport(window=(a, b), h=float(h), eigenvalues=eigenvalues,
                          tol=tol, winding_total=search.winding_total, warnings=warnings)


def spectrum_from_polynomial(poly: ExponentialPolynomial, window: Tuple[float, float], h: float,
                             tol: Optional[float] = None) -> SpectrumReport:
    """把 exp_poly_zeros 的结果包装为 SpectrumReport"""
    tol = float(tol or get_setting("root_tol"))
    eigenvalues = exp_poly_zeros(poly, window, h, tol=tol)
    return SpectrumReport(window=(float(window[0]), float(window[1])), h=float(h), eigenvalues=eigenvalues,
                          tol=tol, winding_total=sum(e.multiplicity for e in eigenvalues))


# ---------------------------------------------------------------------------
# 渐近配对
# ---------------------------------------------------------------------------

@dataclass
class SpectralPairing:
    pairs: List[Tuple[complex, complex, float]]
    bands: List[Dict[str, Any]]
    onset: Optional[int]
    mismatch: Optional[CountMismatch] = None
    edge_unmatched: List[complex] = field(default_factory=list)

    @property
    def deviations(self) -> np.ndarray:
        return np.array([d for _, _, d in self.pairs], dtype=float)

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviations)) if self.pairs else 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{"re": lam.real, "im": lam.imag, "re0": lam0.real, "im0": lam0.imag, "deviation": dev}
                             for lam, lam0, dev in self.pairs],
                            columns=["re", "im", "re0", "im0", "deviation"])

    def to_dict(self) -> dict:
        return {"pairs": [[[a.real, a.imag], [b.real, b.imag], d] for a, b, d in self.pairs],
                "bands": self.bands, "onset_empirical": self.onset,
                "edge_unmatched": [[z.real, z.imag] for z in self.edge_unmatched],
                "mismatch": self.mismatch.to_dict() if self.mismatch is not None else None}


def _band_stats(pairs: List[Tuple[complex, complex, float]]) -> List[Dict[str, Any]]:
    """按 |Re λ⁰| 的二进带 [2ᵏπ, 2ᵏ⁺¹π) 统计最大偏差与尾部最大偏差"""
    if not pairs:
        return []
    mags = np.array([abs(lam0.real) for _, lam0, _ in pairs])
    devs = np.array([d for _, _, d in pairs])
    top = int(np.floor(np.log2(max(mags.max(), np.pi) / np.pi)))
    bands = []
    for k in range(-1, top + 1):
        lo = 0.0 if k < 0 else np.pi * 2.0 ** k
        hi = np.pi if k < 0 else np.pi * 2.0 ** (k + 1)
        inside = (mags >= lo) & (mags < hi)
        tail = mags >= lo
        if not np.any(inside):
            continue
        bands.append({"band": k, "lo": float(lo), "hi": float(hi), "count": int(inside.sum()),
                      "max": float(devs[inside].max()), "tail_max": float(devs[tail].max())})
    return bands


def _onset(pairs: List[Tuple[complex, complex, float]]) -> Optional[int]:
    """按 |Re λ⁰| 排序后，自该下标起每个偏差都小于参考点到最近邻距离的一半"""
    if not pairs:
        return None
    ordered = sorted(pairs, key=lambda p: abs(p[1].real))
    ref = np.array([p[1] for p in ordered])
    devs = np.array([p[2] for p in ordered])
    if len(ref) == 1:
        return 0
    dist = np.abs(ref[:, None] - ref[None, :])
    np.fill_diagonal(dist, np.inf)
    ok = devs < 0.5 * dist.min(axis=1)
    if not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    return int(bad[-1] + 1) if len(bad) else 0


def _edge_margin(refs: np.ndarray, lams: np.ndarray) -> float:
    """参考零点（不足两个时取被测零点）互异值之间最小距离的一半"""
    for values in (refs, lams):
        distinct = np.unique(np.round(values, 9))
        if len(distinct) >= 2:
            dist = np.abs(distinct[:, None] - distinct[None, :])
            np.fill_diagonal(dist, np.inf)
            return 0.5 * float(dist.min())
    return 0.0


def pair_spectra(spectrum: SpectrumReport, reference: SpectrumReport) -> SpectralPairing:
    """
    在公共窗口内按 |λ − λ⁰| 做最优二部匹配（按重数展开）

    离窗口左右边界不到半个参考间距的零点允许不配对（其伙伴落在窗口外），记入 edge_unmatched；
    其余未配对的零点视为计数不一致，CountMismatch 附在结果中并记录警告，不抛出。
    """
    lo = max(spectrum.window[0], reference.window[0])
    hi = min(spectrum.window[1], reference.window[1])
    if hi <= lo:
        raise ValidationError("两个谱报告的窗口不重叠", window=spectrum.window, reference=reference.window)
    lams = spectrum.values(expand=True)
    refs = reference.values(expand=True)
    lams = lams[(lams.real >= lo) & (lams.real <= hi)]
    refs = refs[(refs.real >= lo) & (refs.real <= hi)]
    n, m = len(lams), len(refs)
    margin = _edge_margin(refs, lams)
    cost = np.abs(lams[:, None] - refs[None, :])
    big = 1e6 * (1.0 + (float(cost.max()) if cost.size else 0.0))
    forbidden = big * (n + m + 1)

    def leave(values: np.ndarray) -> np.ndarray:
        near_edge = np.minimum(values.real - lo, hi - values.real) < margin
        block = np.full((len(values), len(values)), forbidden)
        np.fill_diagonal(block, np.where(near_edge, margin, big))
        return block

    augmented = np.block([[cost, leave(lams)], [leave(refs), np.zeros((m, n))]])
    rows, cols = linear_sum_assignment(augmented) if n + m else (np.empty(0, int), np.empty(0, int))
    pairs, left_l, left_r = [], [], []
    for i, j in zip(rows, cols):
        if i < n and j < m:
            pairs.append((complex(lams[i]), complex(refs[j]), float(cost[i, j])))
        elif i < n:
            left_l.append(complex(lams[i]))
        elif j < m:
            left_r.append(complex(refs[j]))
    pairs.sort(key=lambda p: (p[1].real, p[1].imag))

    inner = lambda z: min(z.real - lo, hi - z.real) >= margin
    mismatch = None
    if any(inner(z) for z in left_l + left_r):
        mismatch = CountMismatch(f"公共窗口 [{lo}, {hi}] 内计数不一致: {n} 对 {m}", counted=n, reference=m)
        logger.warning(mismatch.message)
    edge_unmatched = [z for z in left_l + left_r if not inner(z)]
    if edge_unmatched:
        logger.info("窗口边界附近 %d 个零点的伙伴在窗口外", len(edge_unmatched))
    return SpectralPairing(pairs=pairs, bands=_band_stats(pairs), onset=_onset(pairs), mismatch=mismatch,
                           edge_unmatched=edge_unmatched)


# ---------------------------------------------------------------------------
# 本征向量
# ---------------------------------------------------------------------------

@dataclass
class EigenvectorTrajectory:
    lam: complex
    p: int
    grid: np.ndarray
    values: np.ndarray
    adjugate: np.ndarray
    zero_columns: List[int]
    boundary_residual: float

    @property
    def trivial(self) -> bool:
        return self.p in self.zero_columns

    def max_column_angle(self) -> float:
        """非零列两两夹角的最大值（秩一时为 0）"""
        cols = [self.adjugate[:, j] for j in range(self.adjugate.shape[1]) if j not in self.zero_columns]
        worst = 0.0
        for u, v in combinations(cols, 2):
            cosine = abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v))
            worst = max(worst, float(np.arccos(min(1.0, cosine))))
        return worst


def eigenvector(bvp: DiracBVP, eig, p: Optional[int] = None, steps: Optional[int] = None,
                tol: Optional[float] = None) -> EigenvectorTrajectory:
    """
    Y_p(x,λ) = Φ(x,λ)·adj(C + DΦ(ℓ,λ))[:, p]

    p 为 None 时取范数最大的列；范数低于最大列 1e-8 倍的列记为零列。
    """
    lam = complex(eig.lam if isinstance(eig, Eigenvalue) else eig)
    traj = solve_fundamental(bvp, lam, steps=steps)
    A = bvp.C + bvp.D @ traj.end
    scale = max(1.0, float(np.max(np.abs(A)))) ** bvp.n
    tol = float(tol if tol is not None else 1e-6) * scale
    value = complex(np.linalg.det(A))
    if abs(value) > tol:
        raise NotAnEigenvalue(f"|Δ({lam})| = {abs(value):.3e} 超过容限 {tol:.3e}", lam=lam, residual=abs(value))
    adj = adjugate(A)
    norms = np.linalg.norm(adj, axis=0)
    zero_columns = [j for j in range(bvp.n) if norms[j] < 1e-8 * max(norms.max(), 1e-300)]
    if p is None:
        p = int(np.argmax(norms))
    if not 0 <= p < bvp.n:
        raise ValidationError(f"列下标越界: {p}", index=p)
    Phi = traj.values * np.exp(traj.log_scale)[:, None, None]
    values = Phi @ adj[:, p]
    residual = float(np.linalg.norm(bvp.C @ values[0] + bvp.D @ values[-1]))
    if p in zero_columns:
        logger.warning("第 %d 列为零列，Y_p 为平凡解", p)
    return EigenvectorTrajectory(lam=lam, p=p, grid=traj.grid, values=values, adjugate=adj,
                                 zero_columns=zero_columns, boundary_residual=residual)


# ---------------------------------------------------------------------------
# 严格正则性
# ---------------------------------------------------------------------------

STRICT = "strictly-regular"
NOT_STRICT = "regular-not-strict"
NOT_REGULAR = "not-regular"
UNDECIDABLE = "undecidable-numeric"


@dataclass
class StrictRegularityVerdict:
    status: str
    reason: Dict[str, Any]

    @property
    def strict(self) -> bool:
        return self.status == STRICT

    def to_dict(self) -> dict:
        return {"status": self.status, "reason": self.reason}


def _valuation2(k: int) -> int:
    k = abs(int(k))
    v = 0
    while k and k % 2 == 0:
        k //= 2
        v += 1
    return v


def classify_progressions(scales: Sequence[float], coefficients: Sequence[complex],
                          multiples: Optional[Sequence[int]] = None, base: Optional[float] = None,
                          criterion: str = "progressions", tol: float = 1e-9) -> StrictRegularityVerdict:
    """
    级数 {(2πm − i·ln t_k)/s_k} 两两渐近分离的判别

    对每对 j ≠ k：s_j·ln|t_k| ≠ s_k·ln|t_j| 时分离；否则需声明 s_j/s_k 为有理数且
    (s_j·arg t_k − s_k·arg t_j)/(2π·gcd(s_j, s_k)) ∉ ℤ。未声明时分子为零可判定不分离，其余无法判定。
    """
    scales = [float(s) for s in scales]
    coefficients = [complex(t) for t in coefficients]
    rational = multiples is not None and base is not None
    clauses = []
    failed, undecided = [], []
    for j, k in combinations(range(len(scales)), 2):
        sj, sk = scales[j], scales[k]
        tj, tk = coefficients[j], coefficients[k]
        ln_gap = sj * math.log(abs(tk)) - sk * math.log(abs(tj))
        entry = {"j": j, "k": k, "ln_gap": ln_gap}
        if abs(ln_gap) > tol * max(1.0, abs(sj * math.log(abs(tk))), abs(sk * math.log(abs(tj)))):
            entry["clause"] = "ln-clause"
            entry["separated"] = True
        else:
            numerator = sj * np.angle(tk) - sk * np.angle(tj)
            if rational:
                g = math.gcd(abs(int(multiples[j])), abs(int(multiples[k])))
                ratio = numerator / (2 * math.pi * abs(base) * g)
                entry.update(clause="arg-clause", ratio=float(ratio))
                entry["separated"] = bool(abs(ratio - round(ratio)) > tol * max(1.0, abs(ratio)))
            elif abs(numerator) <= tol * max(1.0, abs(sj), abs(sk)):
                entry.update(clause="coincident", separated=False)
            else:
                entry.update(clause="undecided", separated=None)
        clauses.append(entry)
        if entry["separated"] is False:
            failed.append((j, k))
        elif entry["separated"] is None:
            undecided.append((j, k))

    reason: Dict[str, Any] = {"criterion": criterion, "pairs": clauses, "rational_declared": rational}
    if failed:
        status = NOT_STRICT
        reason["clause"] = "progressions share asymptotic zeros"
    elif undecided:
        status = UNDECIDABLE
        reason["clause"] = "rationality of scale ratios not declared"
    else:
        status = STRICT
        reason["clause"] = "ln-clause" if all(c["clause"] == "ln-clause" for c in clauses) else "arg-clause"
    return StrictRegularityVerdict(status=status, reason=reason)


def _declared_multiples(commensurate: Optional[CommensurateDeclaration], n: int) -> Tuple[Optional[Tuple[int, ...]],
                                                                                      Optional[float]]:
    if commensurate is None:
        return None, None
    if len(commensurate.multiples) != n:
        raise ValidationError("可公度声明的个数与权个数不一致", declared=len(commensurate.multiples), n=n)
    return tuple(commensurate.multiples), float(commensurate.base)


def classify_quasi_periodic(c: Sequence[complex], b: Sequence[float],
                            commensurate: Optional[CommensurateDeclaration] = None) -> StrictRegularityVerdict:
    """
    y(ℓ) = diag(c)·y(0) 型边界条件（C = diag(c), D = −I）

    Δ₀(λ) = Π(c_k − e^{iλb_k})，第 k 个因子的零点为 (2πm − i·ln c_k)/b_k。
    """
    c = [complex(v) for v in c]
    b = [float(v) for v in b]
    if any(v == 0 for v in c) or any(v == 0 for v in b):
        raise ValidationError("系数 c_k 与 b_k 必须非零", c=c, b=b)
    multiples, base = _declared_multiples(commensurate, len(b))
    verdict = classify_progressions(b, c, multiples, base, criterion="quasi-periodic")
    if all(v == 1 for v in c) and len(c) > 1:
        verdict.reason["clause"] = "periodic clause"
    elif all(v == -1 for v in c) and multiples is not None and len(c) > 1:
        valuations = [_valuation2(m) for m in multiples]
        verdict.reason["clause"] = "power-of-two clause"
        verdict.reason["dyadic_valuations"] = valuations
    return verdict


def classify_separated(c: Sequence[complex], d: Sequence[complex], b: Sequence[float],
                       commensurate: Optional[CommensurateDeclaration] = None) -> StrictRegularityVerdict:
    """
    分离型边界条件 c_{2k−1}y_{2k−1}(0) + c_{2k}y_{2k}(0) = 0, d_{2k−1}y_{2k−1}(ℓ) + d_{2k}y_{2k}(ℓ) = 0

    σ_k = b_{2k} − b_{2k−1}，τ_k = c_{2k}d_{2k−1}/(c_{2k−1}d_{2k})。
    """
    c = [complex(v) for v in c]
    d = [complex(v) for v in d]
    b = [float(v) for v in b]
    if not (len(c) == len(d) == len(b)) or len(b) % 2:
        raise ValidationError("c、d、b 长度必须相同且为偶数", c=len(c), d=len(d), b=len(b))
    if any(v == 0 for v in c + d):
        raise ValidationError("分离型边界条件的系数必须非零")
    for k in range(0, len(b), 2):
        if not b[k] < 0 < b[k + 1]:
            raise SignPatternViolated(f"需要 b_{k} < 0 < b_{k + 1}: ({b[k]}, {b[k + 1]})", index=k)
    sigma = [b[k + 1] - b[k] for k in range(0, len(b), 2)]
    tau = [c[k + 1] * d[k] / (c[k] * d[k + 1]) for k in range(0, len(b), 2)]
    multiples, base = _declared_multiples(commensurate, len(b))
    pair_multiples = None
    if multiples is not None:
        pair_multiples = [multiples[k + 1] - multiples[k] for k in range(0, len(b), 2)]
    verdict = classify_progressions(sigma, tau, pair_multiples, base, criterion="separated")
    verdict.reason["sigma"] = sigma
    verdict.reason["tau"] = [[t.real, t.imag] for t in tau]
    return verdict


def _diagonal_structure(C: np.ndarray, D: np.ndarray) -> bool:
    off = ~np.eye(C.shape[0], dtype=bool)
    return (np.all(np.abs(C[off]) == 0) and np.all(np.abs(D[off]) == 0)
            and np.all(np.diag(C) != 0) and np.all(np.diag(D) != 0))


def _separated_structure(C: np.ndarray, D: np.ndarray, b: np.ndarray) -> Optional[List[Tuple[int, int, int, int]]]:
    """识别分离型结构，返回 (负下标, 正下标, C 行, D 行) 列表"""
    n = C.shape[0]
    if n % 2:
        return None
    support = lambda row: tuple(np.flatnonzero(np.abs(row) > 0))
    c_rows = {i: support(C[i]) for i in range(n) if support(C[i])}
    d_rows = {i: support(D[i]) for i in range(n) if support(D[i])}
    if set(c_rows) & set(d_rows) or len(c_rows) != n // 2 or len(d_rows) != n // 2:
        return None
    pairs, used = [], set()
    for ci, cols in c_rows.items():
        if len(cols) != 2 or set(cols) & used:
            return None
        match = [di for di, dcols in d_rows.items() if dcols == cols]
        if len(match) != 1:
            return None
        j, k = cols
        if b[j] > 0:
            j, k = k, j
        if not b[j] < 0 < b[k]:
            return None
        used.update(cols)
        pairs.append((j, k, ci, match[0]))
    return pairs


def classify_bvp(bvp: DiracBVP) -> StrictRegularityVerdict:
    """
    按边界条件结构选择判别准则：拟周期（C、D 对角）、分离型、已声明可公度的一般情形

    Q 的分块对角部分非零时用规范变换后的 D̃ = D·W(ℓ)。
    """
    report = regularity(bvp.C, bvp.D, bvp.profile)
    if not report.regular:
        return StrictRegularityVerdict(status=NOT_REGULAR, reason={"criterion": "regularity",
                                                                   "regularity": report.to_dict()})
    profile = bvp.profile
    C = bvp.C
    D = gauge_transform(bvp).D_tilde
    b = profile.b

    if _diagonal_structure(C, D):
        c = -np.diag(C) / np.diag(D)
        verdict = classify_quasi_periodic(c, b, profile.commensurate)
    else:
        pairs = _separated_structure(C, D, b)
        if pairs is not None:
            order = [i for j, k, _, _ in pairs for i in (j, k)]
            c_vals = [C[ci, i] for j, k, ci, _ in pairs for i in (j, k)]
            d_vals = [D[di, i] for j, k, _, di in pairs for i in (j, k)]
            declaration = profile.commensurate.permuted(order) if profile.commensurate is not None else None
            verdict = classify_separated(c_vals, d_vals, b[order], declaration)
        elif profile.commensurate is not None:
            verdict = classify_by_roots(delta0_expansion(C, D, profile))
        else:
            verdict = StrictRegularityVerdict(status=UNDECIDABLE, reason={
                "criterion": "general", "clause": "weights not declared commensurable"})
    verdict.reason["regularity"] = report.to_dict()
    return verdict


def classify_by_roots(poly: ExponentialPolynomial) -> StrictRegularityVerdict:
    """可公度时严格正则当且仅当约化多项式无重根"""
    coeffs = poly.reduced_polynomial()
    groups = polynomial_roots(poly)
    reason: Dict[str, Any] = {"criterion": "polynomial-roots", "degree": len(coeffs) - 1,
                              "multiplicities": [m for _, m in groups]}
    values = np.array([z for z, _ in groups])
    if len(values) > 1:
        gaps = np.abs(values[:, None] - values[None, :])
        np.fill_diagonal(gaps, np.inf)
        reason["min_gap"] = float(gaps.min())
    else:
        reason["min_gap"] = None
    dcoeffs = np.polyder(coeffs)
    norm = float(np.max(np.abs(coeffs)))
    clustered = [(z, m) for z, m in groups if m > 1]
    confirmed = [z for z, m in clustered
                 if abs(np.polyval(dcoeffs, z)) <= 1e-6 * norm * max(1.0, abs(z)) ** len(coeffs)]
    if confirmed:
        return StrictRegularityVerdict(status=NOT_STRICT, reason={**reason, "clause": "repeated root"})
    if clustered or (reason["min_gap"] is not None and reason["min_gap"] < float(get_setting("root_gap_tol"))):
        return StrictRegularityVerdict(status=UNDECIDABLE, reason={**reason, "clause": "root gap near tolerance"})
    return StrictRegularityVerdict(status=STRICT, reason={**reason, "clause": "distinct roots"})
