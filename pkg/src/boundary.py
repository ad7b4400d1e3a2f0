"""
边界条件 - 正则性行列式、规范型、去除 Q 分块对角部分的规范变换、伴随问题
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import expm

from .bvp_core import (BoundaryPair, DiracBVP, PotentialMatrix, TabulatedFunction, WeightProfile, ZeroFunction,
                       signature_and_projectors)
from .config_loader import get_setting
from .errors import DimensionMismatch, IntegrationFailure, NonFiniteValue, NotCanonical, NotRegular, StepLimitExceeded
from .fundamental import _integrate_linear

logger = logging.getLogger(__name__)


@dataclass
class RegularityReport:
    J_plus: complex
    J_minus: complex
    regular: bool
    status: str
    threshold: float

    @property
    def marginal(self) -> bool:
        return self.status == "marginal"

    def to_dict(self) -> dict:
        return {"J_plus": [self.J_plus.real, self.J_plus.imag], "J_minus": [self.J_minus.real, self.J_minus.imag],
                "regular": self.regular, "status": self.status, "threshold": self.threshold}


def _scale(C: np.ndarray, D: np.ndarray) -> float:
    return max(float(np.max(np.abs(np.hstack([C, D])))), 1e-300)


def regularity(C, D, profile: WeightProfile) -> RegularityReport:
    """
    J_± = det(CP_∓ + DP_±)

    |J| < tol·scaleⁿ 视为零；低于 tol·warn_factor·scaleⁿ 的非零值给出 marginal 状态。
    """
    pair = BoundaryPair(C, D)
    if pair.n != profile.n:
        raise DimensionMismatch("边界矩阵维数与权剖面不一致", boundary=pair.n, weights=profile.n)
    sig = signature_and_projectors(profile)
    J_plus = complex(np.linalg.det(pair.C @ sig.P_minus + pair.D @ sig.P_plus))
    J_minus = complex(np.linalg.det(pair.C @ sig.P_plus + pair.D @ sig.P_minus))
    threshold = float(get_setting("regularity_tol")) * _scale(pair.C, pair.D) ** profile.n
    smallest = min(abs(J_plus), abs(J_minus))
    if smallest < threshold:
        status, regular = "not-regular", False
    elif smallest < threshold * float(get_setting("regularity_warn_factor")):
        status, regular = "marginal", True
        logger.warning("边界条件接近非正则: |J_+|=%.3e, |J_-|=%.3e", abs(J_plus), abs(J_minus))
    else:
        status, regular = "regular", True
    return RegularityReport(J_plus=J_plus, J_minus=J_minus, regular=regular, status=status, threshold=threshold)


def canonicalize(C, D, profile: WeightProfile) -> BoundaryPair:
    """
    左乘 T_{P+}(C,D)⁻¹ = (CP₋ + DP₊)⁻¹，得到
    C′ = [[I, C₁₂], [0, C₂₂]]，D′ = [[D₁₁, 0], [D₂₁, I]]（关于 ℂ^{n₋} ⊕ ℂ^{n₊}）。
    n₋ = 0 时结果为 D′ = I, C′ = D⁻¹C。
    """
    report = regularity(C, D, profile)
    if not report.regular:
        raise NotRegular("边界条件不正则，无法化为规范型", J_plus=report.J_plus, J_minus=report.J_minus)
    pair = BoundaryPair(C, D)
    sig = signature_and_projectors(profile)
    T = pair.C @ sig.P_minus + pair.D @ sig.P_plus
    C_new = np.linalg.solve(T, pair.C)
    D_new = np.linalg.solve(T, pair.D)
    # 规范块精确置位
    m = profile.n_minus
    C_new[:, :m] = np.eye(profile.n)[:, :m]
    D_new[:, m:] = np.eye(profile.n)[:, m:]
    return BoundaryPair(C_new, D_new)


def canonicalize_bvp(bvp: DiracBVP) -> DiracBVP:
    pair = canonicalize(bvp.C, bvp.D, bvp.profile)
    return bvp.with_boundary(pair.C, pair.D)


def is_canonical(C, D, profile: WeightProfile, tol: float = 1e-12) -> bool:
    m = profile.n_minus
    eye = np.eye(profile.n)
    C, D = np.asarray(C), np.asarray(D)
    return bool(np.all(np.abs(C[:, :m] - eye[:, :m]) <= tol) and np.all(np.abs(D[:, m:] - eye[:, m:]) <= tol))


# ---------------------------------------------------------------------------
# 规范变换
# ---------------------------------------------------------------------------

@dataclass
class GaugeResult:
    """W′ + Q_diag·W = 0, W(0) = I 的解及变换后的数据"""

    grid: np.ndarray
    W: np.ndarray
    Q_tilde: PotentialMatrix
    D_tilde: np.ndarray
    bvp: DiracBVP

    @property
    def W_end(self) -> np.ndarray:
        return self.W[-1]

    @property
    def identity(self) -> bool:
        return bool(np.all(self.W == np.eye(self.W.shape[-1])))

    @property
    def transformed(self) -> DiracBVP:
        """Q̃, C, D̃ 给出的问题，特征行列式与原问题相同"""
        return DiracBVP(profile=self.bvp.profile, Q=self.Q_tilde, boundary=BoundaryPair(self.bvp.C, self.D_tilde))


def gauge_transform(bvp: DiracBVP, nodes: Optional[int] = None) -> GaugeResult:
    """
    去除 Q 的分块对角部分

    Q̃ = W⁻¹(Q − Q_diag)W 在网格上制表（线性插值），D̃ = D·W(ℓ)。
    Q_diag 为常数时 W = exp(−x·Q_diag) 精确计算。
    """
    n, ell = bvp.n, bvp.ell
    Q_diag = bvp.Q.block_diagonal_part(bvp.profile)
    Q_off = bvp.Q.off_block_part(bvp.profile)
    if all(e.is_zero() for row in Q_diag.entries for e in row):
        grid = np.array([0.0, ell])
        W = np.broadcast_to(np.eye(n, dtype=complex), (2, n, n)).copy()
        return GaugeResult(grid=grid, W=W, Q_tilde=bvp.Q, D_tilde=bvp.D.copy(), bvp=bvp)

    nodes = int(nodes or get_setting("gauge_grid"))
    grid = np.unique(np.concatenate([np.linspace(0.0, ell, nodes), bvp.breakpoints]))
    if Q_diag.is_constant():
        generator = -Q_diag(np.asarray(0.0))
        W = expm(grid[:, None, None] * generator[None, :, :])
    else:
        forced = np.array([0.0, *bvp.breakpoints, ell])
        try:
            W = _integrate_linear(lambda x: -Q_diag(np.asarray(x)), np.eye(n, dtype=complex), grid, forced,
                                  float(get_setting("ode_tol")))
        except (StepLimitExceeded, NonFiniteValue) as e:
            raise IntegrationFailure(f"规范矩阵 W 积分失败: {e}", x=getattr(e, "x", None)) from e

    W_inv = np.linalg.inv(W)
    Q_tilde_values = W_inv @ Q_off(grid) @ W
    entries = []
    for j in range(n):
        row = []
        for k in range(n):
            if bvp.profile.same_weight(j, k) or Q_off.is_zero_entry(j, k) and _block_zero(Q_off, bvp.profile, j, k):
                row.append(ZeroFunction())
            else:
                row.append(TabulatedFunction(grid, Q_tilde_values[:, j, k]))
        entries.append(tuple(row))
    Q_tilde = PotentialMatrix(tuple(entries))
    D_tilde = bvp.D @ W[-1]
    logger.debug("规范变换: |W(ℓ)| = %.3e", np.linalg.norm(W[-1]))
    return GaugeResult(grid=grid, W=W, Q_tilde=Q_tilde, D_tilde=D_tilde, bvp=bvp)


def _block_zero(Q: PotentialMatrix, profile: WeightProfile, j: int, k: int) -> bool:
    """块 (block(j), block(k)) 内 Q 全为零时 Q̃_jk 也为零"""
    bj = profile.blocks[profile.block_of(j)]
    bk = profile.blocks[profile.block_of(k)]
    return all(Q.is_zero_entry(p, q) for p in bj for q in bk)


# ---------------------------------------------------------------------------
# 伴随问题
# ---------------------------------------------------------------------------

@dataclass
class AdjointProblem:
    Q_star: PotentialMatrix
    C_star: Optional[np.ndarray]
    D_star: Optional[np.ndarray]
    profile: WeightProfile

    @property
    def boundary_available(self) -> bool:
        return self.C_star is not None

    @property
    def bvp(self) -> DiracBVP:
        if not self.boundary_available:
            raise NotCanonical("非正则边界条件的伴随边界部分不可用")
        return DiracBVP(profile=self.profile, Q=self.Q_star, boundary=BoundaryPair(self.C_star, self.D_star))


def adjoint_potential(Q: PotentialMatrix, profile: WeightProfile) -> PotentialMatrix:
    """Q* = −S·Q†·S"""
    s = profile.signs
    dagger = Q.conjugate_transpose()
    return PotentialMatrix(tuple(tuple(dagger.entries[j][k].scale(-s[j] * s[k]) for k in range(Q.n))
                                 for j in range(Q.n)))


def adjoint_problem(bvp: DiracBVP) -> AdjointProblem:
    """
    规范型边界条件的伴随问题

    C* = [[D₁₁†, 0], [C₁₂†, I]]，D* = [[I, D₂₁†], [0, C₂₂†]]，Q* = −SQ†S
    """
    profile = bvp.profile
    if not is_canonical(bvp.C, bvp.D, profile):
        raise NotCanonical("边界条件不是规范型，请先调用 canonicalize")
    m, n = profile.n_minus, profile.n
    C, D = bvp.C, bvp.D
    C12, C22 = C[:m, m:], C[m:, m:]
    D11, D21 = D[:m, :m], D[m:, :m]
    C_star = np.zeros((n, n), dtype=complex)
    D_star = np.zeros((n, n), dtype=complex)
    C_star[:m, :m] = D11.conj().T
    C_star[m:, :m] = C12.conj().T
    C_star[m:, m:] = np.eye(n - m)
    D_star[:m, :m] = np.eye(m)
    D_star[:m, m:] = D21.conj().T
    D_star[m:, m:] = C22.conj().T
    return AdjointProblem(Q_star=adjoint_potential(bvp.Q, profile), C_star=C_star, D_star=D_star, profile=profile)


def adjoint_of(bvp: DiracBVP) -> AdjointProblem:
    """先规范化再取伴随；不正则时只给出 Q*"""
    report = regularity(bvp.C, bvp.D, bvp.profile)
    if not report.regular:
        logger.warning("边界条件不正则，伴随问题只给出 Q*")
        return AdjointProblem(Q_star=adjoint_potential(bvp.Q, bvp.profile), C_star=None, D_star=None,
                              profile=bvp.profile)
    return adjoint_problem(canonicalize_bvp(bvp))
