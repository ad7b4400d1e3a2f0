"""
Timoshenko 梁 - 化为 4×4 Dirac 型问题、Δ₀^Tim 指数多项式、渐近分支与分离性判别

系数 ρ, I_ρ, K, EI 为正的有界函数，p₁, p₂ 为阻尼，α₁, α₂, γ₁, γ₂ 为端点 x = ℓ 的边界参数。
下标约定：模型内部按 (−β₁, β₁, −β₂, β₂) 的输入顺序书写 C、D、Q，构建 DiracBVP 时再规范排序。
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .boundary import regularity
from .bvp_core import (CommensurateDeclaration, ConstantFunction, DiracBVP, PotentialMatrix, ScalarFunction,
                       ZeroFunction, as_function, build_dirac_bvp, tabulate)
from .config_loader import get_setting
from .errors import (RegimeUndetermined, RegularityViolated, SpeedSeparationUnknown, SpeedsNotEqual,
                     ValidationError)
from .fundamental import _integrate_linear
from .spectra import (NOT_STRICT, STRICT, UNDECIDABLE, ExponentialPolynomial, SpectralPairing, SpectrumReport,
                      StrictRegularityVerdict, classify_by_roots, classify_progressions, default_strip,
                      pair_spectra, polynomial_roots, spectrum_from_polynomial, zeros_in_window)

logger = logging.getLogger(__name__)

SEPARATED = "separated"
EQUAL = "equal"


@dataclass(frozen=True, eq=False)
class TimoshenkoModel:
    rho: ScalarFunction
    I_rho: ScalarFunction
    K: ScalarFunction
    EI: ScalarFunction
    ell: float
    alpha1: complex
    alpha2: complex
    gamma1: complex = 0.0
    gamma2: complex = 0.0
    p1: ScalarFunction = field(default_factory=ZeroFunction)
    p2: ScalarFunction = field(default_factory=ZeroFunction)
    bound: Optional[float] = None
    speeds: Optional[str] = None
    rational: Optional[Tuple[int, int]] = None

    def __post_init__(self):
        for name in ("rho", "I_rho", "K", "EI", "p1", "p2"):
            object.__setattr__(self, name, as_function(getattr(self, name)))
        for name in ("alpha1", "alpha2", "gamma1", "gamma2"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if self.ell <= 0:
            raise ValidationError(f"梁长必须为正: {self.ell}", ell=self.ell)
        if self.speeds not in (None, SEPARATED, EQUAL):
            raise ValidationError(f"未知的波速声明: {self.speeds}", speeds=self.speeds)
        if self.rational is not None:
            n1, n2 = (int(v) for v in self.rational)
            if n1 <= 0 or n2 <= 0:
                raise ValidationError("有理比声明 (n₁, n₂) 必须为正整数", rational=self.rational)
            object.__setattr__(self, "rational", (n1, n2))
        x = self.sample_grid()
        for name in ("rho", "I_rho", "K", "EI"):
            fn = getattr(self, name)
            if not fn.is_real:
                raise ValidationError(f"系数 {name} 必须为实值", field=name)
            values = np.real(fn(x))
            if np.any(values <= 0):
                raise ValidationError(f"系数 {name} 必须为正", field=name, x=float(x[np.argmin(values)]))
            if self.bound is not None and (values.min() < 1.0 / self.bound or values.max() > self.bound):
                raise ValidationError(f"系数 {name} 超出声明的界 M={self.bound}", field=name, bound=self.bound)

    def sample_grid(self) -> np.ndarray:
        x = np.linspace(0.0, self.ell, int(get_setting("theta_grid")))
        points = [x]
        for fn in (self.rho, self.I_rho, self.K, self.EI, self.p1, self.p2):
            points.append(np.asarray(fn.breakpoints, dtype=float))
        return np.unique(np.concatenate(points))

    @property
    def constant_coefficients(self) -> bool:
        return all(isinstance(f, (ConstantFunction, ZeroFunction))
                   for f in (self.rho, self.I_rho, self.K, self.EI, self.p1, self.p2))

    def h1(self, x):
        return np.sqrt(np.real(self.EI(x)) * np.real(self.I_rho(x)))

    def h2(self, x):
        return np.sqrt(np.real(self.K(x)) * np.real(self.rho(x)))

    def dh1(self, x):
        return (np.real(self.EI.derivative(x)) * np.real(self.I_rho(x))
                + np.real(self.EI(x)) * np.real(self.I_rho.derivative(x))) / (2.0 * self.h1(x))

    def dh2(self, x):
        return (np.real(self.K.derivative(x)) * np.real(self.rho(x))
                + np.real(self.K(x)) * np.real(self.rho.derivative(x))) / (2.0 * self.h2(x))

    def speed_gap(self, x) -> np.ndarray:
        """ν(x) = K/ρ − EI/I_ρ"""
        return np.real(self.K(x)) / np.real(self.rho(x)) - np.real(self.EI(x)) / np.real(self.I_rho(x))

    def endpoint(self, k: int) -> Tuple[float, float]:
        """(h_k(0), h_k(ℓ))"""
        h = self.h1 if k == 1 else self.h2
        return float(h(np.asarray(0.0))), float(h(np.asarray(self.ell)))

    @property
    def alpha_pm(self) -> Tuple[Tuple[complex, complex], Tuple[complex, complex]]:
        """((α₁⁺, α₁⁻), (α₂⁺, α₂⁻))，α_k^± = α_k ± h_k(ℓ)"""
        _, h1l = self.endpoint(1)
        _, h2l = self.endpoint(2)
        return (self.alpha1 + h1l, self.alpha1 - h1l), (self.alpha2 + h2l, self.alpha2 - h2l)

    @property
    def v_pm(self) -> Tuple[Tuple[float, float], Tuple[float, float]]:
        """v_k^± = (h_k(ℓ)/h_k(0))^{±1/2}"""
        out = []
        for k in (1, 2):
            h0, hl = self.endpoint(k)
            ratio = math.sqrt(hl / h0)
            out.append((ratio, 1.0 / ratio))
        return tuple(out)


# ---------------------------------------------------------------------------
# 化为 Dirac 型问题
# ---------------------------------------------------------------------------

def _function_of(model: TimoshenkoModel, fn, constant: bool) -> ScalarFunction:
    """常系数时返回常数函数，否则在求积网格上制表"""
    if constant:
        return as_function(complex(np.asarray(fn(np.asarray(0.0))).item()))
    return tabulate(fn, model.ell, int(get_setting("quadrature_grid")) + 1)


def verify_speeds(model: TimoshenkoModel) -> str:
    """
    核对波速声明

    Raises:
        SpeedSeparationUnknown: 未声明，或声明分离而 ν 变号/触零
        SpeedsNotEqual: 声明相等而 ν ≢ 0
    """
    x = model.sample_grid()
    nu = model.speed_gap(x)
    scale = float(np.max(np.real(model.K(x)) / np.real(model.rho(x))))
    if model.speeds is None:
        raise SpeedSeparationUnknown("未声明波速关系（separated 或 equal）")
    if model.speeds == EQUAL:
        if np.max(np.abs(nu)) > 1e-12 * scale:
            raise SpeedsNotEqual(f"K/ρ 与 EI/I_ρ 不相等 (max|ν|={np.max(np.abs(nu)):.3e})",
                                 x=float(x[np.argmax(np.abs(nu))]))
        return EQUAL
    if not (np.all(nu > 0) or np.all(nu < 0)) or np.min(np.abs(nu)) <= 1e-12 * scale:
        raise SpeedSeparationUnknown("声明了波速分离，但 K/ρ − EI/I_ρ 变号或触零",
                                     x=float(x[np.argmin(np.abs(nu))]))
    return SEPARATED


def _speed_weights(model: TimoshenkoModel) -> Tuple[ScalarFunction, ScalarFunction]:
    const = model.constant_coefficients
    beta1 = _function_of(model, lambda x: np.sqrt(np.real(model.I_rho(x)) / np.real(model.EI(x))), const)
    if model.speeds == EQUAL:
        return beta1, beta1
    beta2 = _function_of(model, lambda x: np.sqrt(np.real(model.rho(x)) / np.real(model.K(x))), const)
    return beta1, beta2


def travel_times(model: TimoshenkoModel) -> Tuple[float, float]:
    """b_k = ∫₀ℓ β_k"""
    beta1, beta2 = _speed_weights(model)
    return (float(np.real(beta1.antiderivative(np.asarray(model.ell)))),
            float(np.real(beta2.antiderivative(np.asarray(model.ell)))))


def timoshenko_potential(model: TimoshenkoModel) -> PotentialMatrix:
    """Q = Θ⁻¹·[[p₁+h₁′, p₁−h₁′, h₂, −h₂], …]，Θ = 2·diag(h₁, h₁, h₂, h₂)"""
    const = model.constant_coefficients
    f = lambda fn: _function_of(model, fn, const)
    p1 = lambda x: model.p1(x)
    p2 = lambda x: model.p2(x)
    a_plus = f(lambda x: (p1(x) + model.dh1(x)) / (2 * model.h1(x)))
    a_minus = f(lambda x: (p1(x) - model.dh1(x)) / (2 * model.h1(x)))
    c_plus = f(lambda x: (p2(x) + model.dh2(x)) / (2 * model.h2(x)))
    c_minus = f(lambda x: (p2(x) - model.dh2(x)) / (2 * model.h2(x)))
    ratio = f(lambda x: model.h2(x) / (2 * model.h1(x)))
    half = ConstantFunction(0.5)
    return PotentialMatrix((
        (a_plus, a_minus, ratio, ratio.scale(-1)),
        (a_plus, a_minus, ratio, ratio.scale(-1)),
        (half.scale(-1), half.scale(-1), c_plus, c_minus),
        (half, half, c_plus, c_minus),
    ))


def timoshenko_boundary(model: TimoshenkoModel) -> Tuple[np.ndarray, np.ndarray]:
    (a1p, a1m), (a2p, a2m) = model.alpha_pm
    g1, g2 = model.gamma1, model.gamma2
    C = np.array([[1, 1, 0, 0], [0, 0, 0, 0], [0, 0, 1, 1], [0, 0, 0, 0]], dtype=complex)
    D = np.array([[0, 0, 0, 0], [a1m, a1p, g1, g1], [0, 0, 0, 0], [g2, g2, a2m, a2p]], dtype=complex)
    return C, D


@dataclass
class TimRegularity:
    J_plus: complex
    J_minus: complex

    @property
    def regular(self) -> bool:
        return self.J_plus != 0 and self.J_minus != 0

    def to_dict(self) -> dict:
        return {"J_plus": [self.J_plus.real, self.J_plus.imag], "J_minus": [self.J_minus.real, self.J_minus.imag],
                "regular": self.regular}


def tim_regularity(model: TimoshenkoModel) -> TimRegularity:
    """(α₁ ± h₁(ℓ))(α₂ ± h₂(ℓ)) ≠ γ₁γ₂"""
    (a1p, a1m), (a2p, a2m) = model.alpha_pm
    g = model.gamma1 * model.gamma2
    return TimRegularity(J_plus=complex(a1p * a2p - g), J_minus=complex(a1m * a2m - g))


def _declaration(model: TimoshenkoModel, b1: float, b2: float) -> Optional[CommensurateDeclaration]:
    if model.speeds == EQUAL:
        return CommensurateDeclaration(base=b1, multiples=(-1, 1, -1, 1))
    if model.rational is None:
        return None
    n1, n2 = model.rational
    base = b1 / n1
    if abs(b2 - n2 * base) > 1e-9 * max(1.0, b2):
        raise ValidationError(f"声明的 b₁/b₂ = {n1}/{n2} 与计算值 {b1 / b2:.12g} 不符", b1=b1, b2=b2)
    return CommensurateDeclaration(base=base, multiples=(-n1, n1, -n2, n2))


def reduce_to_dirac(model: TimoshenkoModel, strict: bool = False) -> DiracBVP:
    """
    B = diag(−β₁, β₁, −β₂, β₂)，β₁ = √(I_ρ/EI)，β₂ = √(ρ/K)

    Args:
        model: 梁模型（须声明波速关系）
        strict: 为真时边界条件不正则直接抛出 RegularityViolated，否则只记录警告

    Returns:
        DiracBVP: 规范排序后的 4×4 问题
    """
    verify_speeds(model)
    report = tim_regularity(model)
    if not report.regular:
        message = f"Timoshenko 边界条件不正则: J_+={report.J_plus}, J_-={report.J_minus}"
        if strict:
            raise RegularityViolated(message, J_plus=report.J_plus, J_minus=report.J_minus)
        logger.warning(message)
    beta1, beta2 = _speed_weights(model)
    C, D = timoshenko_boundary(model)
    b1, b2 = travel_times(model)
    weights = [beta1.scale(-1), beta1, beta2.scale(-1), beta2]
    return build_dirac_bvp(weights, timoshenko_potential(model), C, D, model.ell, bound=None,
                           commensurate=_declaration(model, b1, b2))


def gauge_factor(model: TimoshenkoModel) -> complex:
    """𝓔₁𝓔₂，𝓔_k = exp(−∫₀ℓ p_k/(2h_k))"""
    const = model.constant_coefficients
    total = 0.0 + 0.0j
    for p, h in ((model.p1, model.h1), (model.p2, model.h2)):
        if p.is_zero():
            continue
        ratio = _function_of(model, lambda x, p=p, h=h: p(x) / (2 * h(x)), const)
        total += complex(ratio.antiderivative(np.asarray(model.ell)))
    return complex(np.exp(-total))


# ---------------------------------------------------------------------------
# Δ₀^Tim
# ---------------------------------------------------------------------------

def _distinct_terms(model: TimoshenkoModel) -> List[Tuple[float, complex]]:
    (a1p, a1m), (a2p, a2m) = model.alpha_pm
    (v1p, v1m), (v2p, v2m) = model.v_pm
    g = model.gamma1 * model.gamma2
    b1, b2 = travel_times(model)
    return [(b1 + b2, (a1p * a2p - g) * v1p * v2p),
            (-(b1 + b2), (a1m * a2m - g) * v1m * v2m),
            (b1 - b2, -(a1p * a2m - g) * v1p * v2m),
            (b2 - b1, -(a1m * a2p - g) * v1m * v2p)]


def tim_delta0(model: TimoshenkoModel, lam):
    """
    Δ₀^Tim(λ) = (α₁⁺α₂⁺−γ₁γ₂)v₁⁺v₂⁺e^{iλ(b₁+b₂)} + (α₁⁻α₂⁻−γ₁γ₂)v₁⁻v₂⁻e^{−iλ(b₁+b₂)}
               − (α₁⁺α₂⁻−γ₁γ₂)v₁⁺v₂⁻e^{iλ(b₁−b₂)} − (α₁⁻α₂⁺−γ₁γ₂)v₁⁻v₂⁺e^{iλ(b₂−b₁)}

    波速相等时转到 tim_delta0_equal。
    """
    if verify_speeds(model) == EQUAL:
        return tim_delta0_equal(model, lam)
    lam = np.asarray(lam, dtype=complex)
    total = np.zeros(lam.shape, dtype=complex)
    for s, g in _distinct_terms(model):
        total = total + g * np.exp(1j * lam * s)
    return total if total.ndim else complex(total)


def tim_delta0_expansion(model: TimoshenkoModel) -> ExponentialPolynomial:
    """Δ₀^Tim 的指数多项式形式；声明有理比时带 base = b₁/n₁，波速相等时 base = 2b"""
    if verify_speeds(model) == EQUAL:
        data = equal_speed_data(model)
        return ExponentialPolynomial.from_terms([(2 * data.b, data.d_plus), (0.0, -data.d_zero),
                                                 (-2 * data.b, data.d_minus)], base=2 * data.b)
    b1, b2 = travel_times(model)
    base = None
    if model.rational is not None:
        base = _declaration(model, b1, b2).base
    return ExponentialPolynomial.from_terms(_distinct_terms(model), base=base)


@dataclass
class EqualSpeedData:
    """
    β₁ ≡ β₂ 时的 2×2 Cauchy 问题的解与 𝒫(z) = d₊z² − d₀z + d₋

    e^{−2iλb}·𝒫(e^{2iλb}) = Δ₀^Tim(λ)
    """

    b: float
    grid: np.ndarray
    W_minus: np.ndarray
    W_plus: np.ndarray
    d_plus: complex
    d_zero: complex
    d_minus: complex

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.d_plus, -self.d_zero, self.d_minus], dtype=complex)

    @property
    def discriminant(self) -> complex:
        return complex(self.d_zero ** 2 - 4 * self.d_plus * self.d_minus)

    @property
    def roots(self) -> np.ndarray:
        return np.roots(self.coefficients)

    @property
    def root_gap(self) -> float:
        z = self.roots
        return float(abs(z[0] - z[1])) if len(z) == 2 else 0.0

    def __call__(self, lam):
        z = np.exp(2j * np.asarray(lam, dtype=complex) * self.b)
        return self.d_plus * z - self.d_zero + self.d_minus / z

    def to_dict(self) -> dict:
        pack = lambda z: [complex(z).real, complex(z).imag]
        return {"b": self.b, "d_plus": pack(self.d_plus), "d_zero": pack(self.d_zero),
                "d_minus": pack(self.d_minus), "discriminant": pack(self.discriminant),
                "roots": [pack(z) for z in self.roots], "root_gap": self.root_gap}


def equal_speed_data(model: TimoshenkoModel, nodes: Optional[int] = None) -> EqualSpeedData:
    """
    积分 W∓′ + ½·M∓(x)·W∓ = 0，W∓(0) = I，再由 D·W(ℓ) 组装 d₊, d₀, d₋

    M₋ = [[(p₁+h₁′)/h₁, h₂/h₁], [−1, (p₂+h₂′)/h₂]]，M₊ = [[(p₁−h₁′)/h₁, −h₂/h₁], [1, (p₂−h₂′)/h₂]]

    Raises:
        SpeedsNotEqual: K/ρ ≢ EI/I_ρ
    """
    if model.speeds != EQUAL:
        raise SpeedsNotEqual("模型未声明波速相等")
    verify_speeds(model)
    b, _ = travel_times(model)
    ell = model.ell
    nodes = int(nodes or 257)
    breaks = [x for f in (model.rho, model.I_rho, model.K, model.EI, model.p1, model.p2)
              for x in f.breakpoints if 0.0 < x < ell]
    forced = np.unique(np.array([0.0, ell] + breaks, dtype=float))
    grid = np.unique(np.concatenate([np.linspace(0.0, ell, nodes), forced]))

    def generator(sign: int):
        def coefficient(x):
            x = np.asarray(x, dtype=float)
            h1, h2 = model.h1(x), model.h2(x)
            M = np.array([[(model.p1(x) + sign * model.dh1(x)) / h1, sign * h2 / h1],
                          [-sign, (model.p2(x) + sign * model.dh2(x)) / h2]], dtype=complex)
            return -0.5 * M
        return coefficient

    tol = min(float(get_setting("ode_tol")), 1e-13)
    eye = np.eye(2, dtype=complex)
    W_minus = _integrate_linear(generator(+1), eye, grid, forced, tol)
    W_plus = _integrate_linear(generator(-1), eye, grid, forced, tol)

    Wm, Wp = W_minus[-1], W_plus[-1]
    W = np.zeros((4, 4), dtype=complex)
    W[np.ix_([0, 2], [0, 2])] = Wm
    W[np.ix_([1, 3], [1, 3])] = Wp
    C, D = timoshenko_boundary(model)
    DW = D @ W

    # Δ = d₊z − d₀ + d₋/z，z = e^{2iλb}，在 z = 1, i, −1 三点精确拟合
    zs = np.array([1.0, 1j, -1.0])
    rows, values = [], []
    for z in zs:
        lam = np.log(z) / (2j * b)
        phase = np.exp(1j * lam * b)
        Phi0 = np.diag([1 / phase, phase, 1 / phase, phase])
        values.append(np.linalg.det(C + DW @ Phi0))
        rows.append([z, -1.0, 1.0 / z])
    d_plus, d_zero, d_minus = np.linalg.solve(np.array(rows, dtype=complex), np.array(values, dtype=complex))
    return EqualSpeedData(b=b, grid=grid, W_minus=W_minus, W_plus=W_plus, d_plus=complex(d_plus),
                          d_zero=complex(d_zero), d_minus=complex(d_minus))


def tim_delta0_equal(model: TimoshenkoModel, lam):
    """e^{−2iλb}·𝒫(e^{2iλb})"""
    data = equal_speed_data(model)
    value = data(lam)
    return value if np.ndim(value) else complex(value)


def liouville_det(model: TimoshenkoModel, sign: int) -> complex:
    """det W_±(ℓ) = Π_k exp(−∫₀ℓ p_k/(2h_k))·(h_k(ℓ)/h_k(0))^{±1/2}"""
    value = gauge_factor(model)
    for k in (1, 2):
        h0, hl = model.endpoint(k)
        value *= (hl / h0) ** (0.5 * sign)
    return complex(value)


# ---------------------------------------------------------------------------
# 渐近分支
# ---------------------------------------------------------------------------

@dataclass
class Branch:
    """λ_m = step·m + offset"""

    step: float
    offset: complex
    label: str
    multiplicity: int = 1

    def members(self, window: Tuple[float, float]) -> np.ndarray:
        lo = math.ceil((window[0] - self.offset.real) / self.step)
        hi = math.floor((window[1] - self.offset.real) / self.step)
        return self.offset + self.step * np.arange(lo, hi + 1)

    def to_dict(self) -> dict:
        return {"label": self.label, "step": self.step, "offset": [self.offset.real, self.offset.imag],
                "multiplicity": self.multiplicity}


def _progression(scale: float, t: complex, label: str, multiplicity: int = 1) -> Branch:
    """{(2πm − i·ln t)/s}"""
    log_t = complex(np.log(complex(t)))
    return Branch(step=2 * math.pi / scale, offset=-1j * log_t / scale, label=label, multiplicity=multiplicity)


@dataclass
class BranchReport:
    regime: str
    branches: List[Branch]
    verdict: StrictRegularityVerdict
    details: Dict[str, Any] = field(default_factory=dict)

    def predicted(self, window: Tuple[float, float]) -> np.ndarray:
        """窗口内的预测点（按重数展开，按实部排序）"""
        values = [z for br in self.branches for z in br.members(window) for _ in range(br.multiplicity)]
        return np.array(sorted(values, key=lambda z: (z.real, z.imag)), dtype=complex)

    def to_dict(self) -> dict:
        return {"regime": self.regime, "branches": [br.to_dict() for br in self.branches],
                "verdict": self.verdict.to_dict(), "details": self.details}


def _close(a: complex, b: complex) -> bool:
    return abs(a - b) <= 1e-10 * max(1.0, abs(a), abs(b))


def tim_asymptotic_branches(model: TimoshenkoModel) -> BranchReport:
    """
    渐近分支与分离性判别

    - 波速相等：𝒫 的两个根 z_k 给出 πm/b − i·ln z_k/(2b)
    - (ii) γ₁γ₂ = 0，α_k ≠ ±h_k(ℓ)：πm/b_k − i·ln τ_k/(2b_k)
    - (iii) γ₁γ₂ ≠ 0，α₁² = h₁²(ℓ) + (h₁(ℓ)/h₂(ℓ))γ₁γ₂，α₂ = (h₂(ℓ)/h₁(ℓ))α₁：步长 π/(b₁+b₂) 的单一级数
    - (iv) 声明 b₁ = n₁b，b₂ = n₂b：2(n₁+n₂) 次多项式的根给出 2πm/b − i·ln z_k/b

    Raises:
        RegimeUndetermined: 以上条件均不满足
        RegularityViolated: 边界条件不正则
    """
    speeds = verify_speeds(model)
    report = tim_regularity(model)
    if not report.regular:
        raise RegularityViolated("渐近分支要求正则边界条件", J_plus=report.J_plus, J_minus=report.J_minus)

    if speeds == EQUAL:
        data = equal_speed_data(model)
        z1, z2 = data.roots
        branches = [_progression(2 * data.b, z1, "z1"), _progression(2 * data.b, z2, "z2")]
        scale = max(abs(data.d_zero) ** 2, abs(4 * data.d_plus * data.d_minus), 1e-300)
        details = data.to_dict()
        if abs(data.discriminant) <= 1e-12 * scale:
            verdict = StrictRegularityVerdict(NOT_STRICT, {"criterion": "discriminant", "clause": "repeated root",
                                                           "root_gap": data.root_gap})
        elif data.root_gap < float(get_setting("root_gap_tol")):
            verdict = StrictRegularityVerdict(UNDECIDABLE, {"criterion": "discriminant",
                                                            "clause": "root gap near tolerance",
                                                            "root_gap": data.root_gap})
        else:
            verdict = StrictRegularityVerdict(STRICT, {"criterion": "discriminant", "clause": "distinct roots",
                                                       "root_gap": data.root_gap})
        return BranchReport(regime="equal-speeds", branches=branches, verdict=verdict, details=details)

    b1, b2 = travel_times(model)
    (h10, h1l), (h20, h2l) = model.endpoint(1), model.endpoint(2)
    g = model.gamma1 * model.gamma2
    a1, a2 = model.alpha1, model.alpha2

    if g == 0 and not (_close(a1, h1l) or _close(a1, -h1l) or _close(a2, h2l) or _close(a2, -h2l)):
        tau1 = (a1 - h1l) * h10 / ((a1 + h1l) * h1l)
        tau2 = (a2 - h2l) * h20 / ((a2 + h2l) * h2l)
        multiples, base = None, None
        if model.rational is not None:
            declaration = _declaration(model, b1, b2)
            base = declaration.base
            multiples = (2 * model.rational[0], 2 * model.rational[1])
        verdict = classify_progressions((2 * b1, 2 * b2), (tau1, tau2), multiples, base, criterion="timoshenko-(ii)")
        verdict.reason["separation"] = "separated" if verdict.strict else verdict.status
        branches = [_progression(2 * b1, tau1, "beam-1"), _progression(2 * b2, tau2, "beam-2")]
        details = {"tau": [[complex(t).real, complex(t).imag] for t in (tau1, tau2)], "b": [b1, b2]}
        return BranchReport(regime="distinct-speeds-(ii)", branches=branches, verdict=verdict, details=details)

    if g != 0 and _close(a1 ** 2, h1l ** 2 + (h1l / h2l) * g) and _close(a2, (h2l / h1l) * a1):
        tau = (a1 - h1l) * h10 * h20 / ((a1 + h1l) * h1l * h2l)
        verdict = StrictRegularityVerdict(STRICT, {"criterion": "timoshenko-(iii)", "clause": "single progression",
                                                   "separation": "separated"})
        branches = [_progression(2 * (b1 + b2), tau, "coupled")]
        return BranchReport(regime="distinct-speeds-(iii)", branches=branches, verdict=verdict,
                            details={"tau": [complex(tau).real, complex(tau).imag], "b": [b1, b2]})

    if model.rational is not None:
        poly = tim_delta0_expansion(model)
        base = poly.base
        groups = polynomial_roots(poly)
        branches = [_progression(base, z, f"z{i}", multiplicity=m) for i, (z, m) in enumerate(groups)]
        verdict = classify_by_roots(poly)
        details = {"base": base, "degree": len(poly.reduced_polynomial()) - 1,
                   "roots": [[z.real, z.imag, m] for z, m in groups]}
        return BranchReport(regime="distinct-speeds-(iv)", branches=branches, verdict=verdict, details=details)

    raise RegimeUndetermined("γ₁γ₂ ≠ 0 且不满足耦合条件，又未声明 b₁/b₂ 的有理比", gamma=g)


# ---------------------------------------------------------------------------
# 谱对照
# ---------------------------------------------------------------------------

@dataclass
class TimSpectrumCheck:
    branches: BranchReport
    spectrum: SpectrumReport
    reference: SpectrumReport
    pairing: SpectralPairing

    def to_dict(self) -> dict:
        return {"branches": self.branches.to_dict(), "spectrum": self.spectrum.to_dict(),
                "reference": self.reference.to_dict(), "pairing": self.pairing.to_dict()}


def tim_reference_zeros(model: TimoshenkoModel, window: Tuple[float, float], h: float,
                        tol: Optional[float] = None) -> SpectrumReport:
    """Δ₀^Tim 在窗口内的零点"""
    return spectrum_from_polynomial(tim_delta0_expansion(model), window, h, tol=tol)


def tim_spectrum_check(model: TimoshenkoModel, window: Tuple[float, float], h: Optional[float] = None,
                       tol: Optional[float] = None, jobs: Optional[int] = None) -> TimSpectrumCheck:
    """
    约化问题 Δ_Q 的零点（含阻尼）与 Δ₀^Tim 的零点配对

    两者使用同一带宽 h，默认由 Δ₀^Tim 的展开给出。
    """
    branches = tim_asymptotic_branches(model)
    bvp = reduce_to_dirac(model, strict=True)
    if h is None:
        h = default_strip(tim_delta0_expansion(model))
    spectrum = zeros_in_window(bvp, window, h=h, tol=tol, jobs=jobs)
    reference = tim_reference_zeros(model, window, h, tol=tol)
    pairing = pair_spectra(spectrum, reference)
    spectrum.pairing = pairing
    return TimSpectrumCheck(branches=branches, spectrum=spectrum, reference=reference, pairing=pairing)
