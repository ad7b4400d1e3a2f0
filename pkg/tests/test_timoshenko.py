"""
测试 Timoshenko 梁：化为 Dirac 型问题、Δ₀^Tim、波速相等情形与渐近分支
"""

import sys
import os

# 添加父目录到Python路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import math

import numpy as np
import pytest

from src.errors import (RegimeUndetermined, RegularityViolated, SpeedSeparationUnknown, SpeedsNotEqual,
                        ValidationError)
from src.spectra import STRICT, modified_delta0
from src.timoshenko import (EQUAL, SEPARATED, TimoshenkoModel, equal_speed_data, gauge_factor, liouville_det,
                            reduce_to_dirac, tim_asymptotic_branches, tim_delta0, tim_delta0_expansion,
                            tim_regularity, tim_spectrum_check, travel_times, verify_speeds)

LAMS = [0.3, 1.7 - 0.4j, -2.5 + 0.2j]


def _beam(**overrides) -> TimoshenkoModel:
    """ρ = I_ρ = EI = 1，K = 4：b₁ = 1，b₂ = 1/2，h₁ = 1，h₂ = 2"""
    params = dict(rho=1.0, I_rho=1.0, K=4.0, EI=1.0, ell=1.0, alpha1=3.0, alpha2=1.0, speeds=SEPARATED)
    params.update(overrides)
    return TimoshenkoModel(**params)


def _equal_beam(**overrides) -> TimoshenkoModel:
    params = dict(rho=1.0, I_rho=1.0, K=1.0, EI=1.0, ell=1.0, alpha1=3.0, alpha2=2.0, speeds=EQUAL)
    params.update(overrides)
    return TimoshenkoModel(**params)


def test_travel_times_and_regularity():
    model = _beam()
    assert travel_times(model) == pytest.approx((1.0, 0.5))
    report = tim_regularity(model)
    assert report.J_plus == pytest.approx(12.0)
    assert report.J_minus == pytest.approx(-2.0)
    assert report.regular


def test_delta0_closed_form():
    """Δ₀^Tim = (4e^{iλ} − 2e^{−iλ})(3e^{iλ/2} + e^{−iλ/2})"""
    model = _beam()
    for lam in LAMS:
        expected = (4 * np.exp(1j * lam) - 2 * np.exp(-1j * lam)) * (3 * np.exp(0.5j * lam) + np.exp(-0.5j * lam))
        assert tim_delta0(model, lam) == pytest.approx(expected, rel=1e-12)


def test_reduction_reproduces_delta0():
    model = _beam(rational=(2, 1))
    bvp = reduce_to_dirac(model)
    assert bvp.n == 4
    np.testing.assert_allclose(sorted(bvp.profile.b), [-1.0, -0.5, 0.5, 1.0])
    assert bvp.profile.commensurate.base == pytest.approx(0.5)
    poly = tim_delta0_expansion(model)
    assert poly.base == pytest.approx(0.5)
    assert len(poly.reduced_polynomial()) == 7
    reduced = modified_delta0(bvp)
    for lam in LAMS:
        assert reduced(lam) == pytest.approx(poly(lam), rel=1e-10)
    assert gauge_factor(model) == 1.0


def test_separated_branches_use_ln_clause():
    report = tim_asymptotic_branches(_beam(rational=(2, 1)))
    assert report.regime == "distinct-speeds-(ii)"
    assert report.verdict.status == STRICT
    assert report.verdict.reason["clause"] == "ln-clause"
    first, second = report.branches
    assert first.step == pytest.approx(math.pi)
    assert first.offset == pytest.approx(0.5j * math.log(2.0))
    assert second.step == pytest.approx(2 * math.pi)
    assert second.offset == pytest.approx(math.pi + 1j * math.log(3.0))
    np.testing.assert_allclose(report.details["tau"], [[0.5, 0.0], [-1.0 / 3.0, 0.0]], atol=1e-14)
    predicted = report.predicted((0.0, 7.0))
    assert len(predicted) == 3 + 1


def test_coupled_regime_single_progression():
    """γ₁γ₂ = 6，α₁ = 2，α₂ = 4 满足耦合条件"""
    report = tim_asymptotic_branches(_beam(alpha1=2.0, alpha2=4.0, gamma1=2.0, gamma2=3.0))
    assert report.regime == "distinct-speeds-(iii)"
    assert report.verdict.strict
    assert len(report.branches) == 1
    assert report.branches[0].step == pytest.approx(2 * math.pi / 3.0)


def test_rational_regime_uses_polynomial_roots():
    report = tim_asymptotic_branches(_beam(gamma1=1.0, gamma2=1.0, rational=(2, 1)))
    assert report.regime == "distinct-speeds-(iv)"
    assert report.details["degree"] == 6
    assert sum(branch.multiplicity for branch in report.branches) == 6
    with pytest.raises(RegimeUndetermined):
        tim_asymptotic_branches(_beam(gamma1=1.0, gamma2=1.0))


def test_speed_declarations():
    assert verify_speeds(_beam()) == SEPARATED
    with pytest.raises(SpeedSeparationUnknown):
        verify_speeds(_beam(speeds=None))
    with pytest.raises(SpeedsNotEqual):
        verify_speeds(_beam(speeds=EQUAL))
    with pytest.raises(SpeedSeparationUnknown):
        verify_speeds(_equal_beam(speeds=SEPARATED))
    with pytest.raises(SpeedsNotEqual):
        equal_speed_data(_beam())


def test_model_validation():
    with pytest.raises(ValidationError):
        _beam(K=-1.0)
    with pytest.raises(ValidationError):
        _beam(ell=0.0)
    with pytest.raises(ValidationError):
        _beam(rational=(0, 1))
    with pytest.raises(ValidationError):
        reduce_to_dirac(_beam(rational=(3, 1)))


def test_irregular_boundary():
    """α₁ = h₁(ℓ)，γ = 0 时 J₋ = 0"""
    model = _beam(alpha1=1.0)
    assert not tim_regularity(model).regular
    with pytest.raises(RegularityViolated):
        tim_asymptotic_branches(model)
    with pytest.raises(RegularityViolated):
        reduce_to_dirac(model, strict=True)
    assert reduce_to_dirac(model).n == 4


def test_equal_speed_rotations():
    """无阻尼：W₋ 为转角 +x/2 的旋转，W₊ 为转角 −x/2 的旋转"""
    data = equal_speed_data(_equal_beam())
    c, s = math.cos(0.5), math.sin(0.5)
    np.testing.assert_allclose(data.W_minus[-1], [[c, -s], [s, c]], atol=1e-10)
    np.testing.assert_allclose(data.W_plus[-1], [[c, s], [-s, c]], atol=1e-10)


def test_equal_speed_polynomial():
    """Δ₀^Tim = 12z + 2/z − 10·cos 1，z = e^{2iλ}"""
    model = _equal_beam()
    data = equal_speed_data(model)
    assert data.d_plus == pytest.approx(12.0, abs=1e-9)
    assert data.d_minus == pytest.approx(2.0, abs=1e-9)
    assert data.d_zero == pytest.approx(10.0 * math.cos(1.0), abs=1e-9)
    assert data.root_gap == pytest.approx(abs(np.sqrt(data.discriminant)) / abs(data.d_plus), rel=1e-10)
    reduced = modified_delta0(reduce_to_dirac(model))
    for lam in LAMS:
        assert tim_delta0(model, lam) == pytest.approx(reduced(lam), rel=1e-8)
    report = tim_asymptotic_branches(model)
    assert report.regime == "equal-speeds"
    assert report.verdict.status == STRICT


def test_equal_speed_liouville_identity():
    """d₊ = J₊·det W₊(ℓ)，d₋ = J₋·det W₋(ℓ)"""
    model = _equal_beam(p1=0.2, p2=0.1)
    data = equal_speed_data(model)
    report = tim_regularity(model)
    assert gauge_factor(model) == pytest.approx(math.exp(-0.15))
    assert data.d_plus == pytest.approx(report.J_plus * liouville_det(model, +1), rel=1e-8)
    assert data.d_minus == pytest.approx(report.J_minus * liouville_det(model, -1), rel=1e-8)


def test_spectrum_check_counts_match():
    """x = 0 是默认网格的内部边，Δ₀^Tim 在 (i ln 2)/2 处有零点"""
    check = tim_spectrum_check(_beam(rational=(2, 1)), (-8.0, 8.0))
    assert check.spectrum.window == (-8.0, 8.0)
    assert check.spectrum.count == check.spectrum.winding_total
    assert check.pairing.mismatch is None
    assert check.branches.verdict.strict
    expected = [math.pi * m + 0.5j * math.log(2.0) for m in range(-2, 3)]
    expected += [math.pi * s + 1j * math.log(3.0) for s in (-1, 1)]
    assert check.reference.count == len(expected)
    values = check.reference.values()
    for z in expected:
        assert np.min(np.abs(values - z)) < 1e-8
    assert set(check.to_dict()) == {"branches", "spectrum", "reference", "pairing"}


def test_damped_zeros_approach_branches():
    """p₁ = 0.1：约化问题的零点与 Δ₀^Tim 零点的偏差按二进带递减"""
    check = tim_spectrum_check(_beam(rational=(2, 1), p1=0.1), (0.0, 16 * np.pi))
    assert check.pairing.mismatch is None
    band_max = {band["band"]: band["max"] for band in check.pairing.bands}
    tail = [band_max[k] for k in range(1, 4)]
    assert all(later < earlier for earlier, later in zip(tail, tail[1:]))
