"""
测试权剖面、标量函数、势矩阵与边值问题的构造
"""

import sys
import os

# 添加父目录到Python路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from src.bvp_core import (BoundaryPair, CommensurateDeclaration, ConstantFunction, PiecewisePolynomial,
                          PotentialMatrix, TabulatedFunction, ZeroFunction, as_function, build_dirac_bvp,
                          build_weight_profile, evaluate_rho, tabulate, validate_zero_block_diagonal)
from src.errors import (BoundViolated, DimensionMismatch, IndexOutOfRange, NonSeparated, RankDeficientPair,
                        SignChange, ValidationError, XOutOfDomain, ZeroWeight)
from src.spectra import delta


def test_piecewise_polynomial_calculus():
    """分段多项式的取值、导数与原函数"""
    f = PiecewisePolynomial([0.0, 0.5, 1.0], [[1.0, 2.0], [2.0, 0.0, 3.0]])
    assert f(np.asarray(0.25)) == pytest.approx(1.5)
    assert f(np.asarray(0.75)) == pytest.approx(2.0 + 3.0 * 0.0625)
    assert f.derivative(np.asarray(0.25)) == pytest.approx(2.0)
    # ∫₀^0.5 (1 + 2x) = 0.75，∫_{0.5}^{1} (2 + 3s²) ds = 1 + 0.125
    assert f.antiderivative(np.asarray(1.0)) == pytest.approx(0.75 + 1.125)
    assert f.breakpoints == (0.5,)
    assert f.is_real


def test_tabulated_function_is_linear_between_nodes():
    f = TabulatedFunction([0.0, 1.0, 2.0], [0.0, 2.0, 2.0])
    assert f(np.asarray(0.5)) == pytest.approx(1.0)
    assert f.antiderivative(np.asarray(2.0)) == pytest.approx(3.0)
    assert f.derivative(np.asarray(0.5)) == pytest.approx(2.0)


def test_tabulate_and_scale():
    f = tabulate(lambda x: 1.0 + x ** 2, 1.0, nodes=1001)
    assert f(np.asarray(0.5)) == pytest.approx(1.25, abs=1e-6)
    assert f.antiderivative(np.asarray(1.0)) == pytest.approx(4.0 / 3.0, abs=1e-6)
    assert isinstance(f.scale(0), ZeroFunction)
    assert f.scale(-2.0)(np.asarray(0.0)) == pytest.approx(-2.0)


def test_as_function_structural_identity():
    assert isinstance(as_function(0), ZeroFunction)
    assert as_function(2.0) == ConstantFunction(2.0)
    assert as_function(2.0) != ConstantFunction(3.0)
    assert not ConstantFunction(1j).is_real


def test_profile_orders_weights_and_counts_signs():
    """按 β 的取值排序，b_k 为 ∫β_k"""
    profile = build_weight_profile([2.0, -1.0, 1.0], 1.0)
    assert profile.order == (1, 2, 0)
    np.testing.assert_allclose(profile.b, [-1.0, 1.0, 2.0])
    assert profile.n_minus == 1
    assert profile.simple_spectrum
    assert profile.theta == pytest.approx(1.0)


def test_profile_equal_weights_form_blocks():
    profile = build_weight_profile([-1.0, 1.0, 1.0], 1.0)
    assert profile.blocks == ((0,), (1, 2))
    assert not profile.simple_spectrum
    assert profile.same_weight(1, 2)
    assert not profile.same_weight(0, 1)


def test_profile_rejects_sign_change():
    with pytest.raises(SignChange):
        build_weight_profile([PiecewisePolynomial([0.0, 1.0], [[-1.0, 2.0]]), 1.0], 1.0)


def test_profile_rejects_crossing_weights():
    crossing = PiecewisePolynomial([0.0, 1.0], [[1.0, 1.0]])
    with pytest.raises(NonSeparated):
        build_weight_profile([crossing, 1.5], 1.0)


def test_profile_rejects_zero_weight_and_bound():
    with pytest.raises(ZeroWeight):
        build_weight_profile([0, 1.0], 1.0)
    with pytest.raises(BoundViolated) as excinfo:
        build_weight_profile([-10.0, 1.0], 1.0, bound=5.0)
    assert not isinstance(excinfo.value, ZeroWeight)
    assert excinfo.value.exit_code == 1
    assert excinfo.value.bound == 5.0
    assert excinfo.value.to_dict()["error"] == "BoundViolated"
    with pytest.raises(BoundViolated):
        build_weight_profile([-0.1, 1.0], 1.0, bound=5.0)
    assert build_weight_profile([-4.0, 1.0], 1.0, bound=5.0).n == 2


def test_commensurate_declaration_is_checked():
    profile = build_weight_profile([-1.0, 2.0], 1.0,
                                   commensurate=CommensurateDeclaration(base=1.0, multiples=(-1, 2)))
    assert profile.commensurate.multiples == (-1, 2)
    with pytest.raises(ValidationError):
        build_weight_profile([-1.0, 2.0], 1.0, commensurate=CommensurateDeclaration(base=1.0, multiples=(-1, 3)))


def test_evaluate_rho_and_domain_errors():
    profile = build_weight_profile([-1.0, PiecewisePolynomial([0.0, 2.0], [[1.0, 1.0]])], 2.0)
    assert evaluate_rho(profile, 1, 1.0) == pytest.approx(1.5)
    assert evaluate_rho(profile, 1, 2.0) == profile.b[1]
    assert profile.rho_inverse(1, 1.5) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(IndexOutOfRange):
        evaluate_rho(profile, 2, 0.5)
    with pytest.raises(XOutOfDomain):
        evaluate_rho(profile, 0, 3.0)


def test_boundary_pair_rank():
    with pytest.raises(RankDeficientPair):
        BoundaryPair(np.array([[1, 0], [1, 0]]), np.array([[0, 0], [0, 0]]))
    with pytest.raises(DimensionMismatch):
        BoundaryPair(np.eye(2), np.eye(3))


def test_zero_block_diagonal_validation():
    profile = build_weight_profile([-1.0, 1.0, 1.0], 1.0)
    Q = PotentialMatrix.constant([[0, 1, 0], [1, 0, 0.5], [0, 0, 0]])
    report = validate_zero_block_diagonal(Q, profile)
    assert not report
    assert report.violations == [(1, 2)]
    assert validate_zero_block_diagonal(PotentialMatrix.constant([[0, 1, 1], [1, 0, 0], [1, 0, 0]]), profile)


def test_reordering_preserves_delta():
    """输入顺序不同的同一问题，Δ 相同"""
    C = np.array([[1.0, 0.3], [0.0, 0.0]])
    D = np.array([[0.0, 0.0], [0.2, 1.0]])
    Q = [[0.0, 0.4], [-0.3, 0.0]]
    first = build_dirac_bvp([-1.0, 2.0], Q, C, D, 1.0)
    swap = [1, 0]
    second = build_dirac_bvp([2.0, -1.0], [[Q[i][j] for j in swap] for i in swap], C[np.ix_(swap, swap)],
                             D[np.ix_(swap, swap)], 1.0)
    np.testing.assert_allclose(first.C, second.C)
    lam = 1.3 + 0.2j
    assert delta(first, lam, steps=64) == pytest.approx(delta(second, lam, steps=64), rel=1e-8)


def test_cache_key_tracks_data():
    a = build_dirac_bvp([-1.0, 1.0], None, np.array([[1, 0], [0, 0]]), np.array([[0, 0], [0, 1]]), 1.0)
    b = a.with_boundary(np.array([[1, 0], [0, 0]]), np.array([[0, 0], [0, 2]]))
    assert a.cache_key() != b.cache_key()
    assert a.cache_key() == a.with_potential(PotentialMatrix.zeros(2)).cache_key()
