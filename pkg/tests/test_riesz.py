"""
测试加权内积、配对恒等式、双正交规范化与 Riesz 诊断
"""

import sys
import os

# 添加父目录到Python路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from src.bvp_core import PiecewisePolynomial, build_dirac_bvp, build_weight_profile
from src.errors import DegeneratePairing, GridMismatch, NotCanonical, NotSimpleZero
from src.riesz import (EigenPair, WeightedVectorFunction, biorthogonal_normalize, eigenpairs, gram_condition,
                       pairing_identity_residual, riesz_diagnostics, uniform_grid, uniform_minimality_index,
                       unperturbed_pair, weighted_inner_product)
from src.spectra import Eigenvalue, zeros_in_window

C_REG = np.array([[1.0, 1.0], [0.0, 0.0]])
D_REG = np.array([[0.0, 0.0], [1.0, 1.0]])


@pytest.fixture
def profile():
    return build_weight_profile([-1.0, 1.0], 1.0)


def test_inner_product_uses_absolute_weights():
    profile = build_weight_profile([-1.0, 2.0], 2.0)
    grid = uniform_grid(profile, 65)
    ones = WeightedVectorFunction(grid, np.ones((len(grid), 2)), profile)
    assert weighted_inner_product(ones, ones) == pytest.approx(6.0)
    assert ones.norm() == pytest.approx(np.sqrt(6.0))


def test_grid_mismatch(profile):
    a = WeightedVectorFunction(uniform_grid(profile, 33), np.ones((33, 2)), profile)
    b = WeightedVectorFunction(uniform_grid(profile, 65), np.ones((65, 2)), profile)
    with pytest.raises(GridMismatch):
        weighted_inner_product(a, b)
    assert weighted_inner_product(a, b.resample(a.grid)) == pytest.approx(2.0)
    with pytest.raises(GridMismatch):
        WeightedVectorFunction(np.linspace(0.0, 0.5, 9), np.ones((9, 2)), profile)
    with pytest.raises(GridMismatch):
        WeightedVectorFunction(uniform_grid(profile, 9), np.ones((9, 3)), profile)


@pytest.mark.parametrize("m", [-2, -1, 0, 1, 3])
def test_pairing_identity_at_unperturbed_zeros(profile, m):
    """Δ₀ = 2i·sin λ，零点 πm 均为单零点"""
    for p in (0, 1):
        for q in (0, 1):
            identity = pairing_identity_residual(profile, C_REG, D_REG, np.pi * m, p, q)
            assert identity.residual < 1e-8 * max(1.0, abs(identity.rhs))


def test_pairing_identity_at_ten_consecutive_zeros(profile):
    grid = uniform_grid(profile, 2049)
    for m in range(1, 11):
        for p in (0, 1):
            identity = pairing_identity_residual(profile, C_REG, D_REG, np.pi * m, p, p, grid=grid)
            assert identity.residual < 1e-7


def test_pairing_identity_rejects_non_zero(profile):
    with pytest.raises(NotSimpleZero):
        pairing_identity_residual(profile, C_REG, D_REG, 1.0, 0, 0)
    with pytest.raises(NotCanonical):
        unperturbed_pair(profile, 2.0 * C_REG, D_REG, np.pi, 0, 0)


def test_biorthogonal_normalize_unperturbed(profile):
    pairs = []
    for m in range(-2, 3):
        f, f_star = unperturbed_pair(profile, C_REG, D_REG, np.pi * m, 0, 0)
        pairs.append(EigenPair(lam=np.pi * m, f=f, f_star=f_star))
    system = biorthogonal_normalize(pairs)
    np.testing.assert_allclose(np.diag(system.cross), 1.0, atol=1e-10)
    assert system.max_cross < 1e-8
    assert uniform_minimality_index(system) == pytest.approx(1.0, rel=1e-8)
    assert gram_condition(system) == pytest.approx(1.0, rel=1e-6)
    assert gram_condition(system, window=(100.0, 200.0)) == 1.0


def test_degenerate_pairing(profile):
    grid = uniform_grid(profile, 33)
    f = WeightedVectorFunction(grid, np.column_stack([np.ones(33), np.zeros(33)]), profile)
    g = WeightedVectorFunction(grid, np.column_stack([np.zeros(33), np.ones(33)]), profile)
    with pytest.raises(DegeneratePairing):
        biorthogonal_normalize([EigenPair(lam=0.0, f=f, f_star=g)])


def test_eigenpairs_and_diagnostics():
    bvp = build_dirac_bvp([-1.0, 1.0], None, C_REG, D_REG, 1.0)
    eigenvalues = [Eigenvalue(complex(np.pi * m), 1, 0.0) for m in range(-2, 3)]
    eigenvalues.append(Eigenvalue(complex(10.0), 2, 0.0))
    pairs = eigenpairs(bvp, eigenvalues, grid=uniform_grid(bvp.profile, 513))
    assert len(pairs) == 5
    assert pairs.excluded == [10.0]
    system = biorthogonal_normalize(pairs)
    assert system.max_cross < 1e-6
    diagnostics = riesz_diagnostics(system, window_sizes=(3, 5), excluded=pairs.excluded)
    assert list(diagnostics.windows["available"]) == [3, 5]
    assert diagnostics.windows["minimality_index"].max() == pytest.approx(1.0, rel=1e-5)
    assert diagnostics.windows["gram_condition"].max() == pytest.approx(1.0, rel=1e-4)
    assert diagnostics.to_dict()["gram_condition_is_proxy"]


def test_diagnostics_stay_bounded_with_potential():
    """分离型边界、Q ≠ 0：窗口 10/20/40 上的指标有界且趋于平稳"""
    q = PiecewisePolynomial([0.0, 1.0], [[0.4, -0.3]])
    bvp = build_dirac_bvp([-1.0, 1.0], [[0, q], [0.2, 0]], C_REG, np.array([[0.0, 0.0], [1.0, 2.0]]), 1.0)
    report = zeros_in_window(bvp, (-21.5 * np.pi, 21.5 * np.pi))
    pairs = eigenpairs(bvp, report)
    assert not pairs.excluded
    diagnostics = riesz_diagnostics(biorthogonal_normalize(pairs), window_sizes=(10, 20, 40))
    windows = diagnostics.windows
    assert list(windows["available"]) == [10, 20, 40]
    minimality = windows["minimality_index"].to_numpy()
    assert minimality.max() < 2.0 * minimality.min()
    gram = windows["gram_condition"].to_numpy()
    assert np.all(gram < 10.0)
    assert gram[2] < 1.5 * gram[0]
