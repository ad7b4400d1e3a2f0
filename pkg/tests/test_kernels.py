"""
测试特征线映射、Goursat 核的逐次逼近与三角表示验证
"""

import sys
import os

# 添加父目录到Python路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from src.bvp_core import PiecewisePolynomial, PotentialMatrix, build_weight_profile
from src.errors import BlockDiagonalityViolated, EqualWeights, IndexOutOfRange, KernelMissing, ValidationError
from src.kernels import characteristic_maps, solve_goursat, solve_kernels, verify_transform

LAMS = [0.0, 2.0 + 0.5j, -3.0]


@pytest.fixture
def profile():
    return build_weight_profile([-1.0, 1.0], 1.0)


def test_characteristic_maps_for_unit_speeds(profile):
    """β = (−1, 1)：γ(u) = x + t − u，a(x,t) = (x + t)/2"""
    maps = characteristic_maps(profile, 0, 1)
    assert float(maps.a(np.asarray(0.6), np.asarray(0.2))) == pytest.approx(0.4, abs=1e-9)
    assert float(maps.gamma(np.asarray(0.6), np.asarray(0.2), np.asarray(0.5))) == pytest.approx(0.3, abs=1e-9)
    with pytest.raises(IndexOutOfRange):
        characteristic_maps(profile, 0, 2)


def test_equal_weights_have_no_meeting_point():
    same = build_weight_profile([1.0, 1.0], 1.0)
    with pytest.raises(EqualWeights):
        characteristic_maps(same, 0, 1).a(np.asarray(0.5), np.asarray(0.2))


def test_zero_potential_gives_zero_kernel(profile):
    Q = PotentialMatrix.zeros(2)
    kernels = solve_kernels(profile, Q, grid=16)
    assert all(np.all(k.values == 0) for k in kernels.values())
    check = verify_transform(profile, Q, [1.0, 1.0], LAMS, kernels)
    assert check.max_residual < 1e-7


def test_kernel_diagonal_trace(profile):
    """R_jk(x, x) = Q_jk/(β_j − β_k)"""
    Q = PotentialMatrix.constant([[0, 0.3], [0.3, 0]])
    kernel = solve_goursat(profile, Q, 1, grid=24)
    assert kernel.diagonal_trace_residual() < 1e-10
    assert kernel.coupled == [0]
    assert kernel.iterations >= 2
    frame = kernel.to_frame()
    assert len(frame) == 25 * 25
    assert {"x", "t", "re_R0", "im_R1"} <= set(frame.columns)


def test_representation_converges_with_grid(profile):
    """‖Q‖∞ ≤ 0.5 的光滑非对角势，λ ∈ {0, 1, i, 2 + i}"""
    q = PiecewisePolynomial([0.0, 1.0], [[0.3, 0.2]])
    Q = PotentialMatrix.from_entries([[0, q], [0.4, 0]])
    lams = [0.0, 1.0, 1j, 2.0 + 1j]
    coarse = verify_transform(profile, Q, [1.0, 1.0], lams, solve_kernels(profile, Q, grid=200))
    fine = verify_transform(profile, Q, [1.0, 1.0], lams, solve_kernels(profile, Q, grid=400))
    assert coarse.max_residual < 1e-4
    assert fine.max_residual * 3.0 <= coarse.max_residual


def test_kernel_input_errors(profile):
    with pytest.raises(BlockDiagonalityViolated):
        solve_goursat(profile, PotentialMatrix.constant([[0.1, 0.3], [0.3, 0]]), 0, grid=8)
    with pytest.raises(ValidationError):
        solve_goursat(profile, PotentialMatrix.zeros(2), 0, grid=3)
    with pytest.raises(IndexOutOfRange):
        solve_goursat(profile, PotentialMatrix.zeros(2), 2, grid=8)
    kernels = solve_kernels(profile, PotentialMatrix.zeros(2), columns=[0], grid=8)
    with pytest.raises(KernelMissing):
        verify_transform(profile, PotentialMatrix.zeros(2), [1.0, 1.0], LAMS, kernels)
    with pytest.raises(ValidationError):
        verify_transform(profile, PotentialMatrix.zeros(2), [1.0, 0.0], LAMS, kernels)
