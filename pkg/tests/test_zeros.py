"""
测试辐角原理零点搜索
"""

import sys
import os

# 添加父目录到Python路径
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from src.zeros import Box, find_zeros, winding_number


def _sine(z):
    return np.sin(z), np.cos(z)


def _sine_squared(z):
    return np.sin(z) ** 2, np.sin(2 * z)


def test_sine_zeros_in_window():
    search = find_zeros(_sine, 0.5, 10.5, -1.0, 1.0)
    assert search.winding_total == 3
    values = np.array([z.value for z in search.zeros])
    np.testing.assert_allclose(values, np.pi * np.arange(1, 4), atol=1e-9)
    assert all(z.multiplicity == 1 for z in search.zeros)
    assert search.jittered == 0


def test_double_zero_has_multiplicity_two():
    search = find_zeros(_sine_squared, 2.5, 4.5, -1.0, 1.0)
    assert search.winding_total == 2
    assert len(search.zeros) == 1
    assert search.zeros[0].multiplicity == 2
    assert search.zeros[0].value == pytest.approx(np.pi, abs=1e-7)


def test_parallel_search_matches_serial():
    serial = find_zeros(_sine, 0.5, 10.5, -1.0, 1.0, jobs=1)
    parallel = find_zeros(_sine, 0.5, 10.5, -1.0, 1.0, jobs=3)
    np.testing.assert_allclose([z.value for z in parallel.zeros], [z.value for z in serial.zeros])


def test_winding_number_of_box():
    assert winding_number(_sine, Box(2.5, 6.5, -1.0, 1.0)) == 2
    assert winding_number(_sine, Box(3.5, 6.0, -1.0, 1.0)) == 0


def test_empty_window_rejected():
    with pytest.raises(ValueError):
        find_zeros(_sine, 1.0, 1.0, -1.0, 1.0)


def test_interior_edge_moved_off_double_zero():
    """x = 3.14 的内部边离二重零点 π 只有 0.0016"""
    search = find_zeros(_sine_squared, 0.14, 9.14, -1.0, 1.0, box_width=3.0)
    assert search.jittered >= 1
    assert search.winding_total == 4
    assert [z.multiplicity for z in search.zeros] == [2, 2]
    np.testing.assert_allclose([z.value for z in search.zeros], [np.pi, 2 * np.pi], atol=1e-7)
    assert search.window == (0.14, 9.14, -1.0, 1.0)


def test_outer_edges_keep_requested_window():
    """π 与 4π 紧贴窗口外侧：搜索向外扩展，结果裁回原窗口"""
    a, b = np.pi + 0.005, 4 * np.pi - 0.005
    search = find_zeros(_sine, a, b, -1.0, 1.0)
    assert search.window == (a, b, -1.0, 1.0)
    assert search.search_window[0] < a
    assert search.search_window[1] > b
    assert search.winding_total == 2
    np.testing.assert_allclose([z.value for z in search.zeros], [2 * np.pi, 3 * np.pi], atol=1e-9)


def test_close_estimates_merge_into_one_zero():
    search = find_zeros(lambda z: ((z - 1.0) ** 2 * (z - 1.5), (z - 1.0) * (3 * z - 4.0)), 0.0, 2.0, -1.0, 1.0)
    assert [(round(z.value.real, 6), z.multiplicity) for z in search.zeros] == [(1.0, 2), (1.5, 1)]
    assert search.winding_total == 3
