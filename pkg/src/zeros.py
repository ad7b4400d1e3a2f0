"""
辐角原理零点搜索

对可向量化求值的全纯函数 f（同时给出 f′），在矩形窗口内：
  1. 把窗口按实部切成子矩形；内部竖边经过零点附近时移到候选位置中 min|f| 最大处，
     找不到合适位置就去掉该边（合并相邻子矩形）；外边界只向外移，结果再裁回请求的窗口；
  2. 每个子矩形用逐边加倍的 Gauss–Legendre 公式计算 (1/2πi)∮ wᵖ f′/f dz；
  3. 由矩量经 Newton 恒等式得到零点初值，小圆绕数给出重数，再用带重数的 Newton 迭代加密，
     重合的加密结果合并并累加重数。
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from tqdm import tqdm

from .config_loader import get_setting
from .errors import ContourThroughZero, WindingMismatch

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]

_MAX_PER_BOX = 4
_MAX_DEPTH = 6
_MAX_POINTS_PER_EDGE = 4096
_MOMENT_RTOL = 1e-10
_SPLIT_FRACTIONS = (0.5, 0.42, 0.58, 0.34, 0.66, 0.26, 0.74)
_EDGE_FLOOR = 1e-2


@dataclass
class Zero:
    value: complex
    multiplicity: int
    residual: float

    def sort_key(self):
        return (round(self.value.real, 9), round(self.value.imag, 9))


@dataclass
class ZeroSearch:
    zeros: List[Zero]
    winding_total: int
    window: Tuple[float, float, float, float]
    boxes: int
    jittered: int = 0
    warnings: List[str] = field(default_factory=list)
    search_window: Optional[Tuple[float, float, float, float]] = None


@dataclass(frozen=True)
class Box:
    re_min: float
    re_max: float
    im_min: float
    im_max: float

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    @property
    def radius(self) -> float:
        return 0.5 * abs(complex(self.re_max - self.re_min, self.im_max - self.im_min))

    def corners(self) -> List[complex]:
        return [complex(self.re_min, self.im_min), complex(self.re_max, self.im_min),
                complex(self.re_max, self.im_max), complex(self.re_min, self.im_max)]

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return (self.re_min - slack <= z.real < self.re_max + slack
                and self.im_min - slack <= z.imag < self.im_max + slack)

    def split(self, at: Optional[float] = None) -> Tuple["Box", "Box"]:
        mid = 0.5 * (self.re_min + self.re_max) if at is None else float(at)
        return Box(self.re_min, mid, self.im_min, self.im_max), Box(mid, self.re_max, self.im_min, self.im_max)


def _gauss_edge(evaluate: Evaluator, a: complex, b: complex, center: complex, radius: float, orders: int,
                n: int) -> np.ndarray:
    nodes, weights = leggauss(n)
    z = a + (b - a) * 0.5 * (nodes + 1.0)
    f, fp = evaluate(z)
    w = (z - center) / radius
    powers = w[None, :] ** np.arange(orders + 1)[:, None]
    return 0.5 * (b - a) * ((powers * (fp / f)[None, :]) @ weights) / (2j * np.pi)


def _edge_moments(evaluate: Evaluator, a: complex, b: complex, center: complex, radius: float, orders: int,
                  density: float) -> np.ndarray:
    """单条边上 (1/2πi)∫ wᵖ f′/f dz，p = 0..orders，Gauss–Legendre 节点数逐次加倍直到稳定"""
    n = max(16, int(np.ceil(abs(b - a) * density)))
    previous = _gauss_edge(evaluate, a, b, center, radius, orders, n)
    while 2 * n <= _MAX_POINTS_PER_EDGE:
        n *= 2
        current = _gauss_edge(evaluate, a, b, center, radius, orders, n)
        if np.all(np.abs(current - previous) < _MOMENT_RTOL * (1.0 + np.abs(current))):
            return current
        previous = current
    logger.debug("边 %s → %s 的矩量在 %d 个节点处仍未稳定", a, b, n)
    return previous


def contour_moments(evaluate: Evaluator, box: Box, orders: int = 0, density: float = 6.0) -> np.ndarray:
    """矩形边界上的矩量 s_p = (1/2πi)∮ wᵖ f′/f dz，w = (z − c)/r"""
    corners = box.corners()
    total = np.zeros(orders + 1, dtype=complex)
    for a, b in zip(corners, corners[1:] + corners[:1]):
        total += _edge_moments(evaluate, a, b, box.center, box.radius, orders, density)
    return total


def winding_number(evaluate: Evaluator, box: Box, tol: Optional[float] = None) -> int:
    """矩形内零点总数（含重数）"""
    tol = float(tol or get_setting("winding_tol"))
    value = contour_moments(evaluate, box)[0]
    if abs(value - round(value.real)) >= tol:
        raise ContourThroughZero(f"绕数 {value:.4f} 与整数相差过大", box=box)
    return int(round(value.real))


def _circle_winding(evaluate: Evaluator, center: complex, radius: float, points: int = 128) -> float:
    theta = 2 * np.pi * np.arange(points) / points
    z = center + radius * np.exp(1j * theta)
    f, fp = evaluate(z)
    dz = 1j * radius * np.exp(1j * theta) * (2 * np.pi / points)
    return float(np.real(np.sum(fp / f * dz) / (2j * np.pi)))


def _newton_identities(power_sums: np.ndarray, count: int) -> np.ndarray:
    """由幂和求首一多项式系数（降幂）"""
    e = np.zeros(count + 1, dtype=complex)
    e[0] = 1.0
    for k in range(1, count + 1):
        acc = 0.0
        for i in range(1, k + 1):
            acc += (-1) ** (i - 1) * e[k - i] * power_sums[i]
        e[k] = acc / k
    return np.array([(-1) ** k * e[k] for k in range(count + 1)])


def _cluster(points: np.ndarray, radius: float) -> List[complex]:
    centers: List[List[complex]] = []
    for p in points:
        for group in centers:
            if abs(np.mean(group) - p) < radius:
                group.append(p)
                break
        else:
            centers.append([p])
    return [complex(np.mean(group)) for group in centers]


def _multiplicities(evaluate: Evaluator, groups: List[complex], count: int, box: Box,
                    winding_tol: float) -> Optional[List[int]]:
    """每组初值周围小圆的绕数；非整数或为 0 时返回 None"""
    if len(groups) == 1:
        return [count]
    result = []
    for g in groups:
        gap = min(abs(g - o) for o in groups if o is not g)
        value = _circle_winding(evaluate, g, min(0.3 * gap, 0.05 * box.radius))
        m = int(round(value))
        if m < 1 or abs(value - m) >= winding_tol:
            return None
        result.append(m)
    return result


def _refine(evaluate: Evaluator, guesses: List[complex], multiplicities: List[int], tol: float,
            max_iter: int) -> Tuple[np.ndarray, np.ndarray]:
    z = np.array(guesses, dtype=complex)
    m = np.array(multiplicities, dtype=float)
    active = np.ones(len(z), dtype=bool)
    for _ in range(max_iter):
        if not np.any(active):
            break
        f, fp = evaluate(z[active])
        step = m[active] * f / np.where(fp == 0, 1.0, fp)
        step = np.where(np.isfinite(step), step, 0.0)
        z[active] = z[active] - step
        still = np.abs(step) > tol * (1.0 + np.abs(z[active]))
        idx = np.flatnonzero(active)
        active[idx[~still]] = False
    f, _ = evaluate(z)
    return z, np.abs(f)


def _merge(zeros: List[Zero], tol: float) -> List[Zero]:
    """加密后落到同一点的零点合并，重数相加，保留残差较小者的位置"""
    merged: List[Zero] = []
    for z in sorted(zeros, key=lambda z: z.residual):
        for kept in merged:
            if abs(kept.value - z.value) < np.sqrt(tol * (1.0 + abs(kept.value))):
                kept.multiplicity += z.multiplicity
                break
        else:
            merged.append(Zero(value=z.value, multiplicity=z.multiplicity, residual=z.residual))
    return merged


def _line_values(evaluate: Evaluator, start: complex, stop: complex, points: int) -> np.ndarray:
    return np.abs(evaluate(start + (stop - start) * np.linspace(0.0, 1.0, points))[0])


def _vertical_floor(evaluate: Evaluator, x: float, lo: float, hi: float, points: int) -> float:
    return float(np.min(_line_values(evaluate, complex(x, lo), complex(x, hi), points)))


def _best_split(evaluate: Evaluator, box: Box, density: float = 6.0) -> float:
    """在若干候选比例中选 min|f| 最大的竖线作为分割位置"""
    points = max(32, int(np.ceil((box.im_max - box.im_min) * density * 2)))
    width = box.re_max - box.re_min
    xs = [box.re_min + frac * width for frac in _SPLIT_FRACTIONS]
    floors = [_vertical_floor(evaluate, x, box.im_min, box.im_max, points) for x in xs]
    return xs[int(np.argmax(floors))]


def _split_search(evaluate: Evaluator, box: Box, tol: float, max_iter: int, winding_tol: float,
                  depth: int) -> Tuple[List[Zero], int]:
    left, right = box.split(_best_split(evaluate, box))
    zl, cl = _zeros_in_box(evaluate, left, tol, max_iter, winding_tol, depth + 1)
    zr, cr = _zeros_in_box(evaluate, right, tol, max_iter, winding_tol, depth + 1)
    return zl + zr, cl + cr


def _zeros_in_box(evaluate: Evaluator, box: Box, tol: float, max_iter: int, winding_tol: float,
                  depth: int = 0) -> Tuple[List[Zero], int]:
    s0 = contour_moments(evaluate, box)[0]
    if abs(s0 - round(s0.real)) >= winding_tol:
        raise ContourThroughZero(f"子矩形绕数 {s0:.4f} 不收敛", box=box)
    count = int(round(s0.real))
    if count == 0:
        return [], 0
    if count > _MAX_PER_BOX and depth < _MAX_DEPTH:
        return _split_search(evaluate, box, tol, max_iter, winding_tol, depth)

    moments = contour_moments(evaluate, box, orders=count)
    estimates = box.center + box.radius * np.roots(_newton_identities(moments, count))
    found: List[Zero] = []
    for spread in (1e-3, 2e-2, 1e-1):
        groups = _cluster(estimates, spread * box.radius)
        multiplicities = _multiplicities(evaluate, groups, count, box, winding_tol)
        if multiplicities is None:
            continue
        refined, residuals = _refine(evaluate, groups, multiplicities, tol, max_iter)
        found = _merge([Zero(value=complex(z), multiplicity=int(m), residual=float(r))
                        for z, m, r in zip(refined, multiplicities, residuals)
                        if box.contains(complex(z), slack=1e-9)], tol)
        if sum(z.multiplicity for z in found) == count:
            return found, count

    total = sum(z.multiplicity for z in found)
    if depth < _MAX_DEPTH:
        logger.debug("子矩形 %s: 加密得到 %d 个零点，绕数 %d，继续细分", box, total, count)
        return _split_search(evaluate, box, tol, max_iter, winding_tol, depth)
    raise WindingMismatch(f"加密后的零点数 {total} 与绕数 {count} 不符", box=box, counted=count, found=total)


def _place(floor: Callable[[float], float], origin: float, candidates: np.ndarray,
           threshold: float) -> Optional[float]:
    """候选位置中 min|f| 最大者；都低于阈值时返回 None"""
    if floor(origin) >= threshold:
        return origin
    if not len(candidates):
        return None
    floors = np.array([floor(c) for c in candidates])
    best = int(np.argmax(floors))
    return float(candidates[best]) if floors[best] >= threshold else None


def find_zeros(evaluate: Evaluator, re_min: float, re_max: float, im_min: float, im_max: float,
               tol: Optional[float] = None, box_width: Optional[float] = None, jobs: Optional[int] = None,
               progress: Optional[bool] = None) -> ZeroSearch:
    """
    矩形 [re_min, re_max] × [im_min, im_max] 内的全部零点

    外边界经过零点附近时向外移动搜索，结果裁回请求的窗口（闭区间）。

    Args:
        evaluate: z 数组 → (f(z), f′(z))
        tol: Newton 终止容限，默认 root_tol
        box_width: 子矩形宽度，默认 box_width
        jobs: 并行线程数
        progress: 是否显示 tqdm 进度条

    Returns:
        ZeroSearch: 按实部（再按虚部）排序的零点，window 为请求的窗口
    """
    if not re_max > re_min or not im_max > im_min:
        raise ValueError(f"窗口为空: [{re_min}, {re_max}] × [{im_min}, {im_max}]")
    tol = float(tol or get_setting("root_tol"))
    box_width = float(box_width or get_setting("box_width"))
    jobs = int(jobs or get_setting("jobs"))
    progress = bool(get_setting("progress") if progress is None else progress)
    max_iter = int(get_setting("newton_max_iter"))
    winding_tol = float(get_setting("winding_tol"))
    retries = max(1, int(get_setting("contour_retries")))

    count = max(1, int(np.ceil((re_max - re_min) / box_width)))
    xs = np.linspace(re_min, re_max, count + 1)
    step = (re_max - re_min) / count
    offsets = step * 0.4 * np.arange(1, 4 * retries + 1) / (4 * retries)
    reach = float(offsets[-1])
    ny = max(16, int(np.ceil((im_max - im_min + 2 * reach) * 12.0)))
    nx = max(16, int(np.ceil((re_max - re_min + 2 * reach) * 12.0)))

    samples = [_line_values(evaluate, complex(x, im_min), complex(x, im_max), ny) for x in xs]
    samples += [_line_values(evaluate, complex(re_min - reach, y), complex(re_max + reach, y), nx)
                for y in (im_min, im_max)]
    threshold = _EDGE_FLOOR * float(np.median(np.concatenate(samples)))
    warnings: List[str] = []

    def horizontal(y: float) -> float:
        return float(np.min(_line_values(evaluate, complex(re_min - reach, y), complex(re_max + reach, y), nx)))

    lo = _place(horizontal, im_min, im_min - offsets, threshold)
    hi = _place(horizontal, im_max, im_max + offsets, threshold)
    if lo is None or hi is None:
        raise ContourThroughZero("带的上下边界经过零点", lower=lo is None, upper=hi is None)

    def vertical(x: float) -> float:
        return _vertical_floor(evaluate, x, lo, hi, ny)

    left = _place(vertical, re_min, re_min - offsets, threshold)
    right = _place(vertical, re_max, re_max + offsets, threshold)
    if left is None or right is None:
        raise ContourThroughZero("窗口左右边界经过零点", left=left is None, right=right is None)

    edges = [left]
    moved = int(left != re_min) + int(right != re_max) + int(lo != im_min) + int(hi != im_max)
    dropped = 0
    for i in range(1, count):
        origin = float(xs[i])
        candidates = np.concatenate([origin - offsets, origin + offsets])
        candidates = candidates[(candidates > edges[-1] + 0.1 * step) & (candidates < xs[i + 1] - 0.1 * step)]
        placed = _place(vertical, origin, candidates, threshold)
        if placed is None:
            dropped += 1
            logger.info("内部边 x=%.4f 附近无法避开零点，合并相邻子矩形", origin)
            continue
        moved += int(placed != origin)
        edges.append(placed)
    edges.append(right)
    if moved:
        logger.info("边界经过零点附近，移动了 %d 条边", moved)
        warnings.append(f"contour jittered {moved} edge(s)")
    if dropped:
        warnings.append(f"merged {dropped} sub-box(es) around zeros on their common edge")

    boxes = [Box(float(a), float(b), lo, hi) for a, b in zip(edges[:-1], edges[1:])]
    worker = lambda box: _zeros_in_box(evaluate, box, tol, max_iter, winding_tol)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(tqdm(pool.map(worker, boxes), total=len(boxes), disable=not progress, desc="零点搜索"))
    else:
        results = [worker(box) for box in tqdm(boxes, disable=not progress, desc="零点搜索")]

    inside = lambda z: re_min <= z.value.real <= re_max and im_min <= z.value.imag <= im_max
    found = [z for zs, _ in results for z in zs]
    zeros = sorted((z for z in found if inside(z)), key=lambda z: (z.value.real, z.value.imag))
    total = sum(c for _, c in results) - sum(z.multiplicity for z in found if not inside(z))
    return ZeroSearch(zeros=zeros, winding_total=total, window=(float(re_min), float(re_max), im_min, im_max),
                      boxes=len(boxes), jittered=moved, warnings=warnings,
                      search_window=(float(left), float(right), lo, hi))
