"""
整数阶 0、1 的第一、二类 Bessel 函数

x ≤ 8 用幂级数；x > 8 用 Miller 向后递推求 J_n，再用 Neumann 级数得到 Y₀、Y₁。
"""

import math
from typing import Union

import numpy as np

from helmholtz_chdg.errors import DomainError

SERIES_LIMIT = 8.0
SERIES_TERMS = 60
EULER_GAMMA = 0.57721566490153286061
_RESCALE = 1e250

ArrayLike = Union[float, np.ndarray]


def _series(x: np.ndarray):
    """幂级数，返回 (J0, J1, Y0, Y1)；Y 只在 x > 0 处有意义"""
    t = 0.25 * x * x
    j0 = np.zeros_like(x)
    j1 = np.zeros_like(x)
    y0_tail = np.zeros_like(x)
    y1_tail = np.zeros_like(x)
    term0 = np.ones_like(x)     # (−t)^k/(k!)²
    term1 = np.ones_like(x)     # (−t)^k/(k!(k+1)!)
    harmonic = 0.0
    for k in range(SERIES_TERMS):
        if k:
            term0 = term0 * (-t) / (k * k)
            term1 = term1 * (-t) / (k * (k + 1))
            harmonic += 1.0 / k
        j0 = j0 + term0
        j1 = j1 + term1
        y0_tail = y0_tail - harmonic * term0
        y1_tail = y1_tail + (2.0 * harmonic + 1.0 / (k + 1) - 2.0 * EULER_GAMMA) * term1
    j1 = 0.5 * x * j1
    with np.errstate(divide="ignore", invalid="ignore"):
        log_term = np.log(0.5 * x)
        y0 = 2.0 / math.pi * ((log_term + EULER_GAMMA) * j0 + y0_tail)
        y1 = -2.0 / (math.pi * x) + 2.0 / math.pi * log_term * j1 - 0.5 * x / math.pi * y1_tail
    return j0, j1, y0, y1


def _miller(x: np.ndarray):
    """Miller 向后递推，返回 (J0, J1, Y0, Y1)"""
    top = float(np.max(x))
    order = int(top + 40.0 + math.sqrt(40.0 * top))
    order += order % 2
    values = np.zeros((order + 2, x.size))
    values[order] = 1e-30
    for n in range(order, 0, -1):
        values[n - 1] = (2.0 * n / x) * values[n] - values[n + 1]
        large = np.abs(values[n - 1]) > _RESCALE
        if np.any(large):
            values[:, large] /= _RESCALE
    norm = values[0] + 2.0 * values[2:order + 1:2].sum(axis=0)
    j = values[:order + 1] / norm

    k = np.arange(1, order // 2 + 1)[:, None]
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    even = j[2:order + 1:2]
    log_term = np.log(0.5 * x) + EULER_GAMMA
    y0 = 2.0 / math.pi * (log_term * j[0] - 2.0 * np.sum(sign * even / k, axis=0))

    odd_low = j[1:order:2]                               # J_{2k−1}
    odd_high = np.vstack([j[3:order + 1:2], np.zeros((1, x.size))])  # J_{2k+1}
    y1 = 2.0 / math.pi * (-j[0] / x + log_term * j[1]
                          + np.sum(sign * (odd_low - odd_high) / k, axis=0))
    return j[0], j[1], y0, y1


def _evaluate(x: np.ndarray):
    ax = np.abs(x)
    out = [np.empty_like(ax) for _ in range(4)]
    small = ax <= SERIES_LIMIT
    if np.any(small):
        for target, values in zip(out, _series(ax[small])):
            target[small] = values
    if np.any(~small):
        for target, values in zip(out, _miller(ax[~small])):
            target[~small] = values
    return out


def bessel(kind: str, order: int, x: ArrayLike) -> ArrayLike:
    """
    Bessel 函数 J₀、J₁、Y₀、Y₁

    Args:
        kind: "J" 或 "Y"
        order: 0 或 1
        x: 标量或数组

    Returns:
        与 x 同形状的实数值

    Raises:
        DomainError: Y 在 x ≤ 0 处求值
    """
    kind = kind.upper()
    if kind not in ("J", "Y") or order not in (0, 1):
        raise ValueError(f"不支持的 Bessel 函数: {kind}{order}")
    scalar = np.ndim(x) == 0
    values = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if kind == "Y" and np.any(values <= 0):
        raise DomainError(f"Y{order}(x) 要求 x > 0: 最小值 {values.min()}")
    j0, j1, y0, y1 = _evaluate(values)
    if kind == "J":
        result = j0 if order == 0 else np.sign(values) * j1
    else:
        result = y0 if order == 0 else y1
    result = result.reshape(np.shape(x))
    return float(result) if scalar else result


def j0(x: ArrayLike) -> ArrayLike:
    return bessel("J", 0, x)


def j1(x: ArrayLike) -> ArrayLike:
    return bessel("J", 1, x)


def y0(x: ArrayLike) -> ArrayLike:
    return bessel("Y", 0, x)


def y1(x: ArrayLike) -> ArrayLike:
    return bessel("Y", 1, x)
