"""
谱半径诊断
"""

import logging
from typing import Union

import numpy as np
import scipy.sparse
from scipy.sparse.linalg import LinearOperator

from helmholtz_chdg.errors import SpectralSizeError
from helmholtz_chdg.models import SpectralMode, SpectralReport

logger = logging.getLogger(__name__)

DEFAULT_DENSE_LIMIT = 20000
N_LEADING = 10


def materialize(op: Union[LinearOperator, np.ndarray, scipy.sparse.spmatrix],
                dense_limit: int = DEFAULT_DENSE_LIMIT) -> np.ndarray:
    """把算子物化为稠密矩阵"""
    n = op.shape[0]
    if n > dense_limit:
        raise SpectralSizeError(f"算子维数 {n} 超过稠密计算上限 {dense_limit}")
    if isinstance(op, np.ndarray):
        return op.astype(complex)
    if scipy.sparse.issparse(op):
        return op.toarray().astype(complex)
    return np.asarray(op.matmat(np.eye(n, dtype=complex)))


def _dense(op, dense_limit: int) -> SpectralReport:
    matrix = materialize(op, dense_limit)
    eigenvalues = np.linalg.eigvals(matrix)
    order = np.argsort(-np.abs(eigenvalues), kind="stable")
    leading = eigenvalues[order[:N_LEADING]]
    radius = float(np.abs(leading[0])) if leading.size else 0.0
    logger.info(f"稠密特征值计算完成: 维数 {matrix.shape[0]}, ρ = {radius:.12g}")
    return SpectralReport(
        radius=radius, mode=SpectralMode.DENSE, converged=True, iterations=0,
        dimension=matrix.shape[0],
        leading_eigenvalues=[[float(v.real), float(v.imag)] for v in leading],
    )


def _power(op, tol: float, max_iter: int, seed: int) -> SpectralReport:
    n = op.shape[0]
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= np.linalg.norm(x)
    estimate = 0.0
    for iteration in range(1, max_iter + 1):
        y = op @ x
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return SpectralReport(radius=0.0, mode=SpectralMode.POWER, converged=True,
                                  iterations=iteration, dimension=n)
        converged = abs(norm - estimate) <= tol * norm
        estimate = norm
        x = y / norm
        if converged:
            logger.info(f"幂迭代收敛: {iteration} 次, ρ ≈ {estimate:.12g}")
            return SpectralReport(radius=estimate, mode=SpectralMode.POWER, converged=True,
                                  iterations=iteration, dimension=n)
    logger.warning(f"幂迭代未在 {max_iter} 次内收敛, 返回当前估计 {estimate:.12g}")
    return SpectralReport(radius=estimate, mode=SpectralMode.POWER, converged=False,
                          iterations=max_iter, dimension=n)


def spectral_radius(op: Union[LinearOperator, np.ndarray, scipy.sparse.spmatrix],
                    mode: SpectralMode = SpectralMode.DENSE,
                    dense_limit: int = DEFAULT_DENSE_LIMIT,
                    tol: float = 1e-10, max_iter: int = 5000, seed: int = 0) -> SpectralReport:
    """
    谱半径

    Args:
        op: 算子（通常为 ΠS）
        mode: dense 物化后求全部特征值；power 为幂迭代下界估计
        dense_limit: 稠密模式的维数上限
        tol, max_iter: 幂迭代的相对停止阈值与最大次数
        seed: 幂迭代初始向量的随机种子

    Returns:
        SpectralReport

    Raises:
        SpectralSizeError: 稠密模式下维数超过上限
    """
    mode = SpectralMode(mode)
    if mode is SpectralMode.DENSE:
        return _dense(op, dense_limit)
    if mode is SpectralMode.POWER:
        return _power(op, tol, max_iter, seed)
    raise ValueError("spectral_radius 需要 dense 或 power 模式")
