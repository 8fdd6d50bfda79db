"""
迭代求解器

所有求解器从零初值出发，以相对残差 ‖b − Ax‖/‖b‖ 作为停止判据，
每次迭代调用 callback(iteration, residual, x)，其返回值（可为 None）
记入误差历史。
"""

import logging
import time
from typing import Callable, List, Optional, Union

import numpy as np
import scipy.linalg
import scipy.sparse
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from helmholtz_chdg.fields import PhysicalFields, ReferenceField, relative_energy_error
from helmholtz_chdg.mesh import Mesh
from helmholtz_chdg.models import SolveReport
from helmholtz_chdg.reference import ReferenceElement

logger = logging.getLogger(__name__)

Callback = Callable[[int, float, np.ndarray], Optional[float]]
Operator = Union[LinearOperator, np.ndarray, scipy.sparse.spmatrix]

DIVERGENCE_THRESHOLD = 1e3


class _History:
    """残差与误差历史，二者长度始终一致"""

    def __init__(self, callback: Optional[Callback]):
        self.callback = callback
        self.residuals: List[float] = []
        self.errors: List[Optional[float]] = []

    def record(self, iteration: int, residual: float, x: np.ndarray) -> None:
        self.residuals.append(float(residual))
        self.errors.append(self.callback(iteration, residual, x) if self.callback else None)
        logger.debug(f"迭代 {iteration}: 相对残差 {residual:.6e}")


def _prepare(op: Operator, b: np.ndarray):
    op = aslinearoperator(op)
    b = np.asarray(b, dtype=complex).ravel()
    return op, b, float(np.linalg.norm(b))


def _zero_rhs_report(name: str, b: np.ndarray, history: _History, start: float) -> SolveReport:
    x = np.zeros_like(b)
    history.record(0, 0.0, x)
    return SolveReport(method=name, iterations=0, residual_history=history.residuals,
                       error_history=history.errors, converged=True,
                       timings={"solve": time.perf_counter() - start}, solution=x)


def _finish(name: str, x: np.ndarray, iterations: int, history: _History, start: float,
            converged: bool = False, diverged: bool = False, breakdown: bool = False) -> SolveReport:
    elapsed = time.perf_counter() - start
    final = history.residuals[-1] if history.residuals else float("nan")
    if diverged:
        logger.warning(f"{name} 发散: {iterations} 次迭代后相对残差 {final:.3e}")
    elif converged:
        logger.info(f"{name} 收敛: {iterations} 次迭代, 相对残差 {final:.3e}, 用时 {elapsed:.2f}s")
    else:
        logger.info(f"{name} 未收敛: {iterations} 次迭代, 相对残差 {final:.3e}")
    return SolveReport(method=name, iterations=iterations, residual_history=history.residuals,
                       error_history=history.errors, converged=bool(converged), diverged=bool(diverged),
                       breakdown=bool(breakdown), timings={"solve": elapsed}, solution=x)


def fixed_point(op: Operator, b: np.ndarray, tol: float = 1e-8, max_iter: int = 1000,
                callback: Optional[Callback] = None) -> SolveReport:
    """
    不带松弛的不动点迭代 g ← ΠS g + b

    op 为 I − ΠS，于是迭代写作 g ← g + (b − op·g)。相对残差超过初值的
    1e3 倍时标记为发散并停止。

    Args:
        op: I − ΠS（或其对称预条件形式）
        b: 右端
        tol: 相对残差阈值
        max_iter: 最大迭代次数
        callback: 每次迭代的回调

    Returns:
        SolveReport
    """
    start = time.perf_counter()
    op, b, b_norm = _prepare(op, b)
    history = _History(callback)
    if b_norm == 0.0:
        return _zero_rhs_report("fixed_point", b, history, start)

    x = np.zeros_like(b)
    r = b.copy()
    history.record(0, 1.0, x)
    for iteration in range(1, max_iter + 1):
        x = x + r
        r = b - op.matvec(x)
        residual = float(np.linalg.norm(r)) / b_norm
        history.record(iteration, residual, x)
        if not np.isfinite(residual) or residual > DIVERGENCE_THRESHOLD:
            return _finish("fixed_point", x, iteration, history, start, diverged=True)
        if residual <= tol:
            return _finish("fixed_point", x, iteration, history, start, converged=True)
    return _finish("fixed_point", x, max_iter, history, start)


def cgnr(op: Operator, b: np.ndarray, tol: float = 1e-8, max_iter: int = 1000,
         callback: Optional[Callback] = None) -> SolveReport:
    """
    法方程 A*Ax = A*b 上的共轭梯度

    残差历史记录真实残差 ‖b − Ax‖/‖b‖。曲率 ‖Ap‖ 为零时标记中断并返回当前迭代解。
    """
    start = time.perf_counter()
    op, b, b_norm = _prepare(op, b)
    history = _History(callback)
    if b_norm == 0.0:
        return _zero_rhs_report("cgnr", b, history, start)

    x = np.zeros_like(b)
    r = b.copy()
    z = op.rmatvec(r)
    p = z.copy()
    gamma = float(np.vdot(z, z).real)
    history.record(0, 1.0, x)
    for iteration in range(1, max_iter + 1):
        w = op.matvec(p)
        curvature = float(np.vdot(w, w).real)
        if curvature == 0.0 or gamma == 0.0:
            return _finish("cgnr", x, iteration - 1, history, start, breakdown=True)
        alpha = gamma / curvature
        x = x + alpha * p
        r = r - alpha * w
        residual = float(np.linalg.norm(r)) / b_norm
        history.record(iteration, residual, x)
        if residual <= tol:
            return _finish("cgnr", x, iteration, history, start, converged=True)
        z = op.rmatvec(r)
        gamma_next = float(np.vdot(z, z).real)
        p = z + (gamma_next / gamma) * p
        gamma = gamma_next
    return _finish("cgnr", x, max_iter, history, start)


def _givens(a: complex, b: complex):
    """使 [[c̄, s̄], [−s, c]]·[a, b]ᵀ = [r, 0]ᵀ 的复 Givens 旋转"""
    rho = np.hypot(abs(a), abs(b))
    if rho == 0.0:
        return 1.0 + 0j, 0j
    return a / rho, b / rho


def gmres(op: Operator, b: np.ndarray, tol: float = 1e-8, max_iter: int = 1000,
          restart: Optional[int] = None, callback: Optional[Callback] = None) -> SolveReport:
    """
    GMRES（修正 Gram-Schmidt Arnoldi + Givens 旋转）

    Args:
        op: 系统算子
        b: 右端
        tol: 相对残差阈值
        max_iter: 总迭代次数上限（跨重启累计）
        restart: 重启长度，None 表示不重启
        callback: 每次迭代的回调；给定时每步都组装当前迭代解

    Returns:
        SolveReport: 不重启时残差历史单调不增
    """
    start = time.perf_counter()
    op, b, b_norm = _prepare(op, b)
    history = _History(callback)
    if b_norm == 0.0:
        return _zero_rhs_report("gmres", b, history, start)

    n = b.size
    cycle = min(restart or max_iter, max_iter, n)
    x = np.zeros_like(b)
    history.record(0, 1.0, x)
    iteration = 0
    converged = False

    while iteration < max_iter and not converged:
        r = b - op.matvec(x)
        beta = float(np.linalg.norm(r))
        if beta / b_norm <= tol:
            converged = True
            break
        basis = [r / beta]
        hessenberg = np.zeros((cycle + 1, cycle), dtype=complex)
        cs = np.zeros(cycle, dtype=complex)
        sn = np.zeros(cycle, dtype=complex)
        rhs = np.zeros(cycle + 1, dtype=complex)
        rhs[0] = beta
        size = 0

        for j in range(cycle):
            if iteration >= max_iter:
                break
            w = op.matvec(basis[j])
            for i in range(j + 1):
                hessenberg[i, j] = np.vdot(basis[i], w)
                w = w - hessenberg[i, j] * basis[i]
            h_next = float(np.linalg.norm(w))
            hessenberg[j + 1, j] = h_next
            happy = h_next <= 1e-14 * beta
            if not happy:
                basis.append(w / h_next)

            for i in range(j):
                upper = np.conj(cs[i]) * hessenberg[i, j] + np.conj(sn[i]) * hessenberg[i + 1, j]
                hessenberg[i + 1, j] = -sn[i] * hessenberg[i, j] + cs[i] * hessenberg[i + 1, j]
                hessenberg[i, j] = upper
            cs[j], sn[j] = _givens(hessenberg[j, j], hessenberg[j + 1, j])
            hessenberg[j, j] = np.conj(cs[j]) * hessenberg[j, j] + np.conj(sn[j]) * hessenberg[j + 1, j]
            hessenberg[j + 1, j] = 0.0
            rhs[j + 1] = -sn[j] * rhs[j]
            rhs[j] = np.conj(cs[j]) * rhs[j]

            iteration += 1
            size = j + 1
            residual = float(abs(rhs[j + 1])) / b_norm
            converged = happy or residual <= tol
            current = x
            if callback is not None:
                y = scipy.linalg.solve_triangular(hessenberg[:size, :size], rhs[:size])
                current = x + np.stack(basis[:size], axis=1) @ y
            history.record(iteration, residual, current)
            if converged:
                break

        if size:
            y = scipy.linalg.solve_triangular(hessenberg[:size, :size], rhs[:size])
            x = x + np.stack(basis[:size], axis=1) @ y
        if restart:
            logger.debug(f"GMRES 重启: 已迭代 {iteration} 次")

    return _finish("gmres", x, iteration, history, start, converged=converged)


class ErrorTracker:
    """
    迭代误差记录

    每 every 次迭代由混合解恢复物理场，计算相对能量误差，其余迭代返回 None。
    给定 physical 时同一批迭代还记录物理系统残差，与残差历史逐项对齐。
    """

    def __init__(self, reconstruct: Callable[[np.ndarray], PhysicalFields], mesh: Mesh,
                 reference_element: ReferenceElement,
                 reference: Union[PhysicalFields, ReferenceField], every: int = 1,
                 physical: Optional[Callable[[PhysicalFields], float]] = None):
        self.logger = logging.getLogger(__name__)
        self.reconstruct = reconstruct
        self.mesh = mesh
        self.reference_element = reference_element
        self.reference = reference
        self.every = every
        self.physical = physical
        self.physical_residuals: List[Optional[float]] = []

    def __call__(self, iteration: int, residual: float, x: np.ndarray) -> Optional[float]:
        if self.every <= 0 or iteration % self.every:
            self.physical_residuals.append(None)
            return None
        fields = self.reconstruct(x)
        self.physical_residuals.append(None if self.physical is None else self.physical(fields))
        value = relative_energy_error(self.mesh, self.reference_element, fields, self.reference)
        self.logger.debug(f"迭代 {iteration}: 相对能量误差 {value:.6e}")
        return value


def track_error(reconstruct: Callable[[np.ndarray], PhysicalFields], mesh: Mesh,
                reference_element: ReferenceElement,
                reference: Union[PhysicalFields, ReferenceField], every: int = 1,
                physical: Optional[Callable[[PhysicalFields], float]] = None) -> ErrorTracker:
    """构造误差记录回调"""
    return ErrorTracker(reconstruct, mesh, reference_element, reference, every, physical)
