"""
参考单元

参考三角形 (0,0)-(1,0)-(0,1) 上的分层 Lobatto 基（顶点、边、内部函数），
参考边 [0,1] 上的一维 Lobatto 基，以及组装所需的求积公式、梯度表、迹表和
面算子 A_F。
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
from cachetools import LRUCache, cached
from numpy.polynomial import Legendre, Polynomial
from numpy.polynomial import legendre as npleg
from numpy.polynomial import polynomial as nppoly
from scipy.signal import convolve2d

from helmholtz_chdg.errors import DegreeError, FluxError
from helmholtz_chdg.models import FluxKind

logger = logging.getLogger(__name__)

MIN_DEGREE = 1
MAX_DEGREE = 6

REFERENCE_VERTICES = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
# 局部边 i 从局部顶点 i 指向 (i+1)%3
LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


def edge_rule(n_points: int) -> Tuple[np.ndarray, np.ndarray]:
    """[0,1] 上的 Gauss-Legendre 求积，精确到 2n-1 次"""
    x, w = npleg.leggauss(n_points)
    return 0.5 * (x + 1.0), 0.5 * w


def triangle_rule(n_points: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    参考三角形上的折叠张量积 (Duffy) 求积

    Args:
        n_points: 每个方向的 Gauss 点数，对 2n-2 次多项式精确

    Returns:
        (points (n²,2), weights (n²,))，权重全为正且和为 1/2
    """
    s, ws = edge_rule(n_points)
    u, v = np.meshgrid(s, s, indexing="ij")
    wu, wv = np.meshgrid(ws, ws, indexing="ij")
    points = np.column_stack([(u * (1.0 - v)).ravel(), v.ravel()])
    weights = (wu * wv * (1.0 - v)).ravel()
    return points, weights


def _fit(coeffs: np.ndarray, size: int) -> np.ndarray:
    out = np.zeros((size, size))
    m = min(size, coeffs.shape[0])
    n = min(size, coeffs.shape[1])
    out[:m, :n] = coeffs[:m, :n]
    return out


def _affine(c0: float, cx: float, cy: float, size: int) -> np.ndarray:
    out = np.zeros((size, size))
    out[0, 0] = c0
    if size > 1:
        out[1, 0] = cx
        out[0, 1] = cy
    return out


def _compose(coef: np.ndarray, inner: np.ndarray, size: int) -> np.ndarray:
    """一维幂基多项式与二维仿射多项式的复合 (Horner)"""
    result = _fit(np.array([[coef[-1]]]), size)
    for ck in coef[-2::-1]:
        result = _fit(convolve2d(result, inner), size)
        result[0, 0] += ck
    return result


def _product(*factors: np.ndarray, size: int) -> np.ndarray:
    result = factors[0]
    for factor in factors[1:]:
        result = _fit(convolve2d(result, factor), size)
    return result


def _volume_basis(p: int) -> Tuple[np.ndarray, ...]:
    """以 x^i y^j 系数数组表示的分层基"""
    size = p + 1
    bary = (
        _affine(1.0, -1.0, -1.0, size),
        _affine(0.0, 1.0, 0.0, size),
        _affine(0.0, 0.0, 1.0, size),
    )
    basis = [lam.copy() for lam in bary]

    for a, b in LOCAL_EDGES:
        diff = bary[b] - bary[a]
        for k in range(2, p + 1):
            scale = -4.0 * (2 * k - 1) / (k * (k - 1) * np.sqrt(2.0 * (2 * k - 1)))
            kernel = Legendre.basis(k - 1).deriv().convert(kind=Polynomial).coef * scale
            basis.append(_product(bary[a], bary[b], _compose(kernel, diff, size), size=size))

    if p >= 3:
        bubble = _product(*bary, size=size)
        t1 = bary[1] - bary[0]
        t2 = 2.0 * bary[2] - _affine(1.0, 0.0, 0.0, size)
        for total in range(p - 2):
            for i in range(total + 1):
                j = total - i
                pi = Legendre.basis(i).convert(kind=Polynomial).coef
                pj = Legendre.basis(j).convert(kind=Polynomial).coef
                basis.append(_product(bubble, _compose(pi, t1, size),
                                      _compose(pj, t2, size), size=size))
    return tuple(basis)


def _edge_basis(p: int) -> Tuple[Polynomial, ...]:
    """[0,1] 上的一维 Lobatto 基"""
    functions = [Polynomial([1.0, -1.0]), Polynomial([0.0, 1.0])]
    for k in range(2, p + 1):
        lobatto = (Legendre.basis(k, domain=[0, 1]) - Legendre.basis(k - 2, domain=[0, 1]))
        lobatto = lobatto / np.sqrt(2.0 * (2 * k - 1))
        functions.append(lobatto.convert(kind=Polynomial))
    return tuple(functions)


@dataclass(frozen=True, eq=False)
class ReferenceElement:
    """参考单元上的所有表格"""
    degree: int
    n_volume: int
    n_face: int
    basis: Tuple[np.ndarray, ...]
    edge_functions: Tuple[Polynomial, ...]
    volume_points: np.ndarray
    volume_weights: np.ndarray
    edge_points: np.ndarray
    edge_weights: np.ndarray
    volume_values: np.ndarray
    volume_grad_xi: np.ndarray
    volume_grad_eta: np.ndarray
    mass: np.ndarray
    convection_xi: np.ndarray
    convection_eta: np.ndarray
    edge_values: np.ndarray
    edge_derivatives: np.ndarray
    face_mass: np.ndarray
    face_stiffness: np.ndarray
    trace_values: np.ndarray
    trace_matrices: np.ndarray

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """体基函数在参考坐标点上的值，形状 (N_v, n_points)"""
        points = np.atleast_2d(points)
        return np.array([nppoly.polyval2d(points[:, 0], points[:, 1], c) for c in self.basis])

    def evaluate_gradients(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """体基函数关于 (ξ, η) 的偏导数"""
        points = np.atleast_2d(points)
        dxi = np.array([nppoly.polyval2d(points[:, 0], points[:, 1], nppoly.polyder(c, axis=0))
                        for c in self.basis])
        deta = np.array([nppoly.polyval2d(points[:, 0], points[:, 1], nppoly.polyder(c, axis=1))
                         for c in self.basis])
        return dxi, deta

    def evaluate_edge(self, s: np.ndarray) -> np.ndarray:
        """边基函数在参数 s∈[0,1] 上的值，形状 (N_f, n_points)"""
        return np.array([psi(np.asarray(s, dtype=float)) for psi in self.edge_functions])

    def edge_reference_points(self, local_edge: int, flipped: bool, s: np.ndarray) -> np.ndarray:
        """规范参数 s 在局部边上对应的参考坐标"""
        a, b = LOCAL_EDGES[local_edge]
        t = 1.0 - s if flipped else s
        return np.outer(1.0 - t, REFERENCE_VERTICES[a]) + np.outer(t, REFERENCE_VERTICES[b])

    def project_edge(self, values: np.ndarray, weights: Optional[np.ndarray] = None,
                     s: Optional[np.ndarray] = None) -> np.ndarray:
        """
        把边上点值 L² 投影到边基上

        Args:
            values: 在求积点 s 上的函数值
            weights, s: 求积公式，缺省为参考边求积
        """
        if s is None:
            s, weights = self.edge_points, self.edge_weights
        psi = self.evaluate_edge(s)
        return np.linalg.solve(self.face_mass, (psi * weights) @ values)


def _check_degree(p: int) -> None:
    if not isinstance(p, (int, np.integer)) or p < MIN_DEGREE or p > MAX_DEGREE:
        raise DegreeError(f"不支持的多项式阶数: {p} (允许 {MIN_DEGREE}..{MAX_DEGREE})")


@cached(cache=LRUCache(maxsize=16))
def build_reference(p: int) -> ReferenceElement:
    """
    构造 p 阶参考单元

    Args:
        p: 多项式阶数，1 ≤ p ≤ 6

    Returns:
        ReferenceElement: 体求积对 2p+2 次精确，边求积对 2p+3 次精确
    """
    _check_degree(p)
    n_volume = (p + 1) * (p + 2) // 2
    n_face = p + 1

    basis = _volume_basis(p)
    edge_functions = _edge_basis(p)

    volume_points, volume_weights = triangle_rule(p + 2)
    edge_points, edge_weights = edge_rule(p + 2)

    partial = ReferenceElement(
        degree=p, n_volume=n_volume, n_face=n_face, basis=basis,
        edge_functions=edge_functions, volume_points=volume_points,
        volume_weights=volume_weights, edge_points=edge_points,
        edge_weights=edge_weights, volume_values=None, volume_grad_xi=None,
        volume_grad_eta=None, mass=None, convection_xi=None, convection_eta=None,
        edge_values=None, edge_derivatives=None, face_mass=None,
        face_stiffness=None, trace_values=None, trace_matrices=None,
    )

    values = partial.evaluate(volume_points)
    grad_xi, grad_eta = partial.evaluate_gradients(volume_points)
    mass = (values * volume_weights) @ values.T
    convection_xi = (grad_xi * volume_weights) @ values.T
    convection_eta = (grad_eta * volume_weights) @ values.T

    edge_values = partial.evaluate_edge(edge_points)
    edge_derivatives = np.array([psi.deriv()(edge_points) for psi in edge_functions])
    face_mass = (edge_values * edge_weights) @ edge_values.T
    face_stiffness = (edge_derivatives * edge_weights) @ edge_derivatives.T

    trace_values = np.empty((3, 2, n_volume, edge_points.size))
    trace_matrices = np.empty((3, 2, n_face, n_volume))
    for edge in range(3):
        for orientation in range(2):
            points = partial.edge_reference_points(edge, bool(orientation), edge_points)
            trace = partial.evaluate(points)
            trace_values[edge, orientation] = trace
            trace_matrices[edge, orientation] = np.linalg.solve(
                face_mass, (edge_values * edge_weights) @ trace.T)

    logger.debug(f"参考单元构造完成: p={p}, N_v={n_volume}, N_f={n_face}")
    return ReferenceElement(
        degree=p, n_volume=n_volume, n_face=n_face, basis=basis,
        edge_functions=edge_functions, volume_points=volume_points,
        volume_weights=volume_weights, edge_points=edge_points,
        edge_weights=edge_weights, volume_values=values, volume_grad_xi=grad_xi,
        volume_grad_eta=grad_eta, mass=mass, convection_xi=convection_xi,
        convection_eta=convection_eta, edge_values=edge_values,
        edge_derivatives=edge_derivatives, face_mass=face_mass,
        face_stiffness=face_stiffness, trace_values=trace_values,
        trace_matrices=trace_matrices,
    )


@dataclass(frozen=True, eq=False)
class FaceOperator:
    """
    单个网格面上的面算子

    矩阵均作用在规范参数化的边基系数上。mass 为物理边质量矩阵 M_F，
    symmetric 通量时 impedance 为 A、admittance 为 A⁻¹；Robin 面上另存
    B₊⁻¹B₋ 与 B₊⁻¹，其中 B± = I ± A/η_K。
    """
    kind: FluxKind
    edge_length: float
    eta: float
    eta_neighbor: float
    kappa: float
    kappa_neighbor: float
    mu: Optional[float]
    kappa_face: Optional[float]
    mass: np.ndarray
    stiffness: np.ndarray
    impedance: Optional[np.ndarray]
    admittance: Optional[np.ndarray]
    robin_reflection: Optional[np.ndarray] = None
    robin_source: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return self.mass.shape[0]

    def norm_matrix(self) -> np.ndarray:
        """A 范数的 Gram 矩阵 M_F·A（迎风通量时取 M_F）"""
        if self.impedance is None:
            return self.mass
        return self.mass @ self.impedance


def build_face_operator(kind: FluxKind, eta_k: float, eta_neighbor: float,
                        kappa_k: float, kappa_neighbor: float,
                        ref: ReferenceElement, edge_length: float,
                        robin: bool = False) -> FaceOperator:
    """
    构造面算子

    Args:
        kind: 通量族
        eta_k, eta_neighbor: 两侧阻抗（边界面取 η_K′ = η_K）
        kappa_k, kappa_neighbor: 两侧波数
        ref: 参考单元
        edge_length: 物理边长
        robin: 是否为 Robin 边界面

    Returns:
        FaceOperator
    """
    kind = FluxKind(kind)
    if min(eta_k, eta_neighbor, kappa_k, kappa_neighbor) <= 0:
        raise FluxError(f"面系数必须为正: η=({eta_k}, {eta_neighbor}), κ=({kappa_k}, {kappa_neighbor})")
    if edge_length <= 0:
        raise FluxError(f"边长必须为正: {edge_length}")

    mass = edge_length * ref.face_mass
    stiffness = ref.face_stiffness / edge_length
    identity = np.eye(ref.n_face)

    if kind is FluxKind.UPWIND:
        return FaceOperator(
            kind=kind, edge_length=edge_length, eta=eta_k, eta_neighbor=eta_neighbor,
            kappa=kappa_k, kappa_neighbor=kappa_neighbor, mu=None, kappa_face=None,
            mass=mass, stiffness=stiffness, impedance=None, admittance=None,
        )

    mu = float(np.sqrt(eta_k * eta_neighbor))
    if not mu > 0:
        raise FluxError(f"μ_F 必须为正: {mu}")
    kappa_face = float(np.sqrt(kappa_k * kappa_neighbor))

    if kind is FluxKind.SYM0:
        impedance = mu * identity
        admittance = identity / mu
    else:
        # (M + S/(2κ²)) A = μ M，端点取自然边界条件
        shifted = mass + stiffness / (2.0 * kappa_face ** 2)
        impedance = mu * scipy.linalg.solve(shifted, mass)
        admittance = scipy.linalg.solve(mass, shifted) / mu

    robin_reflection = robin_source = None
    if robin:
        b_plus = identity + impedance / eta_k
        b_minus = identity - impedance / eta_k
        robin_source = np.linalg.inv(b_plus)
        robin_reflection = robin_source @ b_minus

    return FaceOperator(
        kind=kind, edge_length=edge_length, eta=eta_k, eta_neighbor=eta_neighbor,
        kappa=kappa_k, kappa_neighbor=kappa_neighbor, mu=mu,
        kappa_face=kappa_face if kind is FluxKind.SYM2 else None,
        mass=mass, stiffness=stiffness, impedance=impedance, admittance=admittance,
        robin_reflection=robin_reflection, robin_source=robin_source,
    )
