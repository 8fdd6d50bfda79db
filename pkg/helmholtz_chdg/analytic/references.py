"""
解析参考解与边界数据
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from helmholtz_chdg.analytic.bessel import j0, j1, y0, y1
from helmholtz_chdg.errors import EvanescentError, ResonanceError
from helmholtz_chdg.mesh import Mesh
from helmholtz_chdg.models import BoundaryTag
from helmholtz_chdg.reference import ReferenceElement, edge_rule

logger = logging.getLogger(__name__)

INTERFACE_X = 0.5
RESONANCE_CONDITION = 1e12


class AnalyticReference:
    """p_ref、u_ref = ∇p_ref/(iκη) 以及由它们导出的边界数据"""

    def pressure(self, points: np.ndarray, regions: Optional[np.ndarray] = None) -> np.ndarray:
        raise NotImplementedError

    def velocity(self, points: np.ndarray, regions: Optional[np.ndarray] = None) -> np.ndarray:
        raise NotImplementedError

    def trace_data(self, points: np.ndarray, regions: np.ndarray, normal: np.ndarray,
                   eta: float, tag: BoundaryTag) -> np.ndarray:
        """
        边界点上的 s_D = p、s_N = n·u 或 s_R = p − η n·u

        Args:
            normal: 面的外法向
            eta: 面所在单元的阻抗
        """
        tag = BoundaryTag(tag)
        if tag is BoundaryTag.DIRICHLET:
            return self.pressure(points, regions)
        un = self.velocity(points, regions) @ normal
        if tag is BoundaryTag.NEUMANN:
            return un
        if tag is BoundaryTag.ROBIN:
            return self.pressure(points, regions) - eta * un
        raise ValueError("内部面没有边界数据")


@dataclass(frozen=True)
class PlaneWaveReference(AnalyticReference):
    """x = 1/2 处分界面上的平面波反射与透射"""
    kappa1: float
    kappa2: float
    eta1: float
    eta2: float
    theta_i: float
    theta_t: float
    reflection: complex
    transmission: complex

    def _regions(self, points: np.ndarray, regions: Optional[np.ndarray]) -> np.ndarray:
        if regions is None:
            return np.where(points[:, 0] < INTERFACE_X, 1, 2)
        return np.asarray(regions)

    def _waves(self, points: np.ndarray):
        x, y = points[:, 0], points[:, 1]
        ci, si = math.cos(self.theta_i), math.sin(self.theta_i)
        ct, st = math.cos(self.theta_t), math.sin(self.theta_t)
        incident = np.exp(1j * self.kappa1 * (x * ci + y * si))
        reflected = self.reflection * np.exp(1j * self.kappa1 * (-x * ci + y * si))
        transmitted = self.transmission * np.exp(1j * self.kappa2 * (x * ct + y * st))
        return incident, reflected, transmitted, (ci, si, ct, st)

    def pressure(self, points: np.ndarray, regions: Optional[np.ndarray] = None) -> np.ndarray:
        points = np.atleast_2d(points)
        incident, reflected, transmitted, _ = self._waves(points)
        return np.where(self._regions(points, regions) == 1, incident + reflected, transmitted)

    def velocity(self, points: np.ndarray, regions: Optional[np.ndarray] = None) -> np.ndarray:
        points = np.atleast_2d(points)
        incident, reflected, transmitted, (ci, si, ct, st) = self._waves(points)
        first = np.column_stack([ci * (incident - reflected), si * (incident + reflected)]) / self.eta1
        second = np.column_stack([ct * transmitted, st * transmitted]) / self.eta2
        return np.where((self._regions(points, regions) == 1)[:, None], first, second)


def plane_wave_reference(kappa1: float, kappa2: float, eta1: float, eta2: float,
                         theta_i: float = math.pi / 4) -> PlaneWaveReference:
    """
    平面波参考解

    Raises:
        EvanescentError: (κ₁/κ₂) sin θ_I > 1，全反射
    """
    ratio = kappa1 / kappa2 * math.sin(theta_i)
    if abs(ratio) > 1.0:
        raise EvanescentError(f"透射波为倏逝波: (κ₁/κ₂) sin θ_I = {ratio:.6g} > 1")
    theta_t = math.asin(ratio)
    ci, ct = math.cos(theta_i), math.cos(theta_t)
    denominator = eta1 * ct + eta2 * ci
    reflection = (eta2 * ci - eta1 * ct) / denominator * complex(math.cos(kappa1 * ci), math.sin(kappa1 * ci))
    phase = 0.5 * (kappa1 * ci - kappa2 * ct)
    transmission = 2.0 * eta2 * ci / denominator * complex(math.cos(phase), math.sin(phase))
    logger.debug(f"平面波参考解: θ_T = {theta_t:.6g}, |R| = {abs(reflection):.6g}, |T| = {abs(transmission):.6g}")
    return PlaneWaveReference(kappa1=kappa1, kappa2=kappa2, eta1=eta1, eta2=eta2,
                              theta_i=theta_i, theta_t=theta_t,
                              reflection=reflection, transmission=transmission)


@dataclass(frozen=True)
class CavityReference(AnalyticReference):
    """
    圆形腔体：p_j(r) = A_j J₀(κ_j r) + B_j Y₀(κ_j r) − κ_j⁻²，B₁ = 0

    外边界为齐次 Dirichlet，Dirichlet 数据取问题本身的 s_D = 0。
    """
    kappa1: float
    kappa2: float
    eta1: float
    eta2: float
    r1: float
    r2: float
    a1: float
    a2: float
    b2: float
    condition: float

    def _regions(self, radius: np.ndarray, regions: Optional[np.ndarray]) -> np.ndarray:
        if regions is None:
            return np.where(radius < self.r1, 1, 2)
        return np.asarray(regions)

    def radial(self, radius: np.ndarray, region: int):
        """p(r) 与 ∂_r p(r)"""
        radius = np.asarray(radius, dtype=float)
        if region == 1:
            kr = self.kappa1 * radius
            return (self.a1 * j0(kr) - self.kappa1 ** -2,
                    -self.kappa1 * self.a1 * j1(kr))
        kr = self.kappa2 * radius
        return (self.a2 * j0(kr) + self.b2 * y0(kr) - self.kappa2 ** -2,
                -self.kappa2 * (self.a2 * j1(kr) + self.b2 * y1(kr)))

    def _evaluate(self, points: np.ndarray, regions: Optional[np.ndarray]):
        points = np.atleast_2d(points)
        radius = np.hypot(points[:, 0], points[:, 1])
        regions = self._regions(radius, regions)
        p = np.zeros(radius.size)
        dp = np.zeros(radius.size)
        for region in (1, 2):
            mask = regions == region
            if np.any(mask):
                p[mask], dp[mask] = self.radial(radius[mask], region)
        return points, radius, regions, p, dp

    def pressure(self, points: np.ndarray, regions: Optional[np.ndarray] = None) -> np.ndarray:
        return self._evaluate(points, regions)[3].astype(complex)

    def velocity(self, points: np.ndarray, regions: Optional[np.ndarray] = None) -> np.ndarray:
        points, radius, regions, _, dp = self._evaluate(points, regions)
        kappa = np.where(regions == 1, self.kappa1, self.kappa2)
        eta = np.where(regions == 1, self.eta1, self.eta2)
        with np.errstate(invalid="ignore", divide="ignore"):
            direction = np.where(radius[:, None] > 0, points / radius[:, None], 0.0)
        return (dp / (1j * kappa * eta))[:, None] * direction

    def trace_data(self, points: np.ndarray, regions: np.ndarray, normal: np.ndarray,
                   eta: float, tag: BoundaryTag) -> np.ndarray:
        if BoundaryTag(tag) is BoundaryTag.DIRICHLET:
            return np.zeros(np.atleast_2d(points).shape[0], dtype=complex)
        return super().trace_data(points, regions, normal, eta, tag)

    def source(self, kappa: np.ndarray, eta: np.ndarray) -> np.ndarray:
        """逐单元体源 f = −1/(iκη)"""
        return -1.0 / (1j * np.asarray(kappa) * np.asarray(eta))


def cavity_reference(kappa1: float, kappa2: float, eta1: float, eta2: float,
                     r1: float = 0.25, r2: float = 0.5) -> CavityReference:
    """
    腔体参考解

    Raises:
        ResonanceError: 3×3 系统条件数超过 1e12
    """
    matrix = np.array([
        [0.0, j0(kappa2 * r2), y0(kappa2 * r2)],
        [j0(kappa1 * r1), -j0(kappa2 * r1), -y0(kappa2 * r1)],
        [j1(kappa1 * r1) / eta1, -j1(kappa2 * r1) / eta2, -y1(kappa2 * r1) / eta2],
    ])
    rhs = np.array([kappa2 ** -2, kappa1 ** -2 - kappa2 ** -2, 0.0])
    condition = float(np.linalg.cond(matrix))
    if not np.isfinite(condition) or condition > RESONANCE_CONDITION:
        raise ResonanceError(f"腔体系统接近共振: cond = {condition:.3e}")
    a1, a2, b2 = np.linalg.solve(matrix, rhs)
    logger.debug(f"腔体参考解: A1={a1:.6g}, A2={a2:.6g}, B2={b2:.6g}, cond={condition:.3e}")
    return CavityReference(kappa1=kappa1, kappa2=kappa2, eta1=eta1, eta2=eta2, r1=r1, r2=r2,
                           a1=float(a1), a2=float(a2), b2=float(b2), condition=condition)


def face_points(mesh: Mesh, face_index: int, s: np.ndarray) -> np.ndarray:
    """规范参数 s 在物理面上的点"""
    a, b = mesh.faces[face_index].vertices
    va, vb = mesh.vertices[a], mesh.vertices[b]
    return va[None, :] + np.outer(s, vb - va)


def boundary_data(reference: AnalyticReference, mesh: Mesh, face_index: int,
                  ref: ReferenceElement, tag: Optional[BoundaryTag] = None,
                  n_points: Optional[int] = None) -> np.ndarray:
    """
    边界数据在面上的 L² 投影

    Args:
        reference: 解析参考解
        mesh: 网格
        face_index: 边界面编号
        ref: 参考单元
        tag: 边界类型，缺省取面自身的标签
        n_points: 边求积点数，缺省 p+6

    Returns:
        边基系数块，长度 p+1
    """
    face = mesh.faces[face_index]
    tag = BoundaryTag(tag or face.tag)
    s, weights = edge_rule(n_points or ref.degree + 6)
    points = face_points(mesh, face_index, s)
    element = face.owner[0]
    regions = np.full(s.size, mesh.regions[element])
    values = reference.trace_data(points, regions, face.normal, float(mesh.eta[element]), tag)
    return ref.project_edge(values, weights, s)
