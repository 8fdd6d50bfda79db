"""
物理场与能量范数
"""

from dataclasses import dataclass
from typing import Protocol, Union

import numpy as np

from helmholtz_chdg.mesh import Mesh
from helmholtz_chdg.reference import ReferenceElement, triangle_rule


class ReferenceField(Protocol):
    """可在物理点上求值的参考解"""

    def pressure(self, points: np.ndarray, regions: np.ndarray) -> np.ndarray:
        ...

    def velocity(self, points: np.ndarray, regions: np.ndarray) -> np.ndarray:
        ...


@dataclass(frozen=True, eq=False)
class PhysicalFields:
    """逐单元的 p_h (ne, N_v) 与 u_h (ne, 2, N_v) 系数"""
    p: np.ndarray
    u: np.ndarray

    def __sub__(self, other: "PhysicalFields") -> "PhysicalFields":
        return PhysicalFields(p=self.p - other.p, u=self.u - other.u)


def physical_points(mesh: Mesh, ref_points: np.ndarray) -> np.ndarray:
    """参考点在每个单元上的像，形状 (ne, nq, 2)"""
    jac, _ = mesh.jacobians()
    x0 = mesh.vertices[mesh.triangles[:, 0]]
    return x0[:, None, :] + np.einsum("kij,qj->kqi", jac, ref_points)


def energy_norm(mesh: Mesh, ref: ReferenceElement, fields: PhysicalFields) -> float:
    """‖p,u‖²_E = Σ_K ‖p_K‖²/(2ρc²) + ½ρ‖u_K‖²，用质量矩阵精确计算"""
    _, det = mesh.jacobians()
    m = ref.mass
    p2 = np.einsum("ki,ij,kj->k", fields.p.conj(), m, fields.p).real
    u2 = np.einsum("kdi,ij,kdj->k", fields.u.conj(), m, fields.u).real
    rho, c = mesh.rho, mesh.c
    return float(np.sqrt(np.sum(det * (p2 / (2.0 * rho * c ** 2) + 0.5 * rho * u2))))


def _analytic_error(mesh: Mesh, ref: ReferenceElement, fields: PhysicalFields,
                    reference: ReferenceField, n_points: int):
    points, weights = triangle_rule(n_points)
    phi = ref.evaluate(points)
    x = physical_points(mesh, points)
    ne, nq, _ = x.shape
    regions = np.repeat(mesh.regions, nq)
    p_ref = reference.pressure(x.reshape(-1, 2), regions).reshape(ne, nq)
    u_ref = reference.velocity(x.reshape(-1, 2), regions).reshape(ne, nq, 2)
    p_h = fields.p @ phi
    u_h = np.einsum("kdi,iq->kqd", fields.u, phi)

    _, det = mesh.jacobians()
    w = det[:, None] * weights[None, :]
    rho, c = mesh.rho[:, None], mesh.c[:, None]

    def density(p, u):
        return np.abs(p) ** 2 / (2.0 * rho * c ** 2) + 0.5 * rho * np.sum(np.abs(u) ** 2, axis=2)

    error = np.sqrt(np.sum(w * density(p_h - p_ref, u_h - u_ref)))
    norm = np.sqrt(np.sum(w * density(p_ref, u_ref)))
    return float(error), float(norm)


def relative_energy_error(mesh: Mesh, ref: ReferenceElement, fields: PhysicalFields,
                          reference: Union[PhysicalFields, ReferenceField],
                          n_points: int = None) -> float:
    """
    相对能量范数误差 ‖p_h−p_ref, u_h−u_ref‖_E / ‖p_ref, u_ref‖_E

    Args:
        reference: 离散参考场（直接求解结果）或解析参考解
        n_points: 解析参考时每个方向的求积点数，缺省 p+6
    """
    if isinstance(reference, PhysicalFields):
        norm = energy_norm(mesh, ref, reference)
        error = energy_norm(mesh, ref, fields - reference)
    else:
        error, norm = _analytic_error(mesh, ref, fields, reference, n_points or ref.degree + 6)
    if norm == 0.0:
        return error
    return error / norm
