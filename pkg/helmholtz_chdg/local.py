"""
单元局部组装与求解

未知量按 (p; u_x; u_y) 排列，每块 N_v 个系数。每个单元的局部矩阵只分解一次，
之后所有迭代都复用该分解。
"""

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from helmholtz_chdg.errors import MeshError, SolverError
from helmholtz_chdg.fluxes import (FluxConfig, FluxMaps, characteristic_impedance,
                                   chdg_flux_maps, hdg_flux_maps, outgoing_maps)
from helmholtz_chdg.mesh import Mesh
from helmholtz_chdg.models import Method
from helmholtz_chdg.reference import ReferenceElement

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class VolumeForms:
    """单元 K 上的体矩阵与面迹表"""
    element: int
    mass: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    area: float
    jacobian: np.ndarray
    traces: np.ndarray
    normals: np.ndarray
    edge_lengths: np.ndarray
    reference_face_mass: np.ndarray

    def lift(self, local_face: int, axis: Optional[int] = None) -> np.ndarray:
        """边界项 ∮ n_axis φ_i φ_j 在面 local_face 上的贡献"""
        trace = self.traces[local_face]
        gram = trace.T @ (self.edge_lengths[local_face] * self.reference_face_mass) @ trace
        return gram if axis is None else self.normals[local_face, axis] * gram


class LocalSolution(NamedTuple):
    """局部解 (p_K, u_K)"""
    p: np.ndarray
    u: np.ndarray


def assemble_volume_forms(mesh: Mesh, element: int, ref: ReferenceElement) -> VolumeForms:
    """
    组装质量矩阵与 D_x、D_y

    D_x[i,j] = ∫_K ∂_x φ_i φ_j，使得 (u, ∇q) 与 (p, div v) 都可由 D_x、D_y 表示。

    Args:
        mesh: 网格
        element: 单元编号
        ref: 参考单元

    Returns:
        VolumeForms
    """
    tri = mesh.triangles[element]
    x = mesh.vertices[tri]
    jac = np.column_stack([x[1] - x[0], x[2] - x[0]])
    det = float(np.linalg.det(jac))
    if det <= 0:
        raise MeshError(f"单元 {element} 退化或顺时针: det J = {det}")
    inv = np.linalg.inv(jac)

    mass = det * ref.mass
    dx = det * (inv[0, 0] * ref.convection_xi + inv[1, 0] * ref.convection_eta)
    dy = det * (inv[0, 1] * ref.convection_xi + inv[1, 1] * ref.convection_eta)

    traces = np.empty((3, ref.n_face, ref.n_volume))
    normals = np.empty((3, 2))
    lengths = np.empty(3)
    for local in range(3):
        face = mesh.faces[mesh.element_faces[element, local]]
        traces[local] = ref.trace_matrices[local, int(mesh.face_flipped[element, local])]
        normals[local] = face.normal_for(element)
        lengths[local] = face.length

    return VolumeForms(element=element, mass=mass, dx=dx, dy=dy, area=0.5 * det,
                       jacobian=jac, traces=traces, normals=normals,
                       edge_lengths=lengths, reference_face_mass=ref.face_mass)


@dataclass(frozen=True, eq=False)
class ElementSystem:
    """
    单元局部系统 L_K x = R_K d + f_K

    response = L_K⁻¹R_K 把面数据 d 映射到局部解；transfer = extraction·response
    为单元上的散射映射（CHDG）或特征迹映射（HDG）。
    """
    element: int
    method: Method
    matrix: np.ndarray
    factorization: Tuple[np.ndarray, np.ndarray]
    coupling: np.ndarray
    extraction: np.ndarray
    response: np.ndarray
    transfer: np.ndarray
    forms: VolumeForms

    @property
    def n_volume(self) -> int:
        return self.forms.mass.shape[0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return scipy.linalg.lu_solve(self.factorization, rhs)

    def split(self, x: np.ndarray) -> LocalSolution:
        n = self.n_volume
        return LocalSolution(p=x[:n], u=np.stack([x[n:2 * n], x[2 * n:]]))

    def source_rhs(self, load: Optional[np.ndarray]) -> np.ndarray:
        """体源 (f, q) 只进入第一个方程"""
        rhs = np.zeros(3 * self.n_volume, dtype=complex)
        if load is not None:
            rhs[:self.n_volume] = load
        return rhs


def trace_operators(forms: VolumeForms, local: int) -> Tuple[np.ndarray, np.ndarray]:
    """把 (p; u_x; u_y) 映射到 p|_F 与 n·u|_F 的边基系数"""
    trace = forms.traces[local]
    nx, ny = forms.normals[local]
    zero = np.zeros_like(trace)
    p_op = np.hstack([trace, zero, zero])
    un_op = np.hstack([zero, nx * trace, ny * trace])
    return p_op, un_op


def volume_block(forms: VolumeForms, kappa: float, eta: float) -> np.ndarray:
    """体项 −i(κ/η)(p,q) − (u,∇q) − i(κη)(u,v) − (p, div v)"""
    m, dx, dy = forms.mass, forms.dx, forms.dy
    zero = np.zeros_like(m)
    return np.block([
        [-1j * kappa / eta * m, -dx, -dy],
        [-dx, -1j * kappa * eta * m, zero],
        [-dy, zero, -1j * kappa * eta * m],
    ])


def _assemble(mesh: Mesh, element: int, flux_config: FluxConfig, method: Method) -> ElementSystem:
    ref = flux_config.reference
    forms = assemble_volume_forms(mesh, element, ref)
    n_face = ref.n_face
    matrix = volume_block(forms, mesh.kappa[element], mesh.eta[element]).astype(complex)
    coupling = np.zeros((matrix.shape[0], 3 * n_face), dtype=complex)
    extraction = np.zeros((3 * n_face, matrix.shape[0]), dtype=complex)

    for local in range(3):
        face_index = mesh.element_faces[element, local]
        face = mesh.faces[face_index]
        is_owner = face.owner == (element, local)
        op = flux_config.operators[face_index]
        side = flux_config.side(face_index, is_owner)
        maps: FluxMaps = chdg_flux_maps(op, side) if method is Method.CHDG else hdg_flux_maps(op, side)

        p_op, un_op = trace_operators(forms, local)
        test_p = p_op.T @ op.mass
        test_un = un_op.T @ op.mass
        matrix += test_p @ (maps.un_p @ p_op + maps.un_u @ un_op)
        matrix += test_un @ (maps.p_p @ p_op + maps.p_u @ un_op)

        block = slice(local * n_face, (local + 1) * n_face)
        coupling[:, block] = -(test_p @ maps.un_data + test_un @ maps.p_data)
        if method is Method.CHDG:
            gp, gu = outgoing_maps(op, side)
            extraction[block] = gp @ p_op + gu @ un_op
        else:
            extraction[block] = p_op + characteristic_impedance(op, side) @ un_op

    try:
        factorization = scipy.linalg.lu_factor(matrix, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as e:
        raise SolverError(f"单元 {element} 的局部矩阵分解失败", details=str(e)) from e
    if np.any(np.abs(np.diag(factorization[0])) < 1e-14 * np.abs(matrix).max()):
        raise SolverError(f"单元 {element} 的局部矩阵奇异")

    response = scipy.linalg.lu_solve(factorization, coupling)
    return ElementSystem(element=element, method=method, matrix=matrix,
                         factorization=factorization, coupling=coupling,
                         extraction=extraction, response=response,
                         transfer=extraction @ response, forms=forms)


def assemble_chdg_local(mesh: Mesh, element: int, flux_config: FluxConfig) -> ElementSystem:
    """
    CHDG 局部问题：面数据为入射传输变量 g⊖

    对称通量时面项为 ½⟨A⁻¹p + n·u, q⟩ 与 ½⟨p + A n·u, n·v⟩，右端为
    ½⟨g⊖, q⟩ 与 −½⟨A g⊖, n·v⟩；迎风通量把 p̂、n·û 的迎风公式直接代入。
    """
    return _assemble(mesh, element, flux_config, Method.CHDG)


def assemble_hdg_local(mesh: Mesh, element: int, flux_config: FluxConfig) -> ElementSystem:
    """
    HDG 局部问题：面数据为数值迹 p̂

    n·û = n·u + Z⁻¹(p − p̂)，Z 为 A（对称通量）或 η_K（迎风通量）。
    """
    return _assemble(mesh, element, flux_config, Method.HDG)


def assemble_local_systems(mesh: Mesh, flux_config: FluxConfig, method: Method) -> List[ElementSystem]:
    """组装并分解所有单元的局部系统"""
    method = Method(method)
    if method is Method.DG:
        raise SolverError("DG 方法没有局部系统")
    systems = [_assemble(mesh, k, flux_config, method) for k in range(mesh.n_elements)]
    logger.info(f"局部系统组装完成: method={method.value}, 单元数={len(systems)}")
    return systems


def local_scatter(system: ElementSystem, g_minus: np.ndarray,
                  load: Optional[np.ndarray] = None) -> Tuple[LocalSolution, np.ndarray]:
    """
    单元散射映射：入射 g⊖ 到局部解与出射 g⊕

    Args:
        system: CHDG 局部系统
        g_minus: 三个局部面的 g⊖，形状 (3·N_f,) 或 (3, N_f)
        load: 体源载荷 (f, φ_i)

    Returns:
        (LocalSolution, g⊕ 形状 (3·N_f,))
    """
    data = np.asarray(g_minus, dtype=complex).reshape(-1)
    x = system.response @ data
    if load is not None:
        x = x + system.solve(system.source_rhs(load))
    return system.split(x), system.extraction @ x


def constant_source_loads(mesh: Mesh, ref: ReferenceElement, values: Sequence[complex]) -> np.ndarray:
    """逐单元常数体源 f 的载荷 (f, φ_i)_K，形状 (ne, N_v)"""
    values = np.asarray(values, dtype=complex).reshape(mesh.n_elements)
    _, det = mesh.jacobians()
    basis_integrals = ref.volume_values @ ref.volume_weights
    return (values * det)[:, None] * basis_integrals[None, :]


def point_source_loads(mesh: Mesh, ref: ReferenceElement, point: Sequence[float],
                       amplitude: complex = 1.0) -> np.ndarray:
    """点源 δ(x − x₀) 的载荷 φ_i(x₀)，只在包含 x₀ 的单元上非零"""
    element = mesh.locate(point)
    jac, _ = mesh.jacobians()
    x0 = mesh.vertices[mesh.triangles[element, 0]]
    xi = np.linalg.solve(jac[element], np.asarray(point, dtype=float) - x0)
    loads = np.zeros((mesh.n_elements, ref.n_volume), dtype=complex)
    loads[element] = amplitude * ref.evaluate(xi[None, :])[:, 0]
    logger.debug(f"点源位于单元 {element}, 参考坐标 {xi}")
    return loads
