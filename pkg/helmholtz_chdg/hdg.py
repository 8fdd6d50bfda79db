"""
HDG 数值迹系统

每个单元的特征迹 c_K = p + Z n·u 经静态凝聚写成 c_K = H_K p̂ + c0_K，
面方程按边界类型把 p̂_F 表示为两侧特征迹的加权和。
"""

import logging
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse
from scipy.sparse.linalg import aslinearoperator

from helmholtz_chdg.fields import PhysicalFields
from helmholtz_chdg.fluxes import FluxConfig, SideCoefficients, characteristic_impedance
from helmholtz_chdg.hybrid import HybridSystem, Sources, TraceSpace
from helmholtz_chdg.local import ElementSystem, assemble_local_systems
from helmholtz_chdg.mesh import Face, Mesh
from helmholtz_chdg.models import BoundaryTag, FluxKind, Method
from helmholtz_chdg.reference import FaceOperator

logger = logging.getLogger(__name__)


def _robin_inverse(op: FaceOperator, side: SideCoefficients) -> np.ndarray:
    """B₊⁻¹，B₊ = I + Z/η_K"""
    if op.kind is FluxKind.UPWIND:
        return 0.5 * np.eye(op.size)
    return op.robin_source


def face_weight(face: Face, op: FaceOperator, side: SideCoefficients) -> np.ndarray:
    """p̂_F = Σ_K W_K c_K + r_F 中单元 K 一侧的权重 W_K"""
    eye = np.eye(op.size)
    if face.tag is BoundaryTag.INTERIOR:
        if op.kind is FluxKind.UPWIND:
            return side.eta_neighbor / (side.eta + side.eta_neighbor) * eye
        return 0.5 * eye
    if face.tag is BoundaryTag.DIRICHLET:
        return np.zeros_like(eye)
    if face.tag is BoundaryTag.NEUMANN:
        return eye
    return _robin_inverse(op, side)


def face_source(face: Face, op: FaceOperator, side: SideCoefficients, data: np.ndarray) -> np.ndarray:
    """边界数据在 p̂_F 中的贡献 r_F"""
    if face.tag is BoundaryTag.DIRICHLET:
        return data
    z = characteristic_impedance(op, side)
    if face.tag is BoundaryTag.NEUMANN:
        return -z @ data
    if face.tag is BoundaryTag.ROBIN:
        return _robin_inverse(op, side) @ z @ data / side.eta
    return np.zeros_like(data)


class HdgDiscretization:
    """HDG 离散：缓存的局部系统与凝聚后的面系统"""

    def __init__(self, mesh: Mesh, flux_config: FluxConfig,
                 systems: Optional[List[ElementSystem]] = None):
        self.logger = logging.getLogger(__name__)
        self.mesh = mesh
        self.flux_config = flux_config
        self.systems = systems if systems is not None else assemble_local_systems(mesh, flux_config, Method.HDG)
        self.space = TraceSpace(mesh.n_faces, flux_config.reference.n_face)
        self._matrix = None

    def _side(self, element: int, local: int):
        index = int(self.mesh.element_faces[element, local])
        face = self.mesh.faces[index]
        is_owner = face.owner == (element, local)
        return index, face, self.flux_config.operators[index], self.flux_config.side(index, is_owner)

    def _source_traces(self, sources: Sources) -> np.ndarray:
        """c0_K：p̂ = 0 时只由体源产生的特征迹，形状 (ne, 3·N_f)"""
        nf = self.space.n_face
        out = np.zeros((self.mesh.n_elements, 3 * nf), dtype=complex)
        if sources.has_volume:
            for k, system in enumerate(self.systems):
                out[k] = system.extraction @ system.solve(system.source_rhs(sources.load(k)))
        return out

    def matrix(self) -> scipy.sparse.csr_matrix:
        """Galerkin 形式的面系统矩阵"""
        if self._matrix is not None:
            return self._matrix
        nf = self.space.n_face
        rows, cols, vals = [], [], []
        local_rows, local_cols = np.meshgrid(np.arange(nf), np.arange(nf), indexing="ij")

        def add(row_face: int, col_face: int, block: np.ndarray) -> None:
            rows.append((row_face * nf + local_rows).ravel())
            cols.append((col_face * nf + local_cols).ravel())
            vals.append(block.ravel())

        for index, op in enumerate(self.flux_config.operators):
            add(index, index, op.mass.astype(complex))

        for k, system in enumerate(self.systems):
            faces = self.mesh.element_faces[k]
            for i in range(3):
                index, face, op, side = self._side(k, i)
                weight = face_weight(face, op, side)
                if not np.any(weight):
                    continue
                for j in range(3):
                    block = system.transfer[i * nf:(i + 1) * nf, j * nf:(j + 1) * nf]
                    add(index, int(faces[j]), -op.mass @ weight @ block)

        size = self.space.size
        matrix = scipy.sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size))
        matrix.sum_duplicates()
        self._matrix = matrix
        self.logger.info(f"HDG 面系统组装完成: dim V̂_h = {size}, nnz = {matrix.nnz}")
        return matrix

    def rhs(self, sources: Sources) -> np.ndarray:
        """M_F(r_F + Σ_K W_K c0_K)"""
        nf = self.space.n_face
        rhs = self.space.zeros()
        for index in self.mesh.boundary_faces():
            if index not in sources.boundary:
                continue
            face = self.mesh.faces[index]
            op = self.flux_config.operators[index]
            side = self.flux_config.side(index, True)
            rhs[self.space.block(index)] += op.mass @ face_source(face, op, side, sources.boundary_block(index, nf))
        if sources.has_volume:
            c0 = self._source_traces(sources)
            for k in range(self.mesh.n_elements):
                for i in range(3):
                    index, face, op, side = self._side(k, i)
                    rhs[self.space.block(index)] += op.mass @ face_weight(face, op, side) @ c0[k, i * nf:(i + 1) * nf]
        return rhs

    def gather(self, p_hat: np.ndarray) -> np.ndarray:
        """按单元收集三个局部面的 p̂，形状 (ne, 3·N_f)"""
        blocks = np.asarray(p_hat, dtype=complex).reshape(self.space.n_faces, self.space.n_face)
        return blocks[self.mesh.element_faces].reshape(self.mesh.n_elements, -1)

    def reconstruct(self, p_hat: np.ndarray, sources: Optional[Sources] = None) -> PhysicalFields:
        """由数值迹 p̂ 逐单元恢复 (p_h, u_h)"""
        sources = sources or Sources()
        data = self.gather(p_hat)
        responses = np.stack([s.response for s in self.systems])
        x = np.einsum("kij,kj->ki", responses, data)
        if sources.has_volume:
            for k, system in enumerate(self.systems):
                x[k] += system.solve(system.source_rhs(sources.load(k)))
        n = self.flux_config.reference.n_volume
        return PhysicalFields(p=x[:, :n], u=x[:, n:].reshape(-1, 2, n))

    def mass_blocks(self) -> np.ndarray:
        return np.stack([op.mass for op in self.flux_config.operators])

    def system(self, sources: Sources) -> HybridSystem:
        matrix = self.matrix()
        return HybridSystem(
            method=Method.HDG, operator=aslinearoperator(matrix), rhs=self.rhs(sources),
            mass_blocks=self.mass_blocks(),
            reconstruct=lambda p_hat: self.reconstruct(p_hat, sources),
            matrix=matrix,
        )


def hdg_system(mesh: Mesh, flux_config: FluxConfig, sources: Optional[Sources] = None,
               systems: Optional[List[ElementSystem]] = None) -> Tuple[scipy.sparse.csr_matrix, np.ndarray]:
    """
    组装 HDG 面系统

    Args:
        mesh: 网格
        flux_config: 通量配置
        sources: 边界与体源，缺省为零

    Returns:
        (稀疏矩阵, 右端向量)，作用在 V̂_h 上
    """
    discretization = HdgDiscretization(mesh, flux_config, systems)
    return discretization.matrix(), discretization.rhs(sources or Sources())
