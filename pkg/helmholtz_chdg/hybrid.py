"""
CHDG 全局系统

传输变量空间 G_h、交换算子 Π 与右端 b、散射算子 S、算子系统 (I − ΠS)g = b_h、
面质量预条件以及由混合解恢复物理场。
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import scipy.sparse
import scipy.sparse.linalg
from scipy.sparse.linalg import LinearOperator

from helmholtz_chdg.errors import SolverError
from helmholtz_chdg.fields import PhysicalFields
from helmholtz_chdg.fluxes import FluxConfig, exchange_maps
from helmholtz_chdg.local import ElementSystem, assemble_local_systems
from helmholtz_chdg.mesh import Mesh
from helmholtz_chdg.models import Method

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TransmissionSpace:
    """G_h：每个 (单元, 局部面) 一个长度 p+1 的复系数块"""
    n_elements: int
    n_face: int

    @property
    def n_blocks(self) -> int:
        return 3 * self.n_elements

    @property
    def size(self) -> int:
        return self.n_blocks * self.n_face

    def offset(self, element: int, local: int) -> int:
        return (3 * element + local) * self.n_face

    def block(self, element: int, local: int) -> slice:
        start = self.offset(element, local)
        return slice(start, start + self.n_face)

    def blocks(self, g: np.ndarray) -> np.ndarray:
        """视图 (ne, 3, N_f)"""
        return g.reshape(self.n_elements, 3, self.n_face)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size, dtype=complex)


@dataclass(frozen=True)
class TraceSpace:
    """V̂_h：每个网格面一个长度 p+1 的复系数块"""
    n_faces: int
    n_face: int

    @property
    def n_blocks(self) -> int:
        return self.n_faces

    @property
    def size(self) -> int:
        return self.n_faces * self.n_face

    def block(self, face: int) -> slice:
        return slice(face * self.n_face, (face + 1) * self.n_face)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.size, dtype=complex)


@dataclass(frozen=True, eq=False)
class Sources:
    """
    源项

    boundary: 边界面编号 -> s_D / s_N / s_R 的边基系数块；
    volume: 逐单元体源载荷 (f, φ_i)，形状 (ne, N_v)。
    """
    boundary: Dict[int, np.ndarray] = field(default_factory=dict)
    volume: Optional[np.ndarray] = None

    def boundary_block(self, face: int, size: int) -> np.ndarray:
        block = self.boundary.get(face)
        return np.zeros(size, dtype=complex) if block is None else np.asarray(block, dtype=complex)

    def load(self, element: int) -> Optional[np.ndarray]:
        return None if self.volume is None else self.volume[element]

    @property
    def has_volume(self) -> bool:
        return self.volume is not None and bool(np.any(self.volume))


def block_diagonal(blocks: np.ndarray) -> scipy.sparse.csr_matrix:
    """(nb, m, m) 小块组成的块对角稀疏矩阵"""
    nb, m, _ = blocks.shape
    rows = np.repeat(np.arange(nb * m), m)
    cols = (np.arange(nb)[:, None, None] * m + np.tile(np.arange(m), (m, 1))[None]).ravel()
    return scipy.sparse.csr_matrix((blocks.ravel(), (rows, cols)), shape=(nb * m, nb * m))


def exchange_matrix(mesh: Mesh, flux_config: FluxConfig) -> scipy.sparse.csr_matrix:
    """
    交换算子 Π 的稀疏矩阵

    内部面交换两侧的块；边界面 Dirichlet 为 −I、Neumann 为 I，Robin 为 0（迎风）
    或 B₊⁻¹B₋（对称）。
    """
    nf = flux_config.reference.n_face
    space = TransmissionSpace(mesh.n_elements, nf)
    rows: List[np.ndarray] = []
    cols: List[np.ndarray] = []
    vals: List[np.ndarray] = []
    local_rows, local_cols = np.meshgrid(np.arange(nf), np.arange(nf), indexing="ij")
    diagonal = np.arange(nf)

    for index, face in enumerate(mesh.faces):
        owner = space.offset(*face.owner)
        if face.is_interior:
            neighbor = space.offset(*face.neighbor)
            rows += [owner + diagonal, neighbor + diagonal]
            cols += [neighbor + diagonal, owner + diagonal]
            vals += [np.ones(nf), np.ones(nf)]
            continue
        reflection, _ = exchange_maps(face.tag, flux_config.operators[index],
                                      flux_config.side(index, True))
        rows.append((owner + local_rows).ravel())
        cols.append((owner + local_cols).ravel())
        vals.append(reflection.ravel())

    matrix = scipy.sparse.csr_matrix(
        (np.concatenate(vals).astype(complex), (np.concatenate(rows), np.concatenate(cols))),
        shape=(space.size, space.size))
    matrix.eliminate_zeros()
    return matrix


def exchange_rhs(mesh: Mesh, flux_config: FluxConfig, sources: Sources) -> np.ndarray:
    """边界数据对应的右端 b（内部面为 0）"""
    nf = flux_config.reference.n_face
    space = TransmissionSpace(mesh.n_elements, nf)
    b = space.zeros()
    for index in mesh.boundary_faces():
        if index not in sources.boundary:
            continue
        face = mesh.faces[index]
        _, source = exchange_maps(face.tag, flux_config.operators[index], flux_config.side(index, True))
        b[space.block(*face.owner)] = source @ sources.boundary_block(index, nf)
    return b


def exchange(g: np.ndarray, mesh: Mesh, flux_config: FluxConfig,
             sources: Optional[Sources] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    应用交换算子

    Returns:
        (Πg, b)
    """
    pi = exchange_matrix(mesh, flux_config)
    return pi @ np.asarray(g, dtype=complex), exchange_rhs(mesh, flux_config, sources or Sources())


@dataclass(frozen=True, eq=False)
class HybridSystem:
    """
    Galerkin 形式的混合系统 A x = b

    mass_blocks 为对应空间的块对角质量矩阵，reconstruct 把混合解恢复为物理场。
    """
    method: Method
    operator: LinearOperator
    rhs: np.ndarray
    mass_blocks: np.ndarray
    reconstruct: Callable[[np.ndarray], PhysicalFields]
    matrix: Optional[scipy.sparse.spmatrix] = None

    @property
    def size(self) -> int:
        return self.rhs.size

    def solve_direct(self) -> np.ndarray:
        """稀疏直接求解"""
        matrix = self.matrix
        if matrix is None:
            raise SolverError(f"{self.method.value} 系统没有组装矩阵，无法直接求解")
        try:
            solution = scipy.sparse.linalg.splu(matrix.tocsc()).solve(self.rhs)
        except RuntimeError as e:
            raise SolverError(f"{self.method.value} 全局系统奇异", details=str(e)) from e
        if not np.all(np.isfinite(solution)):
            raise SolverError(f"{self.method.value} 全局系统奇异")
        return solution


class ChdgDiscretization:
    """CHDG 离散：缓存的局部系统、散射映射与交换算子"""

    def __init__(self, mesh: Mesh, flux_config: FluxConfig,
                 systems: Optional[List[ElementSystem]] = None):
        self.logger = logging.getLogger(__name__)
        self.mesh = mesh
        self.flux_config = flux_config
        self.systems = systems if systems is not None else assemble_local_systems(mesh, flux_config, Method.CHDG)
        self.space = TransmissionSpace(mesh.n_elements, flux_config.reference.n_face)
        self.transfers = np.stack([s.transfer for s in self.systems])
        self.pi = exchange_matrix(mesh, flux_config)
        self.pi_adjoint = self.pi.conj().T.tocsr()
        self.logger.info(f"CHDG 离散完成: dim G_h = {self.space.size}")

    def _local(self, g: np.ndarray) -> np.ndarray:
        return np.asarray(g, dtype=complex).reshape(self.mesh.n_elements, -1)

    def scatter(self, g: np.ndarray) -> np.ndarray:
        """S g（无源局部求解）"""
        return np.einsum("kij,kj->ki", self.transfers, self._local(g)).ravel()

    def scatter_adjoint(self, g: np.ndarray) -> np.ndarray:
        return np.einsum("kji,kj->ki", self.transfers.conj(), self._local(g)).ravel()

    def iteration_operator(self) -> LinearOperator:
        """ΠS"""
        n = self.space.size
        return LinearOperator(
            (n, n), dtype=complex,
            matvec=lambda g: self.pi @ self.scatter(g),
            rmatvec=lambda g: self.scatter_adjoint(self.pi_adjoint @ g),
        )

    def system_operator(self) -> LinearOperator:
        """I − ΠS"""
        n = self.space.size
        return LinearOperator(
            (n, n), dtype=complex,
            matvec=lambda g: np.asarray(g).ravel() - self.pi @ self.scatter(g),
            rmatvec=lambda g: np.asarray(g).ravel() - self.scatter_adjoint(self.pi_adjoint @ g),
        )

    def sparse_matrix(self) -> scipy.sparse.csr_matrix:
        """I − ΠS 的稀疏矩阵"""
        scatter = block_diagonal(self.transfers)
        return (scipy.sparse.identity(self.space.size, dtype=complex, format="csr") - self.pi @ scatter).tocsr()

    def source_scatter(self, sources: Sources) -> np.ndarray:
        """S₀：g⊖ = 0 时只由体源产生的出射变量"""
        out = self.space.zeros().reshape(self.mesh.n_elements, -1)
        if sources.has_volume:
            for k, system in enumerate(self.systems):
                out[k] = system.extraction @ system.solve(system.source_rhs(sources.load(k)))
        return out.ravel()

    def rhs(self, sources: Sources) -> np.ndarray:
        """b_h = b + ΠS₀"""
        b = exchange_rhs(self.mesh, self.flux_config, sources)
        if sources.has_volume:
            b = b + self.pi @ self.source_scatter(sources)
        return b

    def mass_blocks(self) -> np.ndarray:
        """每个 (单元, 局部面) 的面质量矩阵 M_F"""
        ops = self.flux_config.operators
        return np.stack([ops[f].mass for f in self.mesh.element_faces.ravel()])

    def norm_blocks(self) -> np.ndarray:
        """A 范数的 Gram 块 M_F·A"""
        ops = self.flux_config.operators
        return np.stack([ops[f].norm_matrix() for f in self.mesh.element_faces.ravel()])

    def reconstruct(self, g_minus: np.ndarray, sources: Optional[Sources] = None) -> PhysicalFields:
        """由入射变量 g⊖ 逐单元恢复 (p_h, u_h)"""
        sources = sources or Sources()
        responses = np.stack([s.response for s in self.systems])
        x = np.einsum("kij,kj->ki", responses, self._local(g_minus))
        if sources.has_volume:
            for k, system in enumerate(self.systems):
                x[k] += system.solve(system.source_rhs(sources.load(k)))
        n = self.flux_config.reference.n_volume
        return PhysicalFields(p=x[:, :n], u=x[:, n:].reshape(-1, 2, n))

    def system(self, sources: Sources) -> HybridSystem:
        """Galerkin 形式 M(I − ΠS)g = M b_h"""
        mass = block_diagonal(self.mass_blocks())
        base = self.system_operator()
        n = self.space.size
        operator = LinearOperator(
            (n, n), dtype=complex,
            matvec=lambda g: mass @ base.matvec(g),
            rmatvec=lambda g: base.rmatvec(mass @ g),
        )
        return HybridSystem(
            method=Method.CHDG, operator=operator, rhs=mass @ self.rhs(sources),
            mass_blocks=self.mass_blocks(),
            reconstruct=lambda g: self.reconstruct(g, sources),
            matrix=(mass @ self.sparse_matrix()).tocsr(),
        )


def chdg_operator(mesh: Mesh, flux_config: FluxConfig,
                  systems: Optional[List[ElementSystem]] = None) -> LinearOperator:
    """I − ΠS 的无矩阵线性算子（含伴随）"""
    return ChdgDiscretization(mesh, flux_config, systems).system_operator()


def reconstruct_fields(data: np.ndarray, mesh: Mesh, flux_config: FluxConfig,
                       sources: Optional[Sources] = None, method: Method = Method.CHDG,
                       systems: Optional[List[ElementSystem]] = None) -> PhysicalFields:
    """
    由混合解恢复物理场

    Args:
        data: CHDG 的 g⊖ 或 HDG 的 p̂
        method: Method.CHDG 或 Method.HDG
    """
    method = Method(method)
    if method is Method.CHDG:
        return ChdgDiscretization(mesh, flux_config, systems).reconstruct(data, sources)
    from helmholtz_chdg.hdg import HdgDiscretization
    return HdgDiscretization(mesh, flux_config, systems).reconstruct(data, sources)


class MassPreconditioner:
    """块对角质量矩阵 M = L Lᵀ 的 Cholesky 因子"""

    def __init__(self, mass_blocks: np.ndarray):
        try:
            self.lower = np.linalg.cholesky(mass_blocks)
        except np.linalg.LinAlgError as e:
            raise SolverError("面质量矩阵 Cholesky 分解失败", details=str(e)) from e
        self.lower_inv = np.linalg.inv(self.lower)
        self.n_blocks, self.m, _ = mass_blocks.shape

    def _blocks(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x).reshape(self.n_blocks, self.m)

    def apply_lower_inv(self, x: np.ndarray) -> np.ndarray:
        """L⁻¹x"""
        return np.einsum("kij,kj->ki", self.lower_inv, self._blocks(x)).ravel()

    def apply_transpose(self, x: np.ndarray) -> np.ndarray:
        """Lᵀx"""
        return np.einsum("kji,kj->ki", self.lower, self._blocks(x)).ravel()

    def apply_transpose_inv(self, x: np.ndarray) -> np.ndarray:
        """L⁻ᵀx"""
        return np.einsum("kji,kj->ki", self.lower_inv, self._blocks(x)).ravel()


@dataclass(frozen=True, eq=False)
class PreconditionedSystem:
    """Ã = L⁻¹AL⁻ᵀ，b̃ = L⁻¹b，g̃ = Lᵀg"""
    operator: LinearOperator
    rhs: np.ndarray
    preconditioner: MassPreconditioner
    source: HybridSystem

    def to_coefficients(self, g_tilde: np.ndarray) -> np.ndarray:
        return self.preconditioner.apply_transpose_inv(g_tilde)

    def from_coefficients(self, g: np.ndarray) -> np.ndarray:
        return self.preconditioner.apply_transpose(g)

    def reconstruct(self, g_tilde: np.ndarray) -> PhysicalFields:
        return self.source.reconstruct(self.to_coefficients(g_tilde))


def precondition(system: HybridSystem) -> PreconditionedSystem:
    """
    面质量矩阵的对称预条件

    预条件后向量的 2-范数等于对应场的 L² 范数。
    """
    pre = MassPreconditioner(system.mass_blocks)
    base = system.operator
    n = system.size
    operator = LinearOperator(
        (n, n), dtype=complex,
        matvec=lambda x: pre.apply_lower_inv(base.matvec(pre.apply_transpose_inv(x))),
        rmatvec=lambda x: pre.apply_lower_inv(base.rmatvec(pre.apply_transpose_inv(x))),
    )
    return PreconditionedSystem(operator=operator, rhs=pre.apply_lower_inv(system.rhs),
                                preconditioner=pre, source=system)
