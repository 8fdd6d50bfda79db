"""
DG 整体求解（校验基准）

直接把两侧迹代入显式通量公式，组装耦合的整体稀疏系统并直接求解，
不经过任何传输变量或数值迹的杂交化。
"""

import logging
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse
import scipy.sparse.linalg

from helmholtz_chdg.errors import SolverError
from helmholtz_chdg.fields import PhysicalFields
from helmholtz_chdg.fluxes import FluxConfig, SideCoefficients, characteristic_impedance
from helmholtz_chdg.hybrid import Sources
from helmholtz_chdg.local import assemble_volume_forms, trace_operators, volume_block
from helmholtz_chdg.mesh import Face, Mesh
from helmholtz_chdg.models import BoundaryTag, FluxKind
from helmholtz_chdg.reference import FaceOperator

logger = logging.getLogger(__name__)


class SideFlux(NamedTuple):
    """p̂ = p_p·p + p_u·ut，n·û = un_p·p + un_u·ut（ut 为该侧自身法向的 n·u）"""
    p_p: np.ndarray
    p_u: np.ndarray
    un_p: np.ndarray
    un_u: np.ndarray


class ExplicitFlux(NamedTuple):
    own: SideFlux
    neighbor: Optional[SideFlux]
    source_p: Optional[np.ndarray]
    source_un: Optional[np.ndarray]


def explicit_flux(face: Face, op: FaceOperator, side: SideCoefficients) -> ExplicitFlux:
    """
    从单元 K 一侧看的显式数值通量

    内部面含两侧迹；边界面含边界数据 s 的系数。
    """
    eye = np.eye(op.size)
    zero = np.zeros_like(eye)
    if face.tag is BoundaryTag.INTERIOR:
        if op.kind is FluxKind.UPWIND:
            eta, eta_n = side
            s = 1.0 / (eta + eta_n)
            own = SideFlux(eta_n * s * eye, eta * eta_n * s * eye, s * eye, eta * s * eye)
            other = SideFlux(eta * s * eye, eta * eta_n * s * eye, -s * eye, -eta_n * s * eye)
        else:
            a, a_inv = op.impedance, op.admittance
            own = SideFlux(0.5 * eye, 0.5 * a, 0.5 * a_inv, 0.5 * eye)
            other = SideFlux(0.5 * eye, 0.5 * a, -0.5 * a_inv, -0.5 * eye)
        return ExplicitFlux(own, other, None, None)

    z = characteristic_impedance(op, side)
    z_inv = eye / side.eta if op.kind is FluxKind.UPWIND else op.admittance
    if face.tag is BoundaryTag.DIRICHLET:
        return ExplicitFlux(SideFlux(zero, zero, z_inv, eye), None, eye, -z_inv)
    if face.tag is BoundaryTag.NEUMANN:
        return ExplicitFlux(SideFlux(eye, z, zero, zero), None, -z, eye)
    b_inv = 0.5 * eye if op.kind is FluxKind.UPWIND else op.robin_source
    own = SideFlux(b_inv, b_inv @ z, b_inv / side.eta, b_inv @ z / side.eta)
    return ExplicitFlux(own, None, b_inv @ z / side.eta, -b_inv / side.eta)


def dg_matrix(mesh: Mesh, flux_config: FluxConfig, sources: Optional[Sources] = None):
    """
    组装 DG 整体系统

    Returns:
        (稀疏矩阵, 右端)，未知量按单元排列，每单元 (p; u_x; u_y)
    """
    sources = sources or Sources()
    ref = flux_config.reference
    nv, nf = ref.n_volume, ref.n_face
    block = 3 * nv
    ne = mesh.n_elements
    forms = [assemble_volume_forms(mesh, k, ref) for k in range(ne)]
    rows, cols, vals = [], [], []
    local_rows, local_cols = np.meshgrid(np.arange(block), np.arange(block), indexing="ij")
    rhs = np.zeros(ne * block, dtype=complex)

    def add(k: int, j: int, values: np.ndarray) -> None:
        rows.append((k * block + local_rows).ravel())
        cols.append((j * block + local_cols).ravel())
        vals.append(values.ravel())

    for k in range(ne):
        diagonal = volume_block(forms[k], mesh.kappa[k], mesh.eta[k]).astype(complex)
        load = sources.load(k)
        if load is not None:
            rhs[k * block:k * block + nv] += load
        for local in range(3):
            index = int(mesh.element_faces[k, local])
            face = mesh.faces[index]
            is_owner = face.owner == (k, local)
            op = flux_config.operators[index]
            flux = explicit_flux(face, op, flux_config.side(index, is_owner))
            p_op, un_op = trace_operators(forms[k], local)
            test_p = p_op.T @ op.mass
            test_un = un_op.T @ op.mass
            own = flux.own
            diagonal += test_p @ (own.un_p @ p_op + own.un_u @ un_op)
            diagonal += test_un @ (own.p_p @ p_op + own.p_u @ un_op)
            if flux.neighbor is not None:
                other_k, other_local = face.neighbor if is_owner else face.owner
                other_p, other_un = trace_operators(forms[other_k], other_local)
                nb = flux.neighbor
                add(k, other_k, test_p @ (nb.un_p @ other_p + nb.un_u @ other_un)
                    + test_un @ (nb.p_p @ other_p + nb.p_u @ other_un))
            elif index in sources.boundary:
                s = sources.boundary_block(index, nf)
                rhs[k * block:(k + 1) * block] -= test_p @ flux.source_un @ s + test_un @ flux.source_p @ s
        add(k, k, diagonal)

    size = ne * block
    matrix = scipy.sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size))
    matrix.sum_duplicates()
    return matrix, rhs


def dg_oracle(mesh: Mesh, flux_config: FluxConfig, sources: Optional[Sources] = None) -> PhysicalFields:
    """
    整体 DG 直接求解

    Raises:
        SolverError: 整体矩阵奇异
    """
    matrix, rhs = dg_matrix(mesh, flux_config, sources)
    logger.info(f"DG 整体系统: 维数 {rhs.size}, nnz {matrix.nnz}")
    try:
        x = scipy.sparse.linalg.splu(matrix.tocsc()).solve(rhs)
    except RuntimeError as e:
        raise SolverError("DG 整体矩阵奇异", details=str(e)) from e
    if not np.all(np.isfinite(x)):
        raise SolverError("DG 整体矩阵奇异")
    nv = flux_config.reference.n_volume
    x = x.reshape(mesh.n_elements, 3, nv)
    return PhysicalFields(p=x[:, 0], u=x[:, 1:])


class PhysicalResidual:
    """
    DG 整体系统在物理场上的相对残差 ‖F − A z‖ / ‖F‖

    杂交解恢复出的 (p_h, u_h) 代入同一通量族的整体系统；杂交系统精确求解时为零。
    """

    def __init__(self, mesh: Mesh, flux_config: FluxConfig, sources: Optional[Sources] = None):
        self.matrix, self.rhs = dg_matrix(mesh, flux_config, sources)
        self.rhs_norm = float(np.linalg.norm(self.rhs))

    def __call__(self, fields: PhysicalFields) -> float:
        z = np.concatenate([fields.p[:, None, :], fields.u], axis=1).ravel()
        residual = float(np.linalg.norm(self.rhs - self.matrix @ z))
        return residual / self.rhs_norm if self.rhs_norm > 0 else residual
