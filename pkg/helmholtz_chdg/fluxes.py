"""
面上的通量代数

传输变量、数值通量与边界闭合，全部以规范参数化的边基系数块表示。
两侧法向的符号由调用方在构造邻居一侧的 TraceState 时处理。
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from helmholtz_chdg.errors import FluxError
from helmholtz_chdg.mesh import Mesh
from helmholtz_chdg.models import BoundaryTag, FluxKind
from helmholtz_chdg.reference import FaceOperator, ReferenceElement, build_face_operator

logger = logging.getLogger(__name__)


class TraceState(NamedTuple):
    """单元 K 在面 F 上的迹：p_K|_F 与 n_{K,F}·u_K|_F"""
    p_trace: np.ndarray
    un_trace: np.ndarray


class FluxPair(NamedTuple):
    """数值通量 p̂_F 与 n_{K,F}·û_F"""
    p_hat: np.ndarray
    un_hat: np.ndarray


class SideCoefficients(NamedTuple):
    """从单元 K 一侧看到的阻抗 η_K 与 η_K′"""
    eta: float
    eta_neighbor: float


class FluxMaps(NamedTuple):
    """
    线性通量表示

    n·û = un_p·p + un_u·(n·u) + un_data·d，p̂ = p_p·p + p_u·(n·u) + p_data·d，
    其中 d 为局部问题的面数据（CHDG 为 g⊖，HDG 为 p̂）。
    """
    un_p: np.ndarray
    un_u: np.ndarray
    un_data: np.ndarray
    p_p: np.ndarray
    p_u: np.ndarray
    p_data: np.ndarray


@dataclass(frozen=True, eq=False)
class FluxConfig:
    """通量族与逐面的面算子"""
    kind: FluxKind
    reference: ReferenceElement
    operators: Tuple[FaceOperator, ...]

    def side(self, face_index: int, is_owner: bool) -> SideCoefficients:
        op = self.operators[face_index]
        if is_owner:
            return SideCoefficients(op.eta, op.eta_neighbor)
        return SideCoefficients(op.eta_neighbor, op.eta)


def build_flux_config(mesh: Mesh, reference: ReferenceElement, kind: FluxKind) -> FluxConfig:
    """
    为网格的每个面构造面算子

    边界面按约定取 η_K′ = η_K、κ_K′ = κ_K。
    """
    kind = FluxKind(kind)
    eta, kappa = mesh.eta, mesh.kappa
    operators = []
    for face in mesh.faces:
        k = face.owner[0]
        n = face.neighbor[0] if face.neighbor is not None else k
        operators.append(build_face_operator(
            kind, eta[k], eta[n], kappa[k], kappa[n], reference, face.length,
            robin=face.tag is BoundaryTag.ROBIN,
        ))
    return FluxConfig(kind=kind, reference=reference, operators=tuple(operators))


def _identity(op: FaceOperator) -> np.ndarray:
    return np.eye(op.size)


def outgoing_maps(op: FaceOperator, side: SideCoefficients) -> Tuple[np.ndarray, np.ndarray]:
    """g⊕ = Gp·p + Gu·(n·u) 的系数矩阵"""
    eye = _identity(op)
    if op.kind is FluxKind.UPWIND:
        return eye, side.eta * eye
    return op.admittance, eye


def characteristic_impedance(op: FaceOperator, side: SideCoefficients) -> np.ndarray:
    """p̂ + Z·n·û = p + Z·n·u 中的 Z：对称通量为 A，迎风通量为 η_K"""
    if op.kind is FluxKind.UPWIND:
        return side.eta * _identity(op)
    return op.impedance


def outgoing(trace: TraceState, side_coeffs: SideCoefficients, op: FaceOperator) -> np.ndarray:
    """
    出射传输变量

    迎风: g⊕ = p + η_K n·u；对称: g⊕ = A⁻¹p + n·u
    """
    gp, gu = outgoing_maps(op, side_coeffs)
    return gp @ trace.p_trace + gu @ trace.un_trace


def exchange_maps(tag: BoundaryTag, op: FaceOperator,
                  side: SideCoefficients) -> Tuple[np.ndarray, np.ndarray]:
    """
    边界面上 g⊖ = reflection·g⊕ + source·s 的两个矩阵

    Args:
        tag: Dirichlet、Neumann 或 Robin
    """
    tag = BoundaryTag(tag)
    eye = _identity(op)
    if tag is BoundaryTag.INTERIOR:
        raise FluxError("内部面没有边界闭合")
    if op.kind is FluxKind.UPWIND:
        if tag is BoundaryTag.DIRICHLET:
            return -eye, 2.0 * eye
        if tag is BoundaryTag.NEUMANN:
            return eye, -2.0 * side.eta * eye
        return np.zeros_like(eye), eye
    if tag is BoundaryTag.DIRICHLET:
        return -eye, 2.0 * op.admittance
    if tag is BoundaryTag.NEUMANN:
        return eye, -2.0 * eye
    if op.robin_reflection is None:
        raise FluxError("Robin 面缺少 B₊⁻¹B₋，面算子未按 Robin 构造")
    return op.robin_reflection, 2.0 / side.eta * op.robin_source


def incoming_boundary(g_plus: np.ndarray, tag: BoundaryTag, source_block: Optional[np.ndarray],
                      side_coeffs: SideCoefficients, op: FaceOperator) -> np.ndarray:
    """
    边界面的入射传输变量 g⊖

    Args:
        g_plus: 出射变量 g⊕
        tag: 边界类型，内部面报错
        source_block: 边界数据 s_D / s_N / s_R 的边基系数，None 视为 0
    """
    reflection, source = exchange_maps(tag, op, side_coeffs)
    g_minus = reflection @ g_plus
    if source_block is not None:
        g_minus = g_minus + source @ source_block
    return g_minus


def numerical_flux(g_plus: np.ndarray, g_minus: np.ndarray,
                   side_coeffs: SideCoefficients, op: FaceOperator) -> FluxPair:
    """由出射、入射传输变量得到 p̂ 与 n·û"""
    if op.kind is FluxKind.UPWIND:
        eta, eta_n = side_coeffs
        total = eta + eta_n
        return FluxPair(p_hat=(eta_n * g_plus + eta * g_minus) / total,
                        un_hat=(g_plus - g_minus) / total)
    return FluxPair(p_hat=0.5 * op.impedance @ (g_plus + g_minus),
                    un_hat=0.5 * (g_plus - g_minus))


def chdg_flux_maps(op: FaceOperator, side: SideCoefficients) -> FluxMaps:
    """以 g⊖ 为面数据的通量表示（CHDG 局部问题）"""
    eye = _identity(op)
    if op.kind is FluxKind.UPWIND:
        eta, eta_n = side
        inv = 1.0 / (eta + eta_n)
        return FluxMaps(un_p=inv * eye, un_u=eta * inv * eye, un_data=-inv * eye,
                        p_p=eta_n * inv * eye, p_u=eta * eta_n * inv * eye,
                        p_data=eta * inv * eye)
    a, a_inv = op.impedance, op.admittance
    return FluxMaps(un_p=0.5 * a_inv, un_u=0.5 * eye, un_data=-0.5 * eye,
                    p_p=0.5 * eye, p_u=0.5 * a, p_data=0.5 * a)


def hdg_flux_maps(op: FaceOperator, side: SideCoefficients) -> FluxMaps:
    """以 p̂ 为面数据的通量表示（HDG 局部问题）：n·û = n·u + Z⁻¹(p − p̂)"""
    eye = _identity(op)
    zero = np.zeros_like(eye)
    if op.kind is FluxKind.UPWIND:
        z_inv = eye / side.eta
    else:
        z_inv = op.admittance
    return FluxMaps(un_p=z_inv, un_u=eye, un_data=-z_inv,
                    p_p=zero, p_u=zero, p_data=eye)
