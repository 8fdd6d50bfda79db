"""
时谐声学的 DG、HDG 与 CHDG 离散及迭代求解
"""

from helmholtz_chdg.analytic import bessel, boundary_data, cavity_reference, plane_wave_reference
from helmholtz_chdg.dg import dg_oracle
from helmholtz_chdg.fluxes import build_flux_config, incoming_boundary, numerical_flux, outgoing
from helmholtz_chdg.formats import export_triplets, ingest_coefficients, read_msh, write_msh
from helmholtz_chdg.hdg import hdg_system
from helmholtz_chdg.hybrid import chdg_operator, exchange, precondition, reconstruct_fields
from helmholtz_chdg.local import (
    assemble_chdg_local,
    assemble_hdg_local,
    assemble_volume_forms,
    local_scatter,
)
from helmholtz_chdg.mesh import assign_coefficients, generate_disk, generate_rectangle, generate_unit_square
from helmholtz_chdg.reference import build_face_operator, build_reference
from helmholtz_chdg.services import BenchmarkService
from helmholtz_chdg.solvers import cgnr, fixed_point, gmres, track_error
from helmholtz_chdg.spectra import spectral_radius

__version__ = "1.0.0"


def run(config):
    """运行一个基准配置，写出历史 CSV 与汇总"""
    return BenchmarkService().run(config)


def sweep(configs, name: str = "sweep"):
    """同一问题上比较多个 (方法, 通量, 求解器) 组合"""
    return BenchmarkService().sweep(configs, name=name)


def spectra(config):
    """CHDG 迭代算子的谱半径报告"""
    return BenchmarkService().spectra(config)


__all__ = [
    "assemble_chdg_local", "assemble_hdg_local", "assemble_volume_forms", "assign_coefficients",
    "bessel", "boundary_data", "build_face_operator", "build_flux_config", "build_reference",
    "cavity_reference", "cgnr", "chdg_operator", "dg_oracle", "exchange", "export_triplets",
    "fixed_point", "generate_disk", "generate_rectangle", "generate_unit_square", "gmres",
    "hdg_system", "incoming_boundary", "ingest_coefficients", "local_scatter", "numerical_flux",
    "outgoing", "plane_wave_reference", "precondition", "read_msh", "reconstruct_fields",
    "run", "spectra", "spectral_radius", "sweep", "track_error", "write_msh",
]
