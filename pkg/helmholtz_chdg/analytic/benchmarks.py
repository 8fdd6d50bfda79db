"""
基准问题：预设参数、网格、参考解与源项
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

from helmholtz_chdg.analytic.references import (
    AnalyticReference,
    boundary_data,
    cavity_reference,
    plane_wave_reference,
)
from helmholtz_chdg.errors import ConfigError
from helmholtz_chdg.formats.coefficients import ingest_coefficients
from helmholtz_chdg.formats.msh import read_msh
from helmholtz_chdg.hybrid import Sources
from helmholtz_chdg.local import constant_source_loads, point_source_loads
from helmholtz_chdg.mesh import (
    Mesh,
    assign_coefficients,
    generate_disk,
    generate_unit_square,
    square_subdivisions,
)
from helmholtz_chdg.models import Benchmark, BoundaryTag, RunConfig
from helmholtz_chdg.reference import ReferenceElement, build_reference

logger = logging.getLogger(__name__)

PRESETS: Dict[str, Dict[str, Any]] = {
    "plane_wave_homogeneous_1": {
        "benchmark": "plane_wave", "omega": 15 * math.pi, "n": square_subdivisions(1 / 16),
        "c1": 1.0, "rho1": 1.0, "c2": 1.0, "rho2": 1.0,
    },
    "plane_wave_homogeneous_2": {
        "benchmark": "plane_wave", "omega": 30 * math.pi, "n": square_subdivisions(1 / 34),
        "c1": 1.0, "rho1": 1.0, "c2": 1.0, "rho2": 1.0,
    },
    "plane_wave_heterogeneous_1": {
        "benchmark": "plane_wave", "omega": 15 * math.pi, "n": square_subdivisions(1 / 34),
        "c1": 1.0, "rho1": 1.0, "c2": 0.5, "rho2": 2.0,
    },
    "plane_wave_heterogeneous_2": {
        "benchmark": "plane_wave", "omega": 15 * math.pi, "n": square_subdivisions(1 / 34),
        "c1": 1.0, "rho1": 1.0, "c2": 0.5, "rho2": 1.0,
    },
    "cavity_homogeneous_1": {
        "benchmark": "cavity", "omega": 16.5, "h": 0.04,
        "c1": 1.0, "rho1": 1.0, "c2": 1.0, "rho2": 1.0,
    },
    "cavity_homogeneous_2": {
        "benchmark": "cavity", "omega": 17.0, "h": 0.025,
        "c1": 1.0, "rho1": 1.0, "c2": 1.0, "rho2": 1.0,
    },
    "cavity_heterogeneous_1": {
        "benchmark": "cavity", "omega": 10 * math.pi, "h": 1 / 12, "h_outer": 1 / 16,
        "c1": 1.0, "rho1": 1.0, "c2": 2 / 3, "rho2": 1.5,
    },
    "cavity_heterogeneous_2": {
        "benchmark": "cavity", "omega": 10 * math.pi, "h": 1 / 12, "h_outer": 1 / 16,
        "c1": 1.0, "rho1": 1.0, "c2": 2 / 3, "rho2": 1.0,
    },
}


def preset_values(name: str) -> Dict[str, Any]:
    """返回预设参数组的副本"""
    try:
        return dict(PRESETS[name])
    except KeyError:
        raise ConfigError(f"未知的预设: {name}", details=f"可用预设: {', '.join(sorted(PRESETS))}") from None


@dataclass(frozen=True, eq=False)
class BenchmarkProblem:
    """一次运行所需的网格、参考单元、参考解与源项"""
    config: RunConfig
    mesh: Mesh
    reference_element: ReferenceElement
    reference: Optional[AnalyticReference]
    sources: Sources


def build_benchmark_mesh(config: RunConfig) -> Mesh:
    """按配置生成或读取网格并赋系数"""
    if config.benchmark is Benchmark.PLANE_WAVE:
        mesh = generate_unit_square(config.n, BoundaryTag.ROBIN)
    elif config.benchmark is Benchmark.CAVITY:
        mesh = generate_disk(config.h, h_outer=config.h_outer, tag=BoundaryTag.DIRICHLET)
    else:
        mesh = read_msh(config.msh_path)
        if config.coefficients_path:
            return ingest_coefficients(mesh, config.coefficients_path, config.omega)
    return assign_coefficients(mesh, config.region_coefficients())


def benchmark_reference(config: RunConfig) -> Optional[AnalyticReference]:
    """
    基准的解析参考解；from_files 没有解析解，返回 None

    Raises:
        EvanescentError: 平面波全反射
        ResonanceError: 腔体接近共振
    """
    regions = config.region_coefficients()
    first, second = regions[1], regions[2]
    if config.benchmark is Benchmark.PLANE_WAVE:
        return plane_wave_reference(first.kappa, second.kappa, first.eta, second.eta, config.theta)
    if config.benchmark is Benchmark.CAVITY:
        return cavity_reference(first.kappa, second.kappa, first.eta, second.eta)
    return None


def build_sources(config: RunConfig, mesh: Mesh, ref: ReferenceElement,
                  reference: Optional[AnalyticReference]) -> Sources:
    """边界数据的投影与体源载荷"""
    boundary = {}
    if reference is not None:
        boundary = {face: boundary_data(reference, mesh, face, ref) for face in mesh.boundary_faces()}
    volume = None
    if config.benchmark is Benchmark.CAVITY:
        volume = constant_source_loads(mesh, ref, reference.source(mesh.kappa, mesh.eta))
    elif config.has_point_source:
        volume = point_source_loads(mesh, ref, (config.source_x, config.source_y))
    return Sources(boundary=boundary, volume=volume)


def build_problem(config: RunConfig, mesh: Optional[Mesh] = None) -> BenchmarkProblem:
    """
    组装基准问题

    Args:
        config: 运行配置
        mesh: 已生成的网格，缺省按配置生成
    """
    mesh = mesh if mesh is not None else build_benchmark_mesh(config)
    ref = build_reference(config.degree)
    reference = benchmark_reference(config)
    sources = build_sources(config, mesh, ref, reference)
    logger.info(f"基准问题就绪: {config.benchmark.value}, 单元数 {mesh.n_elements}, p={config.degree}")
    return BenchmarkProblem(config=config, mesh=mesh, reference_element=ref,
                            reference=reference, sources=sources)
