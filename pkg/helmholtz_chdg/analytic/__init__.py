"""
解析参考解与基准问题
"""

from helmholtz_chdg.analytic.bessel import bessel
from helmholtz_chdg.analytic.benchmarks import PRESETS, BenchmarkProblem, build_problem
from helmholtz_chdg.analytic.references import (
    AnalyticReference,
    CavityReference,
    PlaneWaveReference,
    boundary_data,
    cavity_reference,
    plane_wave_reference,
)

__all__ = [
    "AnalyticReference", "BenchmarkProblem", "CavityReference", "PRESETS",
    "PlaneWaveReference", "bessel", "boundary_data", "build_problem",
    "cavity_reference", "plane_wave_reference",
]
