"""
测试公共夹具
"""

import math

import pytest

from helmholtz_chdg.analytic.references import boundary_data, plane_wave_reference
from helmholtz_chdg.hybrid import Sources
from helmholtz_chdg.mesh import assign_coefficients
from helmholtz_chdg.models import RegionCoefficients
from helmholtz_chdg.reference import build_reference

OMEGA = 2.0 * math.pi
HOMOGENEOUS = {1: (OMEGA, 1.0, 1.0), 2: (OMEGA, 1.0, 1.0)}
HETEROGENEOUS = {1: (OMEGA, 1.0, 1.0), 2: (OMEGA, 0.5, 2.0)}


def plane_wave_problem(mesh, degree, rule=HETEROGENEOUS, theta=math.pi / 4):
    """带平面波边界数据的 (网格, 参考单元, 参考解, 源项)"""
    mesh = assign_coefficients(mesh, rule)
    ref = build_reference(degree)
    first, second = (RegionCoefficients(omega=w, c=c, rho=r) for w, c, r in (rule[1], rule[2]))
    reference = plane_wave_reference(first.kappa, second.kappa, first.eta, second.eta, theta)
    sources = Sources(boundary={f: boundary_data(reference, mesh, f, ref) for f in mesh.boundary_faces()})
    return mesh, ref, reference, sources


@pytest.fixture
def plane_wave():
    return plane_wave_problem


@pytest.fixture(autouse=True)
def isolated_environment(monkeypatch, tmp_path):
    """日志与输出都写到临时目录"""
    monkeypatch.setenv("HELMHOLTZ_LOG_FILE", str(tmp_path / "test.log"))
    monkeypatch.delenv("HELMHOLTZ_OUTPUT_DIR", raising=False)
    monkeypatch.delenv("HELMHOLTZ_DENSE_LIMIT", raising=False)
    monkeypatch.delenv("HELMHOLTZ_LOG_LEVEL", raising=False)
