"""
Bessel 函数、解析参考解与边界数据
"""

import math

import numpy as np
import pytest
import scipy.special

from helmholtz_chdg.analytic import bessel
from helmholtz_chdg.analytic.bessel import j0, j1, y0, y1
from helmholtz_chdg.analytic.references import boundary_data, cavity_reference, plane_wave_reference
from helmholtz_chdg.errors import DomainError, EvanescentError, ResonanceError
from helmholtz_chdg.mesh import assign_coefficients, generate_disk, generate_unit_square
from helmholtz_chdg.reference import build_reference

X = np.logspace(-3, 2, 400)


@pytest.mark.parametrize("ours, theirs", [(j0, scipy.special.j0), (j1, scipy.special.j1),
                                          (y0, scipy.special.y0), (y1, scipy.special.y1)])
def test_bessel_against_scipy(ours, theirs):
    np.testing.assert_allclose(ours(X), theirs(X), rtol=1e-11, atol=1e-12)


def test_bessel_special_values():
    assert j0(0.0) == 1.0
    assert j1(0.0) == 0.0
    assert abs(j0(2.404825557695773)) < 1e-14
    assert isinstance(j0(1.0), float)
    assert j1(-1.5) == pytest.approx(-j1(1.5), rel=1e-14)


def test_bessel_wronskian():
    wronskian = j0(X) * y1(X) - j1(X) * y0(X)
    np.testing.assert_allclose(wronskian, -2.0 / (math.pi * X), rtol=1e-10)


def test_bessel_domain():
    with pytest.raises(DomainError):
        y0(0.0)
    with pytest.raises(DomainError):
        y1(np.array([1.0, -2.0]))
    with pytest.raises(ValueError):
        bessel("K", 0, 1.0)


def test_plane_wave_homogeneous_has_no_reflection():
    reference = plane_wave_reference(5.0, 5.0, 1.0, 1.0)
    assert abs(reference.reflection) < 1e-15
    assert reference.transmission == pytest.approx(1.0, abs=1e-15)
    points = np.array([[0.2, 0.7], [0.9, 0.1]])
    expected = np.exp(1j * 5.0 * (points @ [math.cos(math.pi / 4), math.sin(math.pi / 4)]))
    np.testing.assert_allclose(reference.pressure(points), expected, atol=1e-14)


def test_plane_wave_interface_continuity():
    reference = plane_wave_reference(15 * math.pi, 30 * math.pi, 1.0, 1.0)
    y = np.linspace(0.0, 1.0, 11)
    points = np.column_stack([np.full_like(y, 0.5), y])
    left, right = np.ones(11, dtype=int), np.full(11, 2)
    np.testing.assert_allclose(reference.pressure(points, left), reference.pressure(points, right), atol=1e-12)
    np.testing.assert_allclose(reference.velocity(points, left)[:, 0], reference.velocity(points, right)[:, 0],
                               atol=1e-12)


@pytest.mark.parametrize("region, point", [(1, (0.21, 0.33)), (2, (0.77, 0.45))])
def test_plane_wave_velocity_is_scaled_gradient(region, point):
    kappa1, kappa2, eta1, eta2 = 15 * math.pi, 30 * math.pi, 1.0, 2.0
    reference = plane_wave_reference(kappa1, kappa2, eta1, eta2)
    kappa, eta = (kappa1, eta1) if region == 1 else (kappa2, eta2)
    step = 1e-6
    x = np.array([point])
    regions = np.array([region])
    gradient = np.array([
        (reference.pressure(x + [step, 0.0], regions) - reference.pressure(x - [step, 0.0], regions)) / (2 * step),
        (reference.pressure(x + [0.0, step], regions) - reference.pressure(x - [0.0, step], regions)) / (2 * step),
    ]).ravel()
    np.testing.assert_allclose(1j * kappa * eta * reference.velocity(x, regions)[0], gradient, atol=1e-5 * kappa)


def test_plane_wave_total_reflection():
    with pytest.raises(EvanescentError):
        plane_wave_reference(30 * math.pi, 15 * math.pi, 1.0, 1.0)


def test_cavity_boundary_and_interface():
    reference = cavity_reference(10 * math.pi, 15 * math.pi, 1.0, 1.0)
    assert reference.radial(0.5, 2)[0] == pytest.approx(0.0, abs=1e-10)
    p1, dp1 = reference.radial(0.25, 1)
    p2, dp2 = reference.radial(0.25, 2)
    assert p1 == pytest.approx(p2, abs=1e-10)
    assert dp1 / (reference.kappa1 * reference.eta1) == pytest.approx(
        dp2 / (reference.kappa2 * reference.eta2), abs=1e-10)


@pytest.mark.parametrize("region, radius", [(1, 0.13), (2, 0.41)])
def test_cavity_satisfies_radial_equation(region, radius):
    reference = cavity_reference(16.5, 16.5 * 1.5, 1.0, 1.0)
    kappa = reference.kappa1 if region == 1 else reference.kappa2
    step = 1e-5
    p, dp = reference.radial(radius, region)
    d2p = (reference.radial(radius + step, region)[1] - reference.radial(radius - step, region)[1]) / (2 * step)
    assert d2p + dp / radius + kappa ** 2 * p == pytest.approx(-1.0, abs=1e-5 * kappa ** 2)


def test_cavity_homogeneous_has_no_second_kind():
    reference = cavity_reference(16.5, 16.5, 1.0, 1.0)
    assert abs(reference.b2) < 1e-10


def test_cavity_resonance():
    with pytest.raises(ResonanceError):
        cavity_reference(2 * 8.653727912911013, 2 * 8.653727912911013, 1.0, 1.0)


def test_cavity_boundary_data_is_zero():
    mesh = assign_coefficients(generate_disk(0.125), {1: (5.0, 1.0, 1.0), 2: (5.0, 1.0, 1.0)})
    reference = cavity_reference(5.0, 5.0, 1.0, 1.0)
    ref = build_reference(2)
    for face in mesh.boundary_faces()[:5]:
        assert not np.any(boundary_data(reference, mesh, face, ref))


def test_boundary_data_projection():
    mesh = assign_coefficients(generate_unit_square(4), {1: (5.0, 1.0, 1.0), 2: (5.0, 1.0, 1.0)})
    reference = plane_wave_reference(5.0, 5.0, 1.0, 1.0)
    ref = build_reference(2)
    for face in mesh.boundary_faces():
        coarse = boundary_data(reference, mesh, face, ref)
        fine = boundary_data(reference, mesh, face, ref, n_points=30)
        np.testing.assert_allclose(coarse, fine, atol=1e-12)


def test_tangential_incidence_has_no_normal_velocity():
    mesh = assign_coefficients(generate_unit_square(2), {1: (5.0, 1.0, 1.0), 2: (5.0, 1.0, 1.0)})
    reference = plane_wave_reference(5.0, 5.0, 1.0, 1.0, theta_i=math.pi / 2)
    ref = build_reference(1)
    left = [f for f in mesh.boundary_faces() if mesh.faces[f].normal[0] < -0.5]
    for face in left:
        np.testing.assert_allclose(boundary_data(reference, mesh, face, ref, tag="neumann"), 0.0, atol=1e-14)
