"""
网格生成、连接关系与系数
"""

import math

import numpy as np
import pytest

from helmholtz_chdg.errors import CoefficientError, MeshError
from helmholtz_chdg.mesh import (
    assign_coefficients,
    build_mesh,
    generate_disk,
    generate_rectangle,
    generate_unit_square,
    mesh_statistics,
    square_subdivisions,
)
from helmholtz_chdg.models import BoundaryTag


def test_unit_square_counts():
    mesh = generate_unit_square(4)
    stats = mesh_statistics(mesh)
    assert stats["n_vertices"] == 25
    assert stats["n_elements"] == 32
    assert stats["n_faces"] == 56
    assert stats["n_boundary_faces"] == 16
    assert stats["regions"] == {1: 16, 2: 16}
    assert stats["area"] == pytest.approx(1.0)
    assert mesh.tag_counts() == {"interior": 40, "robin": 16}


def test_unit_square_rejects_odd_n():
    with pytest.raises(MeshError):
        generate_unit_square(3)


@pytest.mark.parametrize("h, n", [(1 / 16, 24), (1 / 34, 50), (0.5, 4), (math.sqrt(2) / 8, 8)])
def test_square_subdivisions_bound_longest_edge(h, n):
    assert square_subdivisions(h) == n
    assert math.sqrt(2) / n <= h * (1 + 1e-12)


def test_square_subdivisions_rejects_nonpositive():
    with pytest.raises(MeshError):
        square_subdivisions(0.0)


def test_face_orientation_and_normals():
    mesh = generate_unit_square(2)
    for face in mesh.faces:
        assert np.linalg.norm(face.normal) == pytest.approx(1.0)
        k, i = face.owner
        midpoint = mesh.vertices[list(face.vertices)].mean(axis=0)
        centroid = mesh.vertices[mesh.triangles[k]].mean(axis=0)
        assert face.normal @ (midpoint - centroid) > 0
        if face.is_interior:
            m, j = face.neighbor
            assert mesh.face_flipped[k, i] != mesh.face_flipped[m, j]
            np.testing.assert_allclose(face.normal_for(m), -face.normal)


def test_rectangle_side_tags():
    mesh = generate_rectangle(2, 3, tags={"top": "dirichlet", "left": BoundaryTag.NEUMANN})
    counts = mesh.tag_counts()
    assert counts["dirichlet"] == 2
    assert counts["neumann"] == 3
    assert counts["robin"] == 5
    for index in mesh.boundary_faces():
        face = mesh.faces[index]
        if face.tag is BoundaryTag.DIRICHLET:
            np.testing.assert_allclose(face.normal, [0.0, 1.0], atol=1e-14)


def test_rectangle_rejects_unknown_side():
    with pytest.raises(MeshError):
        generate_rectangle(2, 2, tags={"front": "robin"})


@pytest.mark.parametrize("h", [0.1, 0.05])
def test_disk(h):
    mesh = generate_disk(h)
    stats = mesh_statistics(mesh)
    assert set(mesh.tag_counts()) == {"interior", "dirichlet"}
    assert 0.95 * math.pi / 4 < stats["area"] < math.pi / 4
    assert stats["h_max"] <= 1.5 * h
    centroids = mesh.vertices[mesh.triangles].mean(axis=1)
    radius = np.hypot(centroids[:, 0], centroids[:, 1])
    assert np.all(radius[mesh.regions == 1] < 0.25)
    assert set(np.unique(mesh.regions)) == {1, 2}


def test_disk_rejects_bad_radii():
    with pytest.raises(MeshError):
        generate_disk(0.1, R1=0.5, R2=0.25)


def test_locate():
    mesh = generate_unit_square(4)
    element = mesh.locate((0.3, 0.4))
    x = mesh.vertices[mesh.triangles[element]]
    assert x[:, 0].min() <= 0.3 <= x[:, 0].max()
    assert x[:, 1].min() <= 0.4 <= x[:, 1].max()
    with pytest.raises(MeshError):
        mesh.locate((1.5, 0.5))


def test_assign_coefficients():
    mesh = assign_coefficients(generate_unit_square(2), {1: (2.0, 1.0, 1.0), 2: (2.0, 0.5, 3.0)})
    assert np.all(mesh.kappa[mesh.regions == 2] == pytest.approx(4.0))
    assert np.all(mesh.eta[mesh.regions == 2] == pytest.approx(1.5))
    assert np.all(mesh.kappa[mesh.regions == 1] == pytest.approx(2.0))


def test_assign_coefficients_errors():
    mesh = generate_unit_square(2)
    with pytest.raises(CoefficientError):
        assign_coefficients(mesh, {1: (1.0, 1.0, 1.0)})
    with pytest.raises(CoefficientError):
        assign_coefficients(mesh, {1: (1.0, 1.0, 1.0), 2: (1.0, -1.0, 1.0)})


def test_fingerprint_tracks_coefficients():
    mesh = generate_unit_square(2)
    other = assign_coefficients(mesh, {1: (1.0, 1.0, 1.0), 2: (1.0, 2.0, 1.0)})
    assert mesh.fingerprint() != other.fingerprint()
    assert mesh.fingerprint() == generate_unit_square(2).fingerprint()


def test_clockwise_triangle_is_rejected():
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    with pytest.raises(MeshError):
        build_mesh(vertices, np.array([[0, 2, 1]]))


def test_edge_shared_by_three_triangles():
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0], [0.5, 2.0]])
    triangles = np.array([[0, 1, 2], [1, 0, 3], [0, 1, 4]])
    with pytest.raises(MeshError):
        build_mesh(vertices, triangles)


def test_hanging_vertex_is_rejected():
    vertices = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]])
    triangles = np.array([[0, 1, 2], [1, 3, 4], [4, 3, 2]])
    with pytest.raises(MeshError):
        build_mesh(vertices, triangles)
