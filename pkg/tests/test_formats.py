"""
MSH 网格、系数文件与矩阵三元组
"""

import logging

import numpy as np
import pytest
import scipy.sparse

from helmholtz_chdg.errors import CoefficientError, MshFormatError
from helmholtz_chdg.formats import export_triplets, ingest_coefficients, read_msh, write_msh
from helmholtz_chdg.formats.coefficients import write_coefficients
from helmholtz_chdg.formats.triplets import read_triplets
from helmholtz_chdg.mesh import assign_coefficients, generate_unit_square

SQUARE = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
5
1 15 2 0 0 1
2 1 2 1 1 1 2
3 1 2 2 2 2 3
4 2 2 1 1 1 2 3
5 2 2 2 2 1 4 3
$EndElements
"""


def test_msh_write_then_read(tmp_path):
    mesh = generate_unit_square(4, {"top": "dirichlet", "left": "neumann"})
    path = write_msh(mesh, tmp_path / "square.msh")
    loaded = read_msh(path)
    np.testing.assert_allclose(loaded.vertices, mesh.vertices)
    np.testing.assert_array_equal(loaded.triangles, mesh.triangles)
    np.testing.assert_array_equal(loaded.regions, mesh.regions)
    assert loaded.tag_counts() == mesh.tag_counts()


def test_read_handwritten_msh(tmp_path, caplog):
    path = tmp_path / "two.msh"
    path.write_text(SQUARE, encoding="utf-8")
    with caplog.at_level(logging.WARNING):
        mesh = read_msh(path)
    assert mesh.n_elements == 2
    assert np.all(mesh.areas > 0)
    assert mesh.tag_counts() == {"dirichlet": 1, "neumann": 1, "robin": 2, "interior": 1}
    assert list(mesh.regions) == [1, 2]
    assert "Robin" in caplog.text


@pytest.mark.parametrize("edit", [
    ("2.2 0 8", "4.1 0 8"),
    ("2.2 0 8", "2.2 1 8"),
    ("2 1 2 1 1 1 2", "2 1 2 7 7 1 2"),
    ("$Nodes\n4", "$Nodes\n5"),
    ("$EndElements\n", ""),
])
def test_malformed_msh(tmp_path, edit):
    path = tmp_path / "bad.msh"
    path.write_text(SQUARE.replace(*edit), encoding="utf-8")
    with pytest.raises(MshFormatError):
        read_msh(path)


def test_missing_msh_file(tmp_path):
    with pytest.raises(MshFormatError):
        read_msh(tmp_path / "absent.msh")


def test_coefficients_file_matches_region_rule(tmp_path):
    mesh = generate_unit_square(2)
    expected = assign_coefficients(mesh, {1: (3.0, 1.0, 1.0), 2: (3.0, 0.5, 2.0)})
    path = write_coefficients(expected, tmp_path / "coefficients.txt")
    loaded = ingest_coefficients(mesh, path, 3.0)
    np.testing.assert_allclose(loaded.kappa, expected.kappa)
    np.testing.assert_allclose(loaded.eta, expected.eta)


FULL = "".join(f"{k} 1 1\n" for k in range(8))


@pytest.mark.parametrize("body, message", [
    (FULL.replace("7 1 1\n", ""), "缺少单元 7"),
    (FULL.replace("3 1 1", "3 0 1"), "非正"),
    (FULL + "9 1 1\n", "越界"),
    ("0 1\n", "格式错误"),
])
def test_bad_coefficients(tmp_path, body, message):
    path = tmp_path / "coefficients.txt"
    path.write_text("# element c rho\n" + body, encoding="utf-8")
    with pytest.raises(CoefficientError, match=message):
        ingest_coefficients(generate_unit_square(2), path, 1.0)


def test_triplets(tmp_path):
    matrix = scipy.sparse.random(12, 9, density=0.3, random_state=0, format="csr")
    matrix = matrix + 1j * scipy.sparse.random(12, 9, density=0.3, random_state=1, format="csr")
    path = export_triplets(matrix, tmp_path / "matrix.txt")
    assert path.read_text(encoding="utf-8").splitlines()[0].startswith("# 12 9 ")
    loaded = read_triplets(path)
    assert loaded.shape == (12, 9)
    assert abs(loaded - matrix).max() == 0.0
