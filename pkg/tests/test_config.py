"""
配置文件、覆盖项与预设
"""

import math

import pytest

from helmholtz_chdg.config import load_config, parse_overrides, resolve_config
from helmholtz_chdg.errors import ConfigError
from helmholtz_chdg.mesh import generate_unit_square, mesh_statistics
from helmholtz_chdg.models import Method, SolverKind


def test_preset_values_with_explicit_override():
    config = resolve_config({"preset": "plane_wave_homogeneous_2"})
    assert config.n == 50
    assert config.omega == pytest.approx(30 * math.pi)
    assert resolve_config({"preset": "plane_wave_homogeneous_2"}, {"n": "10"}).n == 10


@pytest.mark.parametrize("preset, h", [
    ("plane_wave_homogeneous_1", 1 / 16),
    ("plane_wave_homogeneous_2", 1 / 34),
    ("plane_wave_heterogeneous_1", 1 / 34),
])
def test_plane_wave_presets_respect_element_size(preset, h):
    mesh = generate_unit_square(resolve_config({"preset": preset}).n)
    assert mesh_statistics(mesh)["h_max"] <= h * (1 + 1e-12)


def test_later_layers_win():
    config = resolve_config({"degree": "2", "method": "hdg"}, {"degree": "4"})
    assert config.degree == 4
    assert config.method is Method.HDG


def test_keys_are_case_insensitive_and_none_clears():
    config = resolve_config({"Degree": "2", "restart": "none"})
    assert config.degree == 2
    assert config.restart is None


@pytest.mark.parametrize("layer, message", [
    ({"colour": "red"}, "未知的配置项: colour"),
    ({"preset": "unknown"}, "未知的预设"),
    ({"method": "hdg", "solver": "fixed_point"}, "配置无效"),
    ({"degree": "9"}, "配置无效"),
    ({"source_x": "0.2", "source_y": "0.3"}, "配置无效"),
])
def test_invalid_configuration(layer, message):
    with pytest.raises(ConfigError, match=message):
        resolve_config(layer)


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "case.cfg"
    path.write_text("# 对比实验\nmethod = hdg\nsolver=cgnr   # 法方程\ndegree = 3\n", encoding="utf-8")
    config = load_config(path, ["degree=2"], tol=1e-6, n=None)
    assert config.method is Method.HDG
    assert config.solver is SolverKind.CGNR
    assert config.degree == 2
    assert config.tol == 1e-6
    assert config.n == 16


def test_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.cfg")
    path = tmp_path / "broken.cfg"
    path.write_text("method\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(path)


def test_parse_overrides():
    assert parse_overrides([" degree = 2", "run_name=a=b"]) == {"degree": "2", "run_name": "a=b"}
    with pytest.raises(ConfigError):
        parse_overrides(["degree"])


def test_environment_defaults(monkeypatch, tmp_path):
    monkeypatch.setenv("HELMHOLTZ_DENSE_LIMIT", "123")
    monkeypatch.setenv("HELMHOLTZ_OUTPUT_DIR", str(tmp_path))
    config = resolve_config({})
    assert config.dense_limit == 123
    assert config.output_dir == str(tmp_path)
    assert resolve_config({"output_dir": "elsewhere"}).output_dir == "elsewhere"
