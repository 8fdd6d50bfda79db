"""
基准运行、扫描、谱诊断与命令行
"""

import csv
import json
import math

import numpy as np
import pytest

from helmholtz_chdg.cache import DiscretizationCache
from helmholtz_chdg.cli import main, parse_combo
from helmholtz_chdg.errors import ConfigError
from helmholtz_chdg.formats.coefficients import write_coefficients
from helmholtz_chdg.formats.msh import write_msh
from helmholtz_chdg.mesh import assign_coefficients, generate_unit_square
from helmholtz_chdg.models import RunConfig
from helmholtz_chdg.services import EXIT_DIVERGED, EXIT_ERROR, EXIT_OK, BenchmarkService

SMALL = {"benchmark": "plane_wave", "n": 2, "degree": 2, "omega": 2 * math.pi,
         "c2": 0.5, "rho2": 2.0, "tol": 1e-10}


def _config(tmp_path, **overrides):
    values = dict(SMALL, output_dir=str(tmp_path))
    values.update(overrides)
    return RunConfig(**values)


def _rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


def test_run_writes_history_and_summary(tmp_path):
    result = BenchmarkService().run(_config(tmp_path))
    assert result["success"]
    assert result["exit_code"] == EXIT_OK
    summary = result["summary"]
    assert summary.converged
    rows = _rows(result["history_path"])
    assert rows[0] == ["iteration", "residual", "error", "physical_residual"]
    assert len(rows) == summary.iterations + 2
    assert float(rows[1][1]) == 1.0
    stored = json.loads(open(result["summary_path"], encoding="utf-8").read())
    assert stored["config"]["method"] == "chdg"
    assert stored["iterations"] == summary.iterations
    assert stored["final_physical_residual"] < 1e-6
    assert rows[-1][3] != ""


def test_history_is_reproducible(tmp_path):
    first = BenchmarkService().run(_config(tmp_path, run_name="first"))
    second = BenchmarkService().run(_config(tmp_path, run_name="second"))
    assert open(first["history_path"], "rb").read() == open(second["history_path"], "rb").read()


def test_iterative_and_direct_errors_agree(tmp_path):
    service = BenchmarkService()
    iterative = service.solve(_config(tmp_path)).summary
    direct = service.solve(_config(tmp_path, solver="direct")).summary
    hdg = service.solve(_config(tmp_path, method="hdg", solver="direct")).summary
    dg = service.solve(_config(tmp_path, method="dg", solver="direct")).summary
    assert direct.final_residual < 1e-10
    assert direct.final_physical_residual < 1e-8
    assert dg.final_physical_residual < 1e-12
    assert iterative.final_error == pytest.approx(direct.final_error, rel=1e-5)
    assert hdg.final_error == pytest.approx(dg.final_error, rel=1e-6)
    assert direct.final_error == pytest.approx(dg.final_error, rel=1e-6)


def test_unconverged_run_exit_code(tmp_path):
    result = BenchmarkService().run(_config(tmp_path, solver="fixed_point", max_iter=3))
    assert result["success"]
    assert result["exit_code"] == EXIT_DIVERGED
    assert not result["summary"].converged
    assert len(_rows(result["history_path"])) == 5


def test_export_matrix(tmp_path):
    BenchmarkService().run(_config(tmp_path, solver="direct", export_matrix=True, run_name="m"))
    header = (tmp_path / "m_matrix.txt").read_text(encoding="utf-8").splitlines()[0]
    size = 3 * 8 * 3
    assert header.startswith(f"# {size} {size} ")


def test_sweep_table(tmp_path):
    service = BenchmarkService()
    configs = [_config(tmp_path, **parse_combo(combo))
               for combo in ("chdg-sym0-gmres", "chdg-sym0-cgnr", "hdg-sym2-gmres", "chdg-sym0-gmres")]
    result = service.sweep(configs, name="compare")
    assert result["success"]
    assert result["labels"] == ["chdg-sym0-gmres", "chdg-sym0-cgnr", "hdg-sym2-gmres", "chdg-sym0-gmres_2"]
    rows = _rows(result["table_path"])
    assert rows[0][0] == "iteration"
    assert rows[0][1:3] == ["chdg-sym0-gmres_residual", "chdg-sym0-gmres_error"]
    assert all(len(row) == 9 for row in rows)
    longest = max(s.iterations for s in result["summaries"])
    assert len(rows) == longest + 2
    assert service.cache.get_stats()["hits"] >= 2


def test_sweep_errors(tmp_path):
    service = BenchmarkService()
    assert service.sweep([])["exit_code"] == EXIT_ERROR
    mismatch = service.sweep([_config(tmp_path), _config(tmp_path, n=4)])
    assert not mismatch["success"]
    assert "n" in mismatch["error"].message


def test_spectra(tmp_path):
    result = BenchmarkService().spectra(_config(tmp_path, spectral="dense"))
    assert result["success"]
    assert 0.0 < result["report"].radius < 1.0


def test_run_reports_failures(tmp_path):
    result = BenchmarkService().run(_config(tmp_path, n=3))
    assert not result["success"]
    assert result["exit_code"] == EXIT_ERROR
    assert result["error"].error_code == 1100


def test_from_files_with_point_source(tmp_path):
    mesh = generate_unit_square(2)
    write_msh(mesh, tmp_path / "square.msh")
    write_coefficients(assign_coefficients(mesh, {1: (1.0, 1.0, 1.0), 2: (1.0, 0.5, 2.0)}),
                       tmp_path / "coefficients.txt")
    config = _config(tmp_path, benchmark="from_files", msh_path=str(tmp_path / "square.msh"),
                     coefficients_path=str(tmp_path / "coefficients.txt"),
                     source_x=0.3, source_y=0.4)
    result = BenchmarkService().run(config)
    assert result["success"]
    assert result["summary"].converged
    assert result["summary"].final_error < 1e-6


def test_cache_stats():
    cache = DiscretizationCache(max_size=2)
    mesh = generate_unit_square(2)
    assert cache.get(mesh, 1, "chdg", "sym0") is None
    cache.set(mesh, 1, "chdg", "sym0", "disc")
    assert cache.get(mesh, 1, "chdg", "sym0") == "disc"
    assert cache.get(mesh, 2, "chdg", "sym0") is None
    assert cache.get_stats() == {"current_size": 1, "max_size": 2, "hits": 1, "misses": 2}
    cache.clear()
    assert cache.get_stats()["current_size"] == 0


def test_cli_run_and_mesh_info(tmp_path, capsys):
    common = ["--n", "2", "--degree", "1", "--omega", "6.0", "--output-dir", str(tmp_path)]
    assert main(["run", *common, "--solver", "direct"]) == EXIT_OK
    assert "[SUCCESS]" in capsys.readouterr().out
    assert main(["mesh-info", "--benchmark", "cavity", "--h", "0.125"]) == EXIT_OK
    assert "n_elements" in capsys.readouterr().out


def test_cli_sweep(tmp_path):
    argv = ["sweep", "--n", "2", "--degree", "1", "--omega", "6.0", "--output-dir", str(tmp_path),
            "--combo", "chdg-sym0-gmres", "--combo", "hdg-upw-cgnr", "--name", "cmp"]
    assert main(argv) == EXIT_OK
    assert (tmp_path / "cmp.csv").is_file()


def test_cli_rejects_invalid_combination(tmp_path, capsys):
    argv = ["run", "--method", "hdg", "--solver", "fixed_point", "--output-dir", str(tmp_path)]
    assert main(argv) == EXIT_ERROR
    assert "[ERROR]" in capsys.readouterr().out
    with pytest.raises(ConfigError):
        parse_combo("chdg-sym0")


def test_cli_restart_flag(tmp_path):
    argv = ["run", "--n", "2", "--degree", "1", "--omega", "6.0", "--output-dir", str(tmp_path),
            "--restart", "--run-name", "restarted"]
    assert main(argv) == EXIT_OK
    summary = json.loads((tmp_path / "restarted_summary.json").read_text(encoding="utf-8"))
    assert summary["config"]["restart"] == 10
    assert np.isfinite(summary["final_residual"])


def test_service_status_reports_cache(tmp_path):
    service = BenchmarkService()
    service.run(_config(tmp_path, solver="direct"))
    status = service.get_service_status()
    assert status["status"] == "running"
    assert status["cache_stats"]["current_size"] == 1
