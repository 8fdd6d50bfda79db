"""
基准运行服务
"""

import csv
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

import numpy as np

from helmholtz_chdg.analytic.benchmarks import BenchmarkProblem, build_benchmark_mesh, build_problem
from helmholtz_chdg.cache import DiscretizationCache
from helmholtz_chdg.dg import PhysicalResidual, dg_oracle
from helmholtz_chdg.errors import ConfigError, HelmholtzError
from helmholtz_chdg.fields import PhysicalFields, relative_energy_error
from helmholtz_chdg.fluxes import build_flux_config
from helmholtz_chdg.formats.triplets import export_triplets
from helmholtz_chdg.hdg import HdgDiscretization
from helmholtz_chdg.hybrid import ChdgDiscretization, HybridSystem, block_diagonal, precondition
from helmholtz_chdg.mesh import mesh_statistics
from helmholtz_chdg.models import (
    ErrorResponse,
    Method,
    RunConfig,
    RunSummary,
    SolveReport,
    SolverKind,
    SpectralMode,
    SpectralReport,
)
from helmholtz_chdg.solvers import cgnr, fixed_point, gmres, track_error
from helmholtz_chdg.spectra import spectral_radius

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_DIVERGED = 2

_ITERATIVE = {
    SolverKind.FIXED_POINT: fixed_point,
    SolverKind.CGNR: cgnr,
}


def _number(value: Optional[float]) -> str:
    """CSV 数值：17 位有效数字，缺失为空"""
    return "" if value is None else f"{value:.17g}"


@dataclass
class RunResult:
    """一次运行的汇总与完整求解报告"""
    summary: RunSummary
    report: SolveReport
    fields: Optional[PhysicalFields] = None


class BenchmarkService:
    """基准运行、扫描与谱诊断"""

    def __init__(self, cache: Optional[DiscretizationCache] = None):
        self.cache = cache or DiscretizationCache()
        self.logger = logging.getLogger(__name__)

    def discretization(self, problem: BenchmarkProblem, method: Method):
        """取缓存的离散，缺失时组装"""
        config = problem.config
        cached = self.cache.get(problem.mesh, config.degree, method, config.flux)
        if cached is not None:
            return cached
        start = time.perf_counter()
        flux_config = build_flux_config(problem.mesh, problem.reference_element, config.flux)
        if method is Method.CHDG:
            disc = ChdgDiscretization(problem.mesh, flux_config)
        else:
            disc = HdgDiscretization(problem.mesh, flux_config)
        self.logger.info(f"{method.value} 离散组装用时 {time.perf_counter() - start:.2f}s")
        self.cache.set(problem.mesh, config.degree, method, config.flux, disc)
        return disc

    def _direct_residual(self, system: HybridSystem, x: np.ndarray) -> float:
        norm = np.linalg.norm(system.rhs)
        if norm == 0:
            return 0.0
        return float(np.linalg.norm(system.rhs - system.matrix @ x) / norm)

    def _error(self, problem: BenchmarkProblem, fields: PhysicalFields,
               reference: Optional[Union[PhysicalFields, Any]]) -> Optional[float]:
        if reference is None:
            return None
        return relative_energy_error(problem.mesh, problem.reference_element, fields, reference)

    def _solve_dg(self, problem: BenchmarkProblem, timings: Dict[str, float]):
        config = problem.config
        flux_config = build_flux_config(problem.mesh, problem.reference_element, config.flux)
        start = time.perf_counter()
        fields = dg_oracle(problem.mesh, flux_config, problem.sources)
        timings["solve"] = time.perf_counter() - start
        physical = PhysicalResidual(problem.mesh, flux_config, problem.sources)
        if config.export_matrix:
            export_triplets(physical.matrix, self._output_path(config, "matrix.txt"))
        error = self._error(problem, fields, problem.reference)
        residual = physical(fields)
        report = SolveReport(method="direct", residual_history=[residual], error_history=[error],
                             physical_residual_history=[residual], converged=True, timings=dict(timings))
        return report, fields, 3 * problem.mesh.n_elements * problem.reference_element.n_volume

    def _solve_hybrid(self, problem: BenchmarkProblem, timings: Dict[str, float]):
        config = problem.config
        start = time.perf_counter()
        disc = self.discretization(problem, config.method)
        system = disc.system(problem.sources)
        physical = PhysicalResidual(problem.mesh, disc.flux_config, problem.sources)
        timings["assembly"] = time.perf_counter() - start
        if config.export_matrix:
            export_triplets(system.matrix, self._output_path(config, "matrix.txt"))

        reference = problem.reference
        if config.solver is SolverKind.DIRECT:
            start = time.perf_counter()
            x = system.solve_direct()
            timings["solve"] = time.perf_counter() - start
            fields = system.reconstruct(x)
            error = self._error(problem, fields, reference)
            report = SolveReport(method="direct", residual_history=[self._direct_residual(system, x)],
                                 error_history=[error], physical_residual_history=[physical(fields)],
                                 converged=True, timings=dict(timings), solution=x)
            return report, fields, system.size

        if reference is None:
            self.logger.info("没有解析参考解，以直接求解结果作为误差参考")
            reference = system.reconstruct(system.solve_direct())
        pre = precondition(system)
        callback = None
        if config.error_every > 0:
            callback = track_error(pre.reconstruct, problem.mesh, problem.reference_element,
                                   reference, every=config.error_every, physical=physical)
        if config.solver is SolverKind.GMRES:
            report = gmres(pre.operator, pre.rhs, tol=config.tol, max_iter=config.max_iter,
                           restart=config.restart, callback=callback)
        else:
            solver = _ITERATIVE[config.solver]
            report = solver(pre.operator, pre.rhs, tol=config.tol, max_iter=config.max_iter, callback=callback)
        timings["solve"] = report.timings.get("solve", 0.0)
        report.timings = dict(timings)
        if callback is not None:
            report.physical_residual_history = callback.physical_residuals
        fields = pre.reconstruct(report.solution)
        return report, fields, system.size

    def _output_path(self, config: RunConfig, suffix: str) -> Path:
        directory = Path(config.output_dir)
        directory.mkdir(parents=True, exist_ok=True)
        return directory / f"{config.run_name or config.label}_{suffix}"

    def write_history(self, config: RunConfig, report: SolveReport) -> Path:
        """写出 iteration, residual, error, physical_residual 四列的历史 CSV"""
        path = self._output_path(config, "history.csv")
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["iteration", "residual", "error", "physical_residual"])
            physical = report.physical_residual_history
            for iteration, (residual, error) in enumerate(zip(report.residual_history, report.error_history)):
                value = physical[iteration] if iteration < len(physical) else None
                writer.writerow([iteration, _number(residual), _number(error), _number(value)])
        return path

    def write_summary(self, summary: RunSummary) -> Path:
        path = self._output_path(summary.config, "summary.json")
        path.write_text(json.dumps(summary.model_dump(mode="json"), ensure_ascii=False, indent=2),
                        encoding="utf-8")
        return path

    def solve(self, config: RunConfig, problem: Optional[BenchmarkProblem] = None) -> RunResult:
        """
        求解一个配置，不写文件

        Raises:
            HelmholtzError: 网格、系数、参考解或求解失败
        """
        timings: Dict[str, float] = {}
        start = time.perf_counter()
        problem = problem or build_problem(config)
        timings["setup"] = time.perf_counter() - start

        if config.method is Method.DG:
            report, fields, n_unknowns = self._solve_dg(problem, timings)
        else:
            report, fields, n_unknowns = self._solve_hybrid(problem, timings)

        spectral = None
        if config.spectral is not SpectralMode.NONE:
            start = time.perf_counter()
            spectral = self.spectral_report(problem)
            timings["spectral"] = time.perf_counter() - start

        iterative = config.solver is not SolverKind.DIRECT
        exit_code = EXIT_DIVERGED if iterative and not report.converged else EXIT_OK
        summary = RunSummary(
            config=config, success=True, exit_code=exit_code,
            iterations=report.iterations, converged=report.converged, diverged=report.diverged,
            final_residual=report.final_residual, final_error=report.final_error,
            final_physical_residual=report.final_physical_residual,
            spectral=spectral, timings=timings, n_elements=problem.mesh.n_elements,
            n_unknowns=n_unknowns,
        )
        return RunResult(summary=summary, report=report, fields=fields)

    def run(self, config: RunConfig) -> Dict[str, Any]:
        """
        运行一个基准配置并写出历史 CSV 与汇总 JSON

        Returns:
            dict: success、summary、history_path、exit_code；失败时含 error
        """
        self.logger.info(f"开始运行: {config.label}, benchmark={config.benchmark.value}")
        try:
            result = self.solve(config)
            history_path = self.write_history(config, result.report)
            summary = result.summary.model_copy(update={"history_path": str(history_path)})
            summary_path = self.write_summary(summary)
        except HelmholtzError as e:
            self.logger.error(f"运行失败: {e.message}")
            return self._failure(e)
        except OSError as e:
            self.logger.error(f"输出写入失败: {e}")
            return {"success": False, "exit_code": EXIT_ERROR,
                    "error": ErrorResponse(error_code=EXIT_ERROR, message="输出写入失败", details=str(e))}
        if summary.diverged:
            self.logger.warning(f"{config.label} 发散")
        return {"success": True, "summary": summary, "history_path": str(history_path),
                "summary_path": str(summary_path), "exit_code": summary.exit_code}

    def _failure(self, error: HelmholtzError) -> Dict[str, Any]:
        return {"success": False, "exit_code": EXIT_ERROR,
                "error": ErrorResponse(error_code=error.error_code, message=error.message, details=error.details)}

    def sweep(self, configs: Sequence[RunConfig], name: str = "sweep") -> Dict[str, Any]:
        """
        在同一问题上比较多个 (方法, 通量, 求解器) 组合

        Returns:
            dict: success、table_path、labels、summaries、exit_code
        """
        try:
            runs = self._sweep(configs)
            path = self._write_table(configs[0], name, runs)
        except HelmholtzError as e:
            self.logger.error(f"扫描失败: {e.message}")
            return self._failure(e)
        summaries = [result.summary for _, result in runs]
        exit_code = EXIT_DIVERGED if any(s.exit_code == EXIT_DIVERGED for s in summaries) else EXIT_OK
        return {"success": True, "table_path": str(path), "labels": [label for label, _ in runs],
                "summaries": summaries, "exit_code": exit_code}

    def _sweep(self, configs: Sequence[RunConfig]):
        if not configs:
            raise ConfigError("扫描的配置列表为空")
        signature = configs[0].problem_signature()
        for config in configs[1:]:
            mismatch = [key for key, value in config.problem_signature().items() if signature[key] != value]
            if mismatch:
                raise ConfigError(f"扫描配置的问题参数不一致: {mismatch[0]}")

        mesh = build_benchmark_mesh(configs[0])
        runs = []
        seen: Dict[str, int] = {}
        for config in configs:
            label = config.run_name or config.label
            seen[label] = seen.get(label, 0) + 1
            if seen[label] > 1:
                label = f"{label}_{seen[label]}"
            problem = build_problem(config, mesh)
            runs.append((label, self.solve(config, problem)))
            self.logger.info(f"扫描项完成: {label}")
        self.logger.info(f"扫描完成: {len(runs)} 个组合, 缓存 {self.cache.get_stats()}")
        return runs

    def _write_table(self, config: RunConfig, name: str, runs) -> Path:
        """对齐的 CSV：每个组合一对 residual/error 列"""
        directory = Path(config.output_dir)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{name}.csv"
        length = max(len(result.report.residual_history) for _, result in runs)
        header = ["iteration"]
        for label, _ in runs:
            header += [f"{label}_residual", f"{label}_error"]
        with path.open("w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for iteration in range(length):
                row = [iteration]
                for _, result in runs:
                    report = result.report
                    if iteration < len(report.residual_history):
                        row += [_number(report.residual_history[iteration]),
                                _number(report.error_history[iteration])]
                    else:
                        row += ["", ""]
                writer.writerow(row)
        self.logger.info(f"扫描表已写出: {path}")
        return path

    def spectral_report(self, problem: BenchmarkProblem) -> SpectralReport:
        """CHDG 迭代算子 ΠS 的谱半径"""
        config = problem.config
        if config.method is not Method.CHDG:
            raise ConfigError("谱半径只针对 chdg 方法")
        mode = config.spectral if config.spectral is not SpectralMode.NONE else SpectralMode.DENSE
        disc = self.discretization(problem, Method.CHDG)
        if mode is SpectralMode.DENSE:
            op = disc.pi @ block_diagonal(disc.transfers)
        else:
            op = disc.iteration_operator()
        return spectral_radius(op, mode=mode, dense_limit=config.dense_limit, seed=config.seed)

    def spectra(self, config: RunConfig) -> Dict[str, Any]:
        """
        只计算 ρ(ΠS)

        Returns:
            dict: success、report、exit_code
        """
        try:
            problem = build_problem(config)
            report = self.spectral_report(problem)
        except HelmholtzError as e:
            self.logger.error(f"谱半径计算失败: {e.message}")
            return self._failure(e)
        self.logger.info(f"ρ(ΠS) = {report.radius:.12g} ({report.mode.value})")
        return {"success": True, "report": report, "exit_code": EXIT_OK}

    def mesh_info(self, config: RunConfig) -> Dict[str, Any]:
        """网格诊断"""
        try:
            mesh = build_benchmark_mesh(config)
        except HelmholtzError as e:
            self.logger.error(f"网格生成失败: {e.message}")
            return self._failure(e)
        return {"success": True, "statistics": mesh_statistics(mesh), "exit_code": EXIT_OK}

    def get_service_status(self) -> dict:
        """获取服务状态信息"""
        return {"status": "running", "cache_stats": self.cache.get_stats()}
