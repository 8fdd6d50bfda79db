"""
命令行入口

    python -m helmholtz_chdg run -c case.cfg --method chdg --flux sym0 --solver gmres
    python -m helmholtz_chdg sweep --preset plane_wave_homogeneous_1 --combo chdg-sym0-gmres --combo hdg-sym0-gmres
    python -m helmholtz_chdg spectra --preset cavity_homogeneous_1 --degree 2
    python -m helmholtz_chdg mesh-info --benchmark cavity --h 0.04
"""

import argparse
import json
import logging
from typing import Any, Dict, List, Optional, Sequence

from dotenv import load_dotenv

from helmholtz_chdg.config import load_config, setup_logging
from helmholtz_chdg.errors import ConfigError
from helmholtz_chdg.models import ErrorResponse, RunConfig
from helmholtz_chdg.services import EXIT_ERROR, BenchmarkService

logger = logging.getLogger(__name__)

DEFAULT_RESTART = 10

# 命令行参数名 -> RunConfig 字段
_OPTION_FIELDS = {
    "preset": "preset", "benchmark": "benchmark", "method": "method", "flux": "flux",
    "solver": "solver", "degree": "degree", "n": "n", "h": "h", "h_outer": "h_outer",
    "msh": "msh_path", "coefficients": "coefficients_path", "omega": "omega",
    "tol": "tol", "max_iter": "max_iter", "restart": "restart", "error_every": "error_every",
    "spectral": "spectral", "dense_limit": "dense_limit", "export_matrix": "export_matrix",
    "output_dir": "output_dir", "run_name": "run_name", "seed": "seed",
}


def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-c", "--config", help="扁平 key = value 配置文件")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="覆盖任意配置项，可重复")
    parser.add_argument("--preset", help="预设参数组，例如 plane_wave_homogeneous_1")
    parser.add_argument("--benchmark", choices=["plane_wave", "cavity", "from_files"])
    parser.add_argument("--method", choices=["dg", "hdg", "chdg"])
    parser.add_argument("--flux", choices=["upw", "sym0", "sym2"])
    parser.add_argument("--solver", choices=["direct", "fixed_point", "cgnr", "gmres"])
    parser.add_argument("--degree", type=int, help="多项式阶数 p")
    parser.add_argument("--n", type=int, help="正方形网格每边剖分数")
    parser.add_argument("--h", type=float, help="圆盘网格单元尺寸")
    parser.add_argument("--h-outer", type=float, help="圆盘外环单元尺寸")
    parser.add_argument("--msh", help="MSH 2.2 网格文件")
    parser.add_argument("--coefficients", help="逐单元系数文件")
    parser.add_argument("--omega", type=float, help="角频率")
    parser.add_argument("--tol", type=float, help="相对残差阈值")
    parser.add_argument("--max-iter", type=int, help="最大迭代次数")
    parser.add_argument("--restart", type=int, nargs="?", const=DEFAULT_RESTART,
                        help=f"启用 GMRES 重启，缺省长度 {DEFAULT_RESTART}")
    parser.add_argument("--error-every", type=int, help="误差记录间隔")
    parser.add_argument("--spectral", choices=["none", "dense", "power"])
    parser.add_argument("--dense-limit", type=int, help="稠密特征值维数上限")
    parser.add_argument("--export-matrix", action="store_true", default=None, help="导出矩阵三元组")
    parser.add_argument("--output-dir", help="输出目录")
    parser.add_argument("--run-name", help="输出文件名前缀")
    parser.add_argument("--seed", type=int, help="随机种子")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="helmholtz_chdg", description="时谐声学 DG/HDG/CHDG 基准求解")
    parser.add_argument("--log-level", help="日志级别，缺省取 HELMHOLTZ_LOG_LEVEL")
    parser.add_argument("--log-file", help="日志文件，缺省取 HELMHOLTZ_LOG_FILE")
    verbs = parser.add_subparsers(dest="verb", required=True)

    run = verbs.add_parser("run", help="运行一个配置，写出历史 CSV 与汇总")
    _add_config_arguments(run)

    sweep = verbs.add_parser("sweep", help="同一问题上比较多个组合")
    _add_config_arguments(sweep)
    sweep.add_argument("--combo", action="append", default=[], metavar="METHOD-FLUX-SOLVER",
                       help="例如 chdg-sym0-gmres，可重复")
    sweep.add_argument("--run-config", action="append", default=[], metavar="FILE",
                       help="额外的完整配置文件，可重复")
    sweep.add_argument("--name", default="sweep", help="对比表文件名")

    spectra = verbs.add_parser("spectra", help="计算 ρ(ΠS)")
    _add_config_arguments(spectra)

    info = verbs.add_parser("mesh-info", help="网格诊断")
    _add_config_arguments(info)
    return parser


def _options(args: argparse.Namespace) -> Dict[str, Any]:
    return {field: getattr(args, option) for option, field in _OPTION_FIELDS.items()}


def _config(args: argparse.Namespace, path: Optional[str] = None, **extra: Any) -> RunConfig:
    options = _options(args)
    options.update(extra)
    return load_config(path if path is not None else args.config, args.set, **options)


def parse_combo(text: str) -> Dict[str, str]:
    """`method-flux-solver` -> 配置字段"""
    parts = text.split("-")
    if len(parts) != 3:
        raise ConfigError(f"组合格式应为 method-flux-solver: {text!r}")
    return dict(zip(("method", "flux", "solver"), parts))


def sweep_configs(args: argparse.Namespace) -> List[RunConfig]:
    configs = [_config(args, path=path) for path in args.run_config]
    configs += [_config(args, **parse_combo(combo)) for combo in args.combo]
    return configs


def _print(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, ensure_ascii=False, indent=2))


def _report(result: Dict[str, Any]) -> int:
    if not result["success"]:
        error: ErrorResponse = result["error"]
        print(f"[ERROR] 错误: {error.message}")
        _print(error.model_dump())
        return result["exit_code"]

    if "summary" in result:
        summary = result["summary"]
        status = "收敛" if summary.converged else ("发散" if summary.diverged else "未收敛")
        print(f"[SUCCESS] {summary.config.label}: {status}, 迭代 {summary.iterations}, "
              f"误差 {summary.final_error}")
        print(f"[FILE] 历史: {result['history_path']}  汇总: {result['summary_path']}")
    elif "table_path" in result:
        print(f"[SUCCESS] 扫描完成: {', '.join(result['labels'])}")
        print(f"[FILE] 对比表: {result['table_path']}")
        _print({s.config.run_name or s.config.label: {"iterations": s.iterations, "converged": s.converged,
                                                      "diverged": s.diverged, "final_error": s.final_error}
                for s in result["summaries"]})
    elif "report" in result:
        report = result["report"]
        print(f"[SUCCESS] ρ(ΠS) = {report.radius:.12g}")
        _print(report.model_dump(mode="json"))
    else:
        _print(result["statistics"])
    return result["exit_code"]


def main(argv: Optional[Sequence[str]] = None) -> int:
    """命令行入口函数，返回进程退出码"""
    load_dotenv()
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level, args.log_file)
    service = BenchmarkService()

    try:
        if args.verb == "sweep":
            result = service.sweep(sweep_configs(args), name=args.name)
        else:
            config = _config(args)
            if args.verb == "run":
                result = service.run(config)
            elif args.verb == "spectra":
                result = service.spectra(config)
            else:
                result = service.mesh_info(config)
    except ConfigError as e:
        logger.error(f"配置错误: {e.message}")
        result = {"success": False, "exit_code": EXIT_ERROR,
                  "error": ErrorResponse(error_code=e.error_code, message=e.message, details=e.details)}
    return _report(result)
