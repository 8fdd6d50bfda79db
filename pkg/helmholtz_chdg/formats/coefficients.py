"""
逐单元系数文件

每行一条记录 `element c rho`，空行与 # 注释忽略，单元编号从 0 开始。
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from helmholtz_chdg.errors import CoefficientError
from helmholtz_chdg.mesh import Mesh

logger = logging.getLogger(__name__)


def read_coefficients(path: Union[str, Path], n_elements: int):
    """读取 (c, ρ) 表，返回两个长度为 n_elements 的数组"""
    path = Path(path)
    c = np.full(n_elements, np.nan)
    rho = np.full(n_elements, np.nan)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise CoefficientError(f"无法读取系数文件: {path}", details=str(e)) from e

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            element, speed, density = int(fields[0]), float(fields[1]), float(fields[2])
        except (IndexError, ValueError) as e:
            raise CoefficientError(f"系数文件第 {number} 行格式错误: {raw!r}") from e
        if not 0 <= element < n_elements:
            raise CoefficientError(f"系数文件第 {number} 行的单元编号越界: {element}")
        if not (speed > 0 and density > 0):
            raise CoefficientError(f"单元 {element} 的系数非正: c={speed}, rho={density}")
        c[element], rho[element] = speed, density

    missing = np.flatnonzero(np.isnan(c))
    if missing.size:
        raise CoefficientError(f"系数文件缺少单元 {int(missing[0])}（共缺 {missing.size} 个）")
    return c, rho


def ingest_coefficients(mesh: Mesh, path: Union[str, Path], omega: float) -> Mesh:
    """
    从文件读取逐单元 (c, ρ)，以给定 ω 导出 κ、η

    Raises:
        CoefficientError: 缺少单元或系数非正
    """
    c, rho = read_coefficients(path, mesh.n_elements)
    logger.info(f"读取系数文件 {path}: c∈[{c.min():.4g}, {c.max():.4g}], ρ∈[{rho.min():.4g}, {rho.max():.4g}]")
    return mesh.with_coefficients(np.full(mesh.n_elements, float(omega)), c, rho)


def write_coefficients(mesh: Mesh, path: Union[str, Path]) -> Path:
    """写出网格当前的逐单元 (c, ρ)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# element c rho"]
    lines += [f"{k} {c:.17g} {rho:.17g}" for k, (c, rho) in enumerate(zip(mesh.c, mesh.rho))]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
