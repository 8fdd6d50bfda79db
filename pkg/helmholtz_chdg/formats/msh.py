"""
Gmsh MSH 2.2 ASCII 读写

2 节点线单元只用于设置边界标签（物理标签 1=Dirichlet, 2=Neumann, 3=Robin），
3 节点三角形的物理标签为区域编号。
"""

import logging
from pathlib import Path
from typing import Dict, Iterator, List, Tuple, Union

import numpy as np

from helmholtz_chdg.errors import MeshError, MshFormatError
from helmholtz_chdg.mesh import Mesh, build_mesh
from helmholtz_chdg.models import BoundaryTag

logger = logging.getLogger(__name__)

MSH_LINE = 1
MSH_TRIANGLE = 2
MSH_POINT = 15
SUPPORTED_VERSION = "2.2"

PathLike = Union[str, Path]


def _sections(lines: List[str]) -> Dict[str, List[str]]:
    """按 $Name ... $EndName 切分"""
    sections: Dict[str, List[str]] = {}
    current = None
    body: List[str] = []
    for raw in lines:
        line = raw.strip()
        if not line:
            continue
        if line.startswith("$End"):
            if current is None or line[4:] != current:
                raise MshFormatError(f"MSH 段落不匹配: {line}")
            sections[current] = body
            current = None
        elif line.startswith("$"):
            if current is not None:
                raise MshFormatError(f"MSH 段落 ${current} 未结束")
            current, body = line[1:], []
        elif current is not None:
            body.append(line)
    if current is not None:
        raise MshFormatError(f"MSH 段落 ${current} 未结束")
    return sections


def _records(body: List[str], name: str) -> Iterator[List[str]]:
    try:
        count = int(body[0])
    except (IndexError, ValueError) as e:
        raise MshFormatError(f"${name} 段缺少记录数") from e
    if len(body) - 1 != count:
        raise MshFormatError(f"${name} 段记录数不符: 声明 {count}, 实际 {len(body) - 1}")
    for line in body[1:]:
        yield line.split()


def read_msh(path: PathLike) -> Mesh:
    """
    读取 MSH 2.2 ASCII 网格

    Args:
        path: 文件路径

    Returns:
        Mesh: 面由三角形邻接关系推导，未被线单元覆盖的边界面取 Robin 标签

    Raises:
        MshFormatError: 版本不支持或文件格式错误
        MeshError: 非协调连接或边界线不对应任何三角形的边
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise MshFormatError(f"无法读取 MSH 文件: {path}", details=str(e)) from e
    sections = _sections(lines)

    header = sections.get("MeshFormat")
    if not header:
        raise MshFormatError(f"缺少 $MeshFormat 段: {path}")
    fields = header[0].split()
    if fields[0] != SUPPORTED_VERSION:
        raise MshFormatError(f"不支持的 MSH 版本 {fields[0]}，只支持 {SUPPORTED_VERSION}")
    if len(fields) > 1 and fields[1] != "0":
        raise MshFormatError("只支持 ASCII 格式的 MSH 文件")
    if "Nodes" not in sections or "Elements" not in sections:
        raise MshFormatError("缺少 $Nodes 或 $Elements 段")

    node_index: Dict[int, int] = {}
    coordinates = []
    try:
        for record in _records(sections["Nodes"], "Nodes"):
            node_index[int(record[0])] = len(coordinates)
            coordinates.append((float(record[1]), float(record[2])))
    except (IndexError, ValueError) as e:
        raise MshFormatError("$Nodes 记录格式错误", details=str(e)) from e
    vertices = np.array(coordinates, dtype=float)

    triangles: List[Tuple[int, int, int]] = []
    regions: List[int] = []
    boundary_tags: Dict[Tuple[int, int], BoundaryTag] = {}
    skipped = 0
    try:
        for record in _records(sections["Elements"], "Elements"):
            kind, n_tags = int(record[1]), int(record[2])
            physical = int(record[3]) if n_tags > 0 else 0
            nodes = [node_index[int(v)] for v in record[3 + n_tags:]]
            if kind == MSH_TRIANGLE:
                a, b, c = nodes
                pa, pb, pc = vertices[a], vertices[b], vertices[c]
                cross = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1])
                triangles.append((a, b, c) if cross > 0 else (a, c, b))
                regions.append(physical if physical > 0 else 1)
            elif kind == MSH_LINE:
                a, b = nodes
                try:
                    tag = BoundaryTag.from_physical_id(physical)
                except ValueError as e:
                    raise MshFormatError(f"线单元 {record[0]} 的边界物理标签无效: {physical}") from e
                boundary_tags[(min(a, b), max(a, b))] = tag
            else:
                skipped += 1
    except (IndexError, KeyError, ValueError) as e:
        raise MshFormatError("$Elements 记录格式错误", details=str(e)) from e

    if not triangles:
        raise MeshError(f"MSH 文件不含三角形: {path}")
    if skipped:
        logger.debug(f"忽略 {skipped} 个非线、非三角形单元")

    mesh = build_mesh(vertices, np.array(triangles), np.array(regions), boundary_tags)
    untagged = len(mesh.boundary_faces()) - len(boundary_tags)
    if untagged > 0:
        logger.warning(f"{untagged} 个边界面没有线单元，按 Robin 处理")
    logger.info(f"读取 MSH 网格 {path}: {mesh.n_elements} 个单元, {mesh.n_faces} 个面")
    return mesh


def write_msh(mesh: Mesh, path: PathLike) -> Path:
    """
    写出 MSH 2.2 ASCII 网格

    边界面写成线单元，物理标签与 read_msh 的约定一致。
    """
    path = Path(path)
    boundary = mesh.boundary_faces()
    lines = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat", "$Nodes", str(mesh.vertices.shape[0])]
    lines += [f"{i + 1} {x:.17g} {y:.17g} 0" for i, (x, y) in enumerate(mesh.vertices)]
    lines += ["$EndNodes", "$Elements", str(len(boundary) + mesh.n_elements)]
    number = 0
    for index in boundary:
        face = mesh.faces[index]
        number += 1
        ident = face.tag.physical_id
        a, b = face.vertices
        lines.append(f"{number} {MSH_LINE} 2 {ident} {ident} {a + 1} {b + 1}")
    for tri, region in zip(mesh.triangles, mesh.regions):
        number += 1
        lines.append(f"{number} {MSH_TRIANGLE} 2 {region} {region} {tri[0] + 1} {tri[1] + 1} {tri[2] + 1}")
    lines.append("$EndElements")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"写出 MSH 网格 {path}")
    return path
