"""
协调三角形网格

面的连接关系、边界分类与逐单元常数介质系数。所有面多项式都以
"全局顶点编号升序"的规范参数化表示，两侧单元共享同一参数化。
"""

import dataclasses
import hashlib
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from helmholtz_chdg.errors import CoefficientError, MeshError
from helmholtz_chdg.models import BoundaryTag, RegionCoefficients

logger = logging.getLogger(__name__)

SIDES = ("left", "right", "bottom", "top")
TagSpec = Union[BoundaryTag, str, Mapping[str, Union[BoundaryTag, str]], None]


@dataclass(frozen=True, eq=False)
class Face:
    """网格面（边）"""
    vertices: Tuple[int, int]
    owner: Tuple[int, int]
    neighbor: Optional[Tuple[int, int]]
    tag: BoundaryTag
    normal: np.ndarray
    length: float

    @property
    def is_interior(self) -> bool:
        return self.neighbor is not None

    def normal_for(self, element: int) -> np.ndarray:
        """单元 element 一侧的外法向"""
        if element == self.owner[0]:
            return self.normal
        if self.neighbor is not None and element == self.neighbor[0]:
            return -self.normal
        raise MeshError(f"单元 {element} 不与面 {self.vertices} 相邻")

    def sides(self) -> List[Tuple[int, int]]:
        """(单元, 局部面号) 列表，owner 在前"""
        return [self.owner] if self.neighbor is None else [self.owner, self.neighbor]


@dataclass(frozen=True, eq=False)
class Mesh:
    """三角形网格与逐单元系数"""
    vertices: np.ndarray
    triangles: np.ndarray
    faces: Tuple[Face, ...]
    regions: np.ndarray
    omega: np.ndarray
    c: np.ndarray
    rho: np.ndarray
    element_faces: np.ndarray
    face_flipped: np.ndarray

    @property
    def n_elements(self) -> int:
        return self.triangles.shape[0]

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def kappa(self) -> np.ndarray:
        return self.omega / self.c

    @property
    def eta(self) -> np.ndarray:
        return self.rho * self.c

    @property
    def areas(self) -> np.ndarray:
        return 0.5 * self.jacobians()[1]

    def jacobians(self) -> Tuple[np.ndarray, np.ndarray]:
        """仿射映射 x = X0 + J ξ 的 J (ne,2,2) 与 det J (ne,)"""
        x = self.vertices[self.triangles]
        jac = np.stack([x[:, 1] - x[:, 0], x[:, 2] - x[:, 0]], axis=2)
        det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
        return jac, det

    def boundary_faces(self) -> List[int]:
        return [i for i, face in enumerate(self.faces) if not face.is_interior]

    def interior_faces(self) -> List[int]:
        return [i for i, face in enumerate(self.faces) if face.is_interior]

    def tag_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for face in self.faces:
            counts[face.tag.value] = counts.get(face.tag.value, 0) + 1
        return counts

    def diameters(self) -> np.ndarray:
        """单元直径（最长边）"""
        x = self.vertices[self.triangles]
        edges = np.stack([x[:, 1] - x[:, 0], x[:, 2] - x[:, 1], x[:, 0] - x[:, 2]], axis=1)
        return np.linalg.norm(edges, axis=2).max(axis=1)

    def fingerprint(self) -> str:
        """网格几何、边界标签与系数的摘要，用作缓存键"""
        digest = hashlib.sha1()
        for array in (self.vertices, self.triangles, self.regions, self.omega, self.c, self.rho):
            digest.update(np.ascontiguousarray(array).tobytes())
        digest.update("".join(face.tag.value[0] for face in self.faces).encode())
        return digest.hexdigest()

    def with_coefficients(self, omega: np.ndarray, c: np.ndarray, rho: np.ndarray) -> "Mesh":
        """返回带新系数的网格副本"""
        omega, c, rho = (np.asarray(v, dtype=float).reshape(self.n_elements) for v in (omega, c, rho))
        for name, values in (("omega", omega), ("c", c), ("rho", rho)):
            bad = np.flatnonzero(~(values > 0))
            if bad.size:
                raise CoefficientError(f"单元 {int(bad[0])} 的 {name} 非正: {values[bad[0]]}")
        return dataclasses.replace(self, omega=omega, c=c, rho=rho)

    def locate(self, point: Sequence[float], tol: float = 1e-12) -> int:
        """返回包含点的单元编号"""
        jac, det = self.jacobians()
        x0 = self.vertices[self.triangles[:, 0]]
        d = np.asarray(point, dtype=float) - x0
        xi = (jac[:, 1, 1] * d[:, 0] - jac[:, 0, 1] * d[:, 1]) / det
        eta = (-jac[:, 1, 0] * d[:, 0] + jac[:, 0, 0] * d[:, 1]) / det
        inside = np.flatnonzero((xi >= -tol) & (eta >= -tol) & (xi + eta <= 1 + tol))
        if inside.size == 0:
            raise MeshError(f"点 {tuple(point)} 不在网格内")
        return int(inside[0])


def build_mesh(vertices: np.ndarray, triangles: np.ndarray,
               regions: Optional[np.ndarray] = None,
               boundary_tags: Optional[Mapping[Tuple[int, int], BoundaryTag]] = None,
               default_tag: BoundaryTag = BoundaryTag.ROBIN) -> Mesh:
    """
    由顶点和三角形构造网格，推导面的连接关系

    Args:
        vertices: (nv,2) 顶点坐标
        triangles: (ne,3) 逆时针顶点编号
        regions: 区域编号，缺省全为 1
        boundary_tags: 以升序顶点对为键的边界标签
        default_tag: 未指定标签的边界面所用标签

    Returns:
        Mesh: 系数初始化为 ω=c=ρ=1
    """
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    n_elements = triangles.shape[0]
    if n_elements == 0:
        raise MeshError("网格不含三角形")
    regions = np.ones(n_elements, dtype=np.int64) if regions is None else np.asarray(regions, dtype=np.int64)
    boundary_tags = dict(boundary_tags or {})

    x = vertices[triangles]
    signed = 0.5 * ((x[:, 1, 0] - x[:, 0, 0]) * (x[:, 2, 1] - x[:, 0, 1])
                    - (x[:, 2, 0] - x[:, 0, 0]) * (x[:, 1, 1] - x[:, 0, 1]))
    scale = max(np.ptp(vertices[:, 0]), np.ptp(vertices[:, 1])) ** 2
    bad = np.flatnonzero(signed <= 1e-14 * scale)
    if bad.size:
        raise MeshError(f"单元 {int(bad[0])} 的有向面积非正: {signed[bad[0]]}")

    incidences: Dict[Tuple[int, int], List[Tuple[int, int]]] = {}
    order: List[Tuple[int, int]] = []
    for element, tri in enumerate(triangles):
        for local in range(3):
            a, b = int(tri[local]), int(tri[(local + 1) % 3])
            key = (a, b) if a < b else (b, a)
            if key not in incidences:
                incidences[key] = []
                order.append(key)
            incidences[key].append((element, local))

    faces: List[Face] = []
    element_faces = np.empty((n_elements, 3), dtype=np.int64)
    face_flipped = np.empty((n_elements, 3), dtype=bool)
    unused = set(boundary_tags)
    for index, key in enumerate(order):
        sides = incidences[key]
        if len(sides) > 2:
            raise MeshError(f"非协调网格: 边 {key} 被 {len(sides)} 个单元共享")
        owner = sides[0]
        neighbor = sides[1] if len(sides) == 2 else None
        tri = triangles[owner[0]]
        va, vb = vertices[tri[owner[1]]], vertices[tri[(owner[1] + 1) % 3]]
        d = vb - va
        length = float(np.hypot(d[0], d[1]))
        normal = np.array([d[1], -d[0]]) / length
        if neighbor is None:
            tag = BoundaryTag(boundary_tags.get(key, default_tag))
            unused.discard(key)
        else:
            tag = BoundaryTag.INTERIOR
            if key in boundary_tags:
                logger.warning(f"边界标签落在内部面 {key} 上，已忽略")
                unused.discard(key)
        faces.append(Face(vertices=key, owner=owner, neighbor=neighbor, tag=tag,
                          normal=normal, length=length))
        for element, local in sides:
            element_faces[element, local] = index
            face_flipped[element, local] = triangles[element, local] > triangles[element, (local + 1) % 3]

    if unused:
        raise MeshError(f"边界线 {sorted(unused)[0]} 不对应任何三角形的边")

    degree = np.zeros(vertices.shape[0], dtype=np.int64)
    for face in faces:
        if not face.is_interior:
            degree[list(face.vertices)] += 1
    if np.any(degree % 2):
        raise MeshError(f"非协调网格: 顶点 {int(np.flatnonzero(degree % 2)[0])} 处存在悬挂边")
    _check_hanging_vertices(vertices, [face.vertices for face in faces if not face.is_interior])

    ones = np.ones(n_elements)
    return Mesh(vertices=vertices, triangles=triangles, faces=tuple(faces), regions=regions,
                omega=ones.copy(), c=ones.copy(), rho=ones.copy(),
                element_faces=element_faces, face_flipped=face_flipped)


def _check_hanging_vertices(vertices: np.ndarray, boundary: Sequence[Tuple[int, int]],
                            chunk: int = 512) -> None:
    """边界面内部不得落有其他顶点"""
    if not boundary:
        return
    ends = np.array(boundary, dtype=np.int64)
    candidates = np.unique(ends)
    points = vertices[candidates]
    for start in range(0, ends.shape[0], chunk):
        block = ends[start:start + chunk]
        a = vertices[block[:, 0]]
        d = vertices[block[:, 1]] - a
        length2 = (d ** 2).sum(axis=1)[:, None]
        rel = points[None, :, :] - a[:, None, :]
        t = np.einsum("fcd,fd->fc", rel, d) / length2
        cross = rel[..., 0] * d[:, None, 1] - rel[..., 1] * d[:, None, 0]
        hit = (t > 1e-10) & (t < 1 - 1e-10) & (np.abs(cross) < 1e-10 * length2)
        if hit.any():
            f, c = np.argwhere(hit)[0]
            raise MeshError(f"非协调网格: 顶点 {int(candidates[c])} 落在边界面 {tuple(block[f])} 内部")


def _side_tags(tags: TagSpec) -> Dict[str, BoundaryTag]:
    if tags is None:
        return {side: BoundaryTag.ROBIN for side in SIDES}
    if isinstance(tags, (BoundaryTag, str)):
        return {side: BoundaryTag(tags) for side in SIDES}
    unknown = set(tags) - set(SIDES)
    if unknown:
        raise MeshError(f"未知的边界边名: {sorted(unknown)}")
    return {side: BoundaryTag(tags.get(side, BoundaryTag.ROBIN)) for side in SIDES}


def generate_rectangle(nx: int, ny: int,
                       bounds: Tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0),
                       tags: TagSpec = None,
                       interface_x: Optional[float] = None) -> Mesh:
    """
    结构化矩形网格，每个格子沿 (+1,+1) 对角线剖分

    Args:
        nx, ny: 两个方向的格子数
        bounds: (xmin, xmax, ymin, ymax)
        tags: 各边 (left/right/bottom/top) 的边界标签，或统一标签
        interface_x: 区域分界线 x 坐标，左侧为区域 1，右侧为区域 2

    Returns:
        Mesh
    """
    if nx < 1 or ny < 1:
        raise MeshError(f"剖分数必须 ≥ 1: nx={nx}, ny={ny}")
    xmin, xmax, ymin, ymax = bounds
    if not (xmax > xmin and ymax > ymin):
        raise MeshError(f"矩形范围无效: {bounds}")
    side_tags = _side_tags(tags)

    xs = np.linspace(xmin, xmax, nx + 1)
    ys = np.linspace(ymin, ymax, ny + 1)
    gx, gy = np.meshgrid(xs, ys)
    vertices = np.column_stack([gx.ravel(), gy.ravel()])

    triangles = []
    for j in range(ny):
        for i in range(nx):
            v00 = j * (nx + 1) + i
            v10, v01, v11 = v00 + 1, v00 + nx + 1, v00 + nx + 2
            triangles.append((v00, v10, v11))
            triangles.append((v00, v11, v01))
    triangles = np.array(triangles, dtype=np.int64)

    regions = np.ones(triangles.shape[0], dtype=np.int64)
    if interface_x is not None:
        column = (interface_x - xmin) / (xmax - xmin) * nx
        if abs(column - round(column)) > 1e-9:
            raise MeshError(f"分界线 x={interface_x} 会切割单元")
        centroids = vertices[triangles].mean(axis=1)
        regions[centroids[:, 0] > interface_x] = 2

    tol = 1e-12 * max(xmax - xmin, ymax - ymin)
    boundary_tags = {}
    for tri in triangles:
        for local in range(3):
            a, b = int(tri[local]), int(tri[(local + 1) % 3])
            pa, pb = vertices[a], vertices[b]
            for side, coord, value in (("left", 0, xmin), ("right", 0, xmax),
                                       ("bottom", 1, ymin), ("top", 1, ymax)):
                if abs(pa[coord] - value) < tol and abs(pb[coord] - value) < tol:
                    boundary_tags[(min(a, b), max(a, b))] = side_tags[side]

    mesh = build_mesh(vertices, triangles, regions, boundary_tags)
    logger.info(f"矩形网格生成: {mesh.n_elements} 个单元, {mesh.n_faces} 个面")
    return mesh


def generate_unit_square(n: int, tags: TagSpec = None) -> Mesh:
    """
    单位正方形网格，x<1/2 为区域 1，x>1/2 为区域 2

    Args:
        n: 每边剖分数，必须为偶数
        tags: 各边边界标签，缺省全为 Robin
    """
    if n < 1:
        raise MeshError(f"剖分数必须 ≥ 1: {n}")
    if n % 2:
        raise MeshError(f"剖分数必须为偶数，否则 x=1/2 分界线会切割单元: n={n}")
    return generate_rectangle(n, n, (0.0, 1.0, 0.0, 1.0), tags, interface_x=0.5)


def square_subdivisions(h: float) -> int:
    """
    单位正方形上最长边（斜边）不超过 h 的最小偶数剖分数

    Args:
        h: 目标单元尺寸
    """
    if h <= 0:
        raise MeshError(f"目标单元尺寸必须为正: {h}")
    return 2 * math.ceil(math.sqrt(2.0) / (2.0 * h) - 1e-12)


def _ring_counts(radii: Sequence[float], spacing: Sequence[float]) -> List[int]:
    counts = []
    previous = 1
    for radius, step in zip(radii, spacing):
        count = max(6, previous, int(math.ceil(2.0 * math.pi * radius / step)))
        counts.append(count)
        previous = count
    return counts


def _stitch(inner: Sequence[int], outer: Sequence[int]) -> List[Tuple[int, int, int]]:
    """按角度合并两个同心圈，生成逆时针三角形"""
    ni, no = len(inner), len(outer)
    triangles = []
    i = j = 0
    while i < ni or j < no:
        if j == no or (i < ni and (i + 1) * no <= (j + 1) * ni):
            triangles.append((inner[i % ni], outer[j % no], inner[(i + 1) % ni]))
            i += 1
        else:
            triangles.append((inner[i % ni], outer[j % no], outer[(j + 1) % no]))
            j += 1
    return triangles


def generate_disk(h_target: float, R1: float = 0.25, R2: float = 0.5,
                  h_outer: Optional[float] = None,
                  tag: Union[BoundaryTag, str] = BoundaryTag.DIRICHLET) -> Mesh:
    """
    同心圈三角剖分的圆盘网格

    r<R1 的单元为区域 1，环形区域为区域 2。分界圆与外边界都由网格对齐的
    多边形近似。

    Args:
        h_target: 目标单元尺寸（内圆盘）
        R1, R2: 内、外半径
        h_outer: 环形区域的目标尺寸，缺省与 h_target 相同
        tag: 外边界标签
    """
    if not 0 < R1 < R2:
        raise MeshError(f"半径必须满足 0 < R1 < R2: R1={R1}, R2={R2}")
    if h_target <= 0 or (h_outer is not None and h_outer <= 0):
        raise MeshError(f"单元尺寸必须为正: h={h_target}, h_outer={h_outer}")
    if h_target > R1:
        raise MeshError(f"单元尺寸 {h_target} 大于内半径 {R1}")
    h_outer = h_target if h_outer is None else h_outer

    # 径向与切向间距取 0.8h，保证对角边不超过 1.5h
    step_inner, step_outer = 0.8 * h_target, 0.8 * h_outer
    m1 = int(math.ceil(R1 / step_inner))
    m2 = int(math.ceil((R2 - R1) / step_outer))
    radii = [R1 * k / m1 for k in range(1, m1 + 1)]
    radii += [R1 + (R2 - R1) * k / m2 for k in range(1, m2 + 1)]
    spacing = [step_inner] * (m1 - 1) + [min(step_inner, step_outer)] + [step_outer] * m2
    counts = _ring_counts(radii, spacing)

    vertices = [(0.0, 0.0)]
    rings = []
    for radius, count in zip(radii, counts):
        start = len(vertices)
        angles = 2.0 * math.pi * np.arange(count) / count
        vertices.extend(zip(radius * np.cos(angles), radius * np.sin(angles)))
        rings.append(list(range(start, start + count)))

    triangles: List[Tuple[int, int, int]] = []
    regions: List[int] = []
    first = rings[0]
    for j in range(len(first)):
        triangles.append((0, first[j], first[(j + 1) % len(first)]))
        regions.append(1)
    for band in range(1, len(rings)):
        band_triangles = _stitch(rings[band - 1], rings[band])
        triangles.extend(band_triangles)
        regions.extend([1 if band < m1 else 2] * len(band_triangles))

    outer = rings[-1]
    boundary_tags = {}
    for j in range(len(outer)):
        a, b = outer[j], outer[(j + 1) % len(outer)]
        boundary_tags[(min(a, b), max(a, b))] = BoundaryTag(tag)

    mesh = build_mesh(np.array(vertices), np.array(triangles), np.array(regions), boundary_tags)
    logger.info(f"圆盘网格生成: {mesh.n_elements} 个单元, 最大直径 {mesh.diameters().max():.4g}")
    return mesh


RuleValue = Union[RegionCoefficients, Tuple[float, float, float], Mapping[str, float]]


def _as_region_coefficients(region: int, value: RuleValue) -> RegionCoefficients:
    try:
        if isinstance(value, RegionCoefficients):
            return value
        if isinstance(value, Mapping):
            return RegionCoefficients(**value)
        omega, c, rho = value
        return RegionCoefficients(omega=omega, c=c, rho=rho)
    except ValueError as e:
        raise CoefficientError(f"区域 {region} 的系数无效: {value}", details=str(e)) from e


def assign_coefficients(mesh: Mesh, rule: Mapping[int, RuleValue]) -> Mesh:
    """
    按区域赋介质系数

    Args:
        mesh: 网格
        rule: 区域编号 -> (ω, c, ρ)

    Returns:
        Mesh: κ = ω/c、η = ρc 随之更新
    """
    coefficients = {int(region): _as_region_coefficients(region, value) for region, value in rule.items()}
    missing = sorted(set(int(r) for r in np.unique(mesh.regions)) - set(coefficients))
    if missing:
        raise CoefficientError(f"区域 {missing[0]} 缺少系数规则")
    omega = np.array([coefficients[int(r)].omega for r in mesh.regions])
    c = np.array([coefficients[int(r)].c for r in mesh.regions])
    rho = np.array([coefficients[int(r)].rho for r in mesh.regions])
    return mesh.with_coefficients(omega, c, rho)


def mesh_statistics(mesh: Mesh) -> Dict[str, object]:
    """网格诊断信息"""
    diameters = mesh.diameters()
    regions, counts = np.unique(mesh.regions, return_counts=True)
    return {
        "n_vertices": int(mesh.vertices.shape[0]),
        "n_elements": mesh.n_elements,
        "n_faces": mesh.n_faces,
        "n_interior_faces": len(mesh.interior_faces()),
        "n_boundary_faces": len(mesh.boundary_faces()),
        "tags": mesh.tag_counts(),
        "h_min": float(diameters.min()),
        "h_max": float(diameters.max()),
        "area": float(mesh.areas.sum()),
        "regions": {int(r): int(n) for r, n in zip(regions, counts)},
    }
