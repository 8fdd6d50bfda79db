"""
声学混合间断有限元数据模型
"""

import math
from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator


class BoundaryTag(str, Enum):
    """面的边界类型"""
    INTERIOR = "interior"
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    ROBIN = "robin"

    @property
    def physical_id(self) -> int:
        """MSH 文件中的物理标签编号"""
        return _PHYSICAL_IDS[self]

    @classmethod
    def from_physical_id(cls, value: int) -> "BoundaryTag":
        for tag, ident in _PHYSICAL_IDS.items():
            if ident == value:
                return tag
        raise ValueError(f"未知的边界物理标签: {value}")


_PHYSICAL_IDS = {
    BoundaryTag.INTERIOR: 0,
    BoundaryTag.DIRICHLET: 1,
    BoundaryTag.NEUMANN: 2,
    BoundaryTag.ROBIN: 3,
}


class FluxKind(str, Enum):
    """数值通量族"""
    UPWIND = "upw"
    SYM0 = "sym0"
    SYM2 = "sym2"

    @property
    def symmetric(self) -> bool:
        return self is not FluxKind.UPWIND


class Method(str, Enum):
    """离散方法"""
    DG = "dg"
    HDG = "hdg"
    CHDG = "chdg"


class SolverKind(str, Enum):
    """线性求解器"""
    DIRECT = "direct"
    FIXED_POINT = "fixed_point"
    CGNR = "cgnr"
    GMRES = "gmres"


class Benchmark(str, Enum):
    """基准问题"""
    PLANE_WAVE = "plane_wave"
    CAVITY = "cavity"
    FROM_FILES = "from_files"


class SpectralMode(str, Enum):
    """谱半径计算方式"""
    NONE = "none"
    DENSE = "dense"
    POWER = "power"


class RegionCoefficients(BaseModel):
    """单个区域的介质参数"""
    model_config = ConfigDict(frozen=True)

    omega: float = Field(gt=0, description="角频率 (rad/s)")
    c: float = Field(gt=0, description="声速 (m/s)")
    rho: float = Field(gt=0, description="密度 (kg/m³)")

    @property
    def kappa(self) -> float:
        """波数 κ = ω/c"""
        return self.omega / self.c

    @property
    def eta(self) -> float:
        """阻抗 η = ρc"""
        return self.rho * self.c


class RunConfig(BaseModel):
    """一次基准运行的完整配置"""
    model_config = ConfigDict(extra="forbid")

    benchmark: Benchmark = Field(Benchmark.PLANE_WAVE, description="基准问题")
    preset: Optional[str] = Field(None, description="预设参数组名称")

    n: int = Field(16, ge=1, description="正方形网格每边剖分数")
    h: float = Field(0.04, gt=0, description="圆盘网格目标单元尺寸")
    h_outer: Optional[float] = Field(None, gt=0, description="圆盘外环目标单元尺寸")
    msh_path: Optional[str] = Field(None, description="MSH 网格文件路径")
    coefficients_path: Optional[str] = Field(None, description="逐单元系数文件路径")

    omega: float = Field(15 * math.pi, gt=0, description="角频率")
    c1: float = Field(1.0, gt=0, description="区域1声速")
    rho1: float = Field(1.0, gt=0, description="区域1密度")
    c2: float = Field(1.0, gt=0, description="区域2声速")
    rho2: float = Field(1.0, gt=0, description="区域2密度")
    theta: float = Field(math.pi / 4, description="入射角 (rad)")
    source_x: Optional[float] = Field(None, description="点源横坐标")
    source_y: Optional[float] = Field(None, description="点源纵坐标")

    degree: int = Field(3, ge=1, le=6, description="多项式阶数 p")
    method: Method = Field(Method.CHDG, description="离散方法")
    flux: FluxKind = Field(FluxKind.SYM0, description="数值通量")
    solver: SolverKind = Field(SolverKind.GMRES, description="求解器")
    tol: float = Field(1e-8, gt=0, description="相对残差停止阈值")
    max_iter: int = Field(1000, ge=1, description="最大迭代次数")
    restart: Optional[int] = Field(None, ge=1, description="GMRES 重启长度")
    error_every: int = Field(1, ge=0, description="误差记录间隔，0 表示不记录")

    spectral: SpectralMode = Field(SpectralMode.NONE, description="谱半径计算方式")
    dense_limit: int = Field(20000, ge=1, description="稠密特征值计算的维数上限")
    export_matrix: bool = Field(False, description="导出三元组格式矩阵")

    output_dir: str = Field("results", description="输出目录")
    run_name: Optional[str] = Field(None, description="输出文件名前缀")
    seed: int = Field(0, description="随机种子")

    @model_validator(mode="after")
    def _check_combination(self) -> "RunConfig":
        if self.solver is SolverKind.FIXED_POINT and self.method is not Method.CHDG:
            raise ValueError("fixed_point 求解器只适用于 chdg 方法")
        if self.restart is not None and self.solver is not SolverKind.GMRES:
            raise ValueError("restart 只适用于 gmres 求解器")
        if self.method is Method.DG and self.solver is not SolverKind.DIRECT:
            raise ValueError("dg 方法只支持 direct 求解器")
        if self.benchmark is Benchmark.FROM_FILES and not self.msh_path:
            raise ValueError("from_files 基准需要 msh_path")
        if self.spectral is not SpectralMode.NONE and self.method is not Method.CHDG:
            raise ValueError("谱半径只针对 chdg 方法的 ΠS 算子")
        if (self.source_x is None) != (self.source_y is None):
            raise ValueError("source_x 与 source_y 必须同时给出")
        if self.source_x is not None and self.benchmark is not Benchmark.FROM_FILES:
            raise ValueError("点源只适用于 from_files 基准")
        return self

    @property
    def has_point_source(self) -> bool:
        return self.source_x is not None

    def region_coefficients(self) -> Dict[int, RegionCoefficients]:
        """按区域编号返回介质参数"""
        return {
            1: RegionCoefficients(omega=self.omega, c=self.c1, rho=self.rho1),
            2: RegionCoefficients(omega=self.omega, c=self.c2, rho=self.rho2),
        }

    @property
    def label(self) -> str:
        """(方法, 通量, 求解器) 组合标签"""
        return f"{self.method.value}-{self.flux.value}-{self.solver.value}"

    def problem_signature(self) -> Dict[str, Any]:
        """描述物理问题与网格的字段，用于比较扫描中的配置"""
        keys = ("benchmark", "n", "h", "h_outer", "msh_path", "coefficients_path",
                "omega", "c1", "rho1", "c2", "rho2", "theta", "source_x",
                "source_y", "degree")
        return {key: getattr(self, key) for key in keys}


class SolveReport(BaseModel):
    """迭代求解报告"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    method: str = Field(description="求解器标签")
    iterations: int = Field(0, description="迭代次数")
    residual_history: List[float] = Field(default_factory=list, description="相对残差历史")
    error_history: List[Optional[float]] = Field(default_factory=list, description="相对能量误差历史")
    physical_residual_history: List[Optional[float]] = Field(
        default_factory=list, description="DG 整体系统在恢复物理场上的相对残差历史")
    converged: bool = Field(False, description="是否收敛")
    diverged: bool = Field(False, description="是否发散")
    breakdown: bool = Field(False, description="是否发生中断")
    timings: Dict[str, float] = Field(default_factory=dict, description="各阶段耗时 (s)")
    solution: Optional[Any] = Field(None, exclude=True, description="最终迭代解")

    @property
    def final_residual(self) -> Optional[float]:
        return self.residual_history[-1] if self.residual_history else None

    @property
    def final_error(self) -> Optional[float]:
        for value in reversed(self.error_history):
            if value is not None:
                return value
        return None

    @property
    def final_physical_residual(self) -> Optional[float]:
        for value in reversed(self.physical_residual_history):
            if value is not None:
                return value
        return None


class SpectralReport(BaseModel):
    """谱半径报告"""
    radius: float = Field(description="谱半径估计")
    mode: SpectralMode = Field(description="计算方式")
    converged: bool = Field(True, description="幂迭代是否收敛")
    iterations: int = Field(0, description="幂迭代次数")
    dimension: int = Field(description="算子维数")
    leading_eigenvalues: List[List[float]] = Field(default_factory=list, description="模最大的特征值 [实部, 虚部]")


class RunSummary(BaseModel):
    """一次运行的汇总"""
    config: RunConfig = Field(description="解析后的完整配置")
    success: bool = Field(description="运行是否完成")
    exit_code: int = Field(description="进程退出码")
    iterations: int = Field(0, description="迭代次数")
    converged: bool = Field(False, description="是否收敛")
    diverged: bool = Field(False, description="是否发散")
    final_residual: Optional[float] = Field(None, description="最终相对残差")
    final_error: Optional[float] = Field(None, description="最终相对能量误差")
    final_physical_residual: Optional[float] = Field(None, description="最终物理系统相对残差")
    spectral: Optional[SpectralReport] = Field(None, description="谱半径报告")
    timings: Dict[str, float] = Field(default_factory=dict, description="各阶段耗时 (s)")
    n_elements: int = Field(0, description="单元数")
    n_unknowns: int = Field(0, description="全局未知量个数")
    history_path: Optional[str] = Field(None, description="历史 CSV 路径")


class ErrorResponse(BaseModel):
    """错误响应模型"""
    error_code: int = Field(description="错误代码")
    message: str = Field(description="错误信息")
    details: Optional[str] = Field(None, description="详细错误信息")
