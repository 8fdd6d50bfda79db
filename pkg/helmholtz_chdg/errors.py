"""
异常定义

所有异常都带有 error_code，与 models.ErrorResponse 的错误代码一致。
"""


class HelmholtzError(Exception):
    """库内所有异常的基类"""

    error_code = 1000

    def __init__(self, message: str, details: str = None):
        super().__init__(message)
        self.message = message
        self.details = details


class MeshError(HelmholtzError):
    """网格非法：奇数剖分、退化单元、非协调连接等"""
    error_code = 1100


class MshFormatError(MeshError):
    """MSH 文件版本不支持或格式错误"""
    error_code = 1101


class CoefficientError(HelmholtzError):
    """介质系数缺失或非正"""
    error_code = 1200


class DegreeError(HelmholtzError):
    """不支持的多项式阶数"""
    error_code = 1300


class FluxError(HelmholtzError):
    """数值通量参数或调用错误"""
    error_code = 1400


class ResonanceError(HelmholtzError):
    """空腔参考解的线性系统接近奇异"""
    error_code = 1500


class EvanescentError(HelmholtzError):
    """平面波处于全反射（倏逝波）区间"""
    error_code = 1501


class DomainError(HelmholtzError, ValueError):
    """特殊函数自变量超出定义域"""
    error_code = 1502


class SolverError(HelmholtzError):
    """全局系统奇异或求解器配置错误"""
    error_code = 1600


class SpectralSizeError(SolverError):
    """稠密谱计算超出规模限制"""
    error_code = 1601


class ConfigError(HelmholtzError):
    """运行配置无效"""
    error_code = 1700
