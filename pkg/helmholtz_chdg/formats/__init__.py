"""
文件格式：MSH 网格、逐单元系数与矩阵三元组
"""

from helmholtz_chdg.formats.coefficients import ingest_coefficients
from helmholtz_chdg.formats.msh import read_msh, write_msh
from helmholtz_chdg.formats.triplets import export_triplets

__all__ = ["export_triplets", "ingest_coefficients", "read_msh", "write_msh"]
