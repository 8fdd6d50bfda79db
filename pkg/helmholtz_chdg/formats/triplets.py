"""
矩阵三元组导出：每行 `row col re im`
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np
import scipy.sparse

logger = logging.getLogger(__name__)


def export_triplets(matrix: Union[np.ndarray, scipy.sparse.spmatrix], path: Union[str, Path]) -> Path:
    """
    导出物化后的矩阵

    Args:
        matrix: 稠密或稀疏矩阵
        path: 输出路径，首行为 `# rows cols nnz`
    """
    path = Path(path)
    coo = scipy.sparse.coo_matrix(matrix)
    coo.sum_duplicates()
    data = np.asarray(coo.data, dtype=complex)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        f.write(f"# {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for row, col, value in zip(coo.row, coo.col, data):
            f.write(f"{row} {col} {value.real:.17g} {value.imag:.17g}\n")
    logger.info(f"矩阵已导出: {path} ({coo.nnz} 个非零元)")
    return path


def read_triplets(path: Union[str, Path]) -> scipy.sparse.csr_matrix:
    """读回 export_triplets 写出的矩阵"""
    path = Path(path)
    with path.open(encoding="utf-8") as f:
        header = f.readline().lstrip("#").split()
        rows, cols = int(header[0]), int(header[1])
        data = np.loadtxt(f, ndmin=2)
    if data.size == 0:
        return scipy.sparse.csr_matrix((rows, cols), dtype=complex)
    values = data[:, 2] + 1j * data[:, 3]
    return scipy.sparse.csr_matrix((values, (data[:, 0].astype(int), data[:, 1].astype(int))),
                                   shape=(rows, cols))
