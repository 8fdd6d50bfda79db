"""
离散缓存
"""

import logging
from typing import Any, Optional

from cachetools import LRUCache

from helmholtz_chdg.mesh import Mesh
from helmholtz_chdg.models import FluxKind, Method


class DiscretizationCache:
    """已组装离散的内存缓存，扫描中共享网格时避免重复分解单元系统"""

    def __init__(self, max_size: int = 8):
        """
        初始化缓存

        Args:
            max_size: 最大缓存条目数
        """
        self.cache = LRUCache(maxsize=max_size)
        self.logger = logging.getLogger(__name__)
        self.hits = 0
        self.misses = 0

    def get_cache_key(self, mesh: Mesh, degree: int, method: Method, flux: FluxKind) -> str:
        """生成缓存键"""
        return f"{mesh.fingerprint()}:{degree}:{Method(method).value}:{FluxKind(flux).value}"

    def get(self, mesh: Mesh, degree: int, method: Method, flux: FluxKind) -> Optional[Any]:
        """从缓存获取离散"""
        value = self.cache.get(self.get_cache_key(mesh, degree, method, flux))
        if value is None:
            self.misses += 1
        else:
            self.hits += 1
            self.logger.info(f"复用缓存的离散: method={Method(method).value}, flux={FluxKind(flux).value}")
        return value

    def set(self, mesh: Mesh, degree: int, method: Method, flux: FluxKind, data: Any) -> None:
        """缓存离散"""
        self.cache[self.get_cache_key(mesh, degree, method, flux)] = data

    def clear(self) -> None:
        """清空缓存"""
        self.cache.clear()
        self.hits = self.misses = 0

    def get_stats(self) -> dict:
        """获取缓存统计信息"""
        return {
            "current_size": len(self.cache),
            "max_size": self.cache.maxsize,
            "hits": self.hits,
            "misses": self.misses,
        }
