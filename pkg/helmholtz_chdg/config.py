"""
配置加载

配置文件为扁平的 `key = value` 文本（# 注释），由 python-dotenv 解析；
命令行 `--set key=value` 与专用参数覆盖文件中的值，预设提供最低优先级的默认值。
"""

import logging
import os
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Union

from dotenv import dotenv_values
from pydantic import ValidationError

from helmholtz_chdg.analytic.benchmarks import preset_values
from helmholtz_chdg.errors import ConfigError
from helmholtz_chdg.models import RunConfig

logger = logging.getLogger(__name__)

DEFAULT_LOG_FILE = "helmholtz_chdg.log"
LOG_FORMAT = '{"time": "%(asctime)s", "level": "%(levelname)s", "message": "%(message)s"}'


def setup_logging(level: Optional[str] = None, log_file: Optional[str] = None) -> None:
    """配置根日志：文件与终端两个输出"""
    level = (level or os.getenv("HELMHOLTZ_LOG_LEVEL", "INFO")).upper()
    log_file = log_file or os.getenv("HELMHOLTZ_LOG_FILE", DEFAULT_LOG_FILE)
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format=LOG_FORMAT,
        handlers=[
            logging.FileHandler(log_file, encoding="utf-8"),
            logging.StreamHandler(),
        ],
        force=True,
    )


def environment_defaults() -> Dict[str, Any]:
    """环境变量提供的默认值"""
    defaults: Dict[str, Any] = {}
    output_dir = os.getenv("HELMHOLTZ_OUTPUT_DIR")
    if output_dir:
        defaults["output_dir"] = output_dir
    dense_limit = os.getenv("HELMHOLTZ_DENSE_LIMIT")
    if dense_limit:
        defaults["dense_limit"] = dense_limit
    return defaults


def load_config_file(path: Union[str, Path]) -> Dict[str, str]:
    """读取扁平配置文件"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"配置文件不存在: {path}")
    values = dotenv_values(path, encoding="utf-8")
    empty = [key for key, value in values.items() if value is None]
    if empty:
        raise ConfigError(f"配置项缺少取值: {empty[0]}")
    logger.info(f"读取配置文件 {path}: {len(values)} 项")
    return dict(values)


def parse_overrides(items: Iterable[str]) -> Dict[str, str]:
    """解析 `key=value` 形式的覆盖项"""
    overrides = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"覆盖项格式应为 key=value: {item!r}")
        overrides[key] = value.strip()
    return overrides


def _check_keys(values: Mapping[str, Any]) -> None:
    allowed = set(RunConfig.model_fields)
    for key in values:
        if key not in allowed:
            raise ConfigError(f"未知的配置项: {key}")


def _normalize(values: Mapping[str, Any]) -> Dict[str, Any]:
    """去掉空字符串，统一小写键"""
    out = {}
    for key, value in values.items():
        key = key.strip().lower()
        if isinstance(value, str):
            value = value.strip()
            if value == "" or value.lower() == "none":
                value = None
        out[key] = value
    return out


def resolve_config(*layers: Mapping[str, Any]) -> RunConfig:
    """
    按优先级合并配置层

    后面的层覆盖前面的层；preset 指定的参数组位于环境默认值之上、
    其余显式配置之下。

    Raises:
        ConfigError: 未知配置项、未知预设或取值非法
    """
    merged: Dict[str, Any] = dict(environment_defaults())
    explicit: Dict[str, Any] = {}
    for layer in layers:
        layer = _normalize(layer)
        _check_keys(layer)
        explicit.update({key: value for key, value in layer.items() if value is not None})

    preset = explicit.get("preset")
    if preset:
        merged.update(preset_values(preset))
    merged.update(explicit)
    try:
        config = RunConfig(**merged)
    except ValidationError as e:
        raise ConfigError("配置无效", details=str(e)) from e
    logger.debug(f"解析后的配置: {config.model_dump(mode='json')}")
    return config


def load_config(path: Optional[Union[str, Path]] = None, overrides: Optional[List[str]] = None,
                **options: Any) -> RunConfig:
    """
    读取配置文件并应用覆盖

    Args:
        path: 配置文件路径，可为空
        overrides: `key=value` 覆盖项
        **options: 命令行专用参数，None 表示未给出
    """
    layers = [load_config_file(path)] if path else []
    layers.append(parse_overrides(overrides or []))
    layers.append({key: value for key, value in options.items() if value is not None})
    return resolve_config(*layers)
