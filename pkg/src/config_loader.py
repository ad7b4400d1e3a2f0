"""
配置加载器 - 从配置文件读取数值设置
支持YAML和JSON格式配置文件，环境变量 DIRACSPEC_* 覆盖文件中的值
"""

import copy
import json
import os
from typing import Any, Dict, Optional

import yaml
from dotenv import load_dotenv

ENV_PREFIX = "DIRACSPEC_"

DEFAULT_SETTINGS: Dict[str, Any] = {
    "ode_tol": 1e-10,
    "fundamental_steps": 512,
    "rescale_threshold": 300.0,
    "theta_grid": 2048,
    "quadrature_grid": 2048,
    "gauge_grid": 8193,
    "regularity_tol": 1e-10,
    "regularity_warn_factor": 1e3,
    "root_tol": 1e-10,
    "newton_max_iter": 50,
    "winding_tol": 0.25,
    "contour_retries": 5,
    "box_width": 2.0,
    "strip_allowance": 1.0,
    "root_gap_tol": 1e-9,
    "kernel_grid": 200,
    "kernel_max_iter": 60,
    "kernel_tol": 1e-10,
    "float_format": "%.12e",
    "jobs": 1,
    "progress": False,
    "log_level": "WARNING",
}


def _coerce(raw: str, like: Any) -> Any:
    """按默认值的类型转换环境变量字符串"""
    if isinstance(like, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(float(raw))
    if isinstance(like, float):
        return float(raw)
    return raw


class ConfigLoader:
    """配置加载器类"""

    def __init__(self, config_path: Optional[str] = None, use_env: bool = True):
        """
        初始化配置加载器

        Args:
            config_path: 配置文件路径，如果为None则自动查找
            use_env: 是否应用 DIRACSPEC_ 环境变量覆盖
        """
        self.config_path = config_path or self._find_config_file()
        self.config = self._load_config()
        if use_env:
            self._apply_env_overrides()

    def _find_config_file(self) -> Optional[str]:
        """查找配置文件，找不到时返回None（使用内置默认值）"""
        possible_paths = [
            "config/config.yaml",
            "config/config.yml",
            "config/config.json",
            "config.yaml",
            "config.yml",
            "config.json",
            "../config/config.yaml",
            "../config/config.yml",
            "../config/config.json",
        ]
        for path in possible_paths:
            if os.path.exists(path):
                return path
        return None

    def _load_config(self) -> Dict[str, Any]:
        """加载配置文件并与默认值合并"""
        merged = {"settings": copy.deepcopy(DEFAULT_SETTINGS)}
        if self.config_path is None:
            return merged
        if not os.path.exists(self.config_path):
            raise FileNotFoundError(f"配置文件不存在: {self.config_path}")

        try:
            with open(self.config_path, "r", encoding="utf-8") as f:
                if self.config_path.endswith(".json"):
                    loaded = json.load(f)
                else:
                    loaded = yaml.safe_load(f)
        except (OSError, ValueError, yaml.YAMLError) as e:
            raise ValueError(f"加载配置文件失败: {e}") from e

        for key, value in (loaded or {}).get("settings", {}).items():
            merged["settings"][key] = value
        return merged

    def _apply_env_overrides(self):
        """读取 .env 与进程环境中的 DIRACSPEC_* 变量"""
        load_dotenv()
        settings = self.config["settings"]
        for name, raw in os.environ.items():
            if not name.startswith(ENV_PREFIX):
                continue
            key = name[len(ENV_PREFIX):].lower()
            settings[key] = _coerce(raw, settings.get(key, DEFAULT_SETTINGS.get(key, "")))

    def get_setting(self, key: str, default: Any = None) -> Any:
        """
        获取通用设置

        Args:
            key: 设置键名
            default: 默认值

        Returns:
            Any: 设置值
        """
        return self.config.get("settings", {}).get(key, default)

    def update_settings(self, **values: Any):
        """运行期覆盖设置（CLI 参数使用）"""
        self.config["settings"].update(values)

    def save_default_config(self, path: str = "config/config.yaml"):
        """把默认设置写入文件"""
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        try:
            with open(path, "w", encoding="utf-8") as f:
                if path.endswith(".json"):
                    json.dump({"settings": DEFAULT_SETTINGS}, f, indent=2, ensure_ascii=False)
                else:
                    yaml.dump({"settings": DEFAULT_SETTINGS}, f, allow_unicode=True, default_flow_style=False)
        except OSError as e:
            raise ValueError(f"保存配置文件失败: {e}") from e


# 全局配置加载器实例
_config_loader = None


def get_config_loader(config_path: Optional[str] = None) -> ConfigLoader:
    """
    获取配置加载器实例（单例模式）

    Args:
        config_path: 配置文件路径

    Returns:
        ConfigLoader: 配置加载器实例
    """
    global _config_loader
    if _config_loader is None or (config_path is not None and config_path != _config_loader.config_path):
        _config_loader = ConfigLoader(config_path)
    return _config_loader


def reset_config_loader():
    """丢弃单例，下次访问时重新加载"""
    global _config_loader
    _config_loader = None


def get_setting(key: str, default: Any = None, config_path: Optional[str] = None) -> Any:
    """
    快速获取通用设置

    Args:
        key: 设置键名
        default: 默认值（未给出时取内置默认值）
        config_path: 配置文件路径

    Returns:
        Any: 设置值
    """
    loader = get_config_loader(config_path)
    if default is None:
        default = DEFAULT_SETTINGS.get(key)
    return loader.get_setting(key, default)
