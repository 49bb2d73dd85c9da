#!/usr/bin/env python3
"""
Configuration management for the McMullen dynamics toolkit
"""

import os
import json
from pathlib import Path
from typing import Optional
from dataclasses import dataclass, asdict, fields
import logging

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

load_dotenv()


@dataclass
class SystemConfig:
    """System-wide configuration"""
    # Newton solvers
    newton_max_steps: int = 100
    newton_tol: float = 1e-12
    newton_damping: float = 0.5
    period_tol: float = 1e-9
    max_period: int = 64

    # Rays
    ray_descent: float = 2.0 ** -0.25
    ray_g_min: float = 1e-6
    ray_start_factor: float = 4.0
    param_anchor_radius: float = 1e6
    param_ray_log_min: float = 2e-6

    # Cut rays
    cut_depth: int = 12
    prune_diameter: float = 1e-9
    boundary_samples: int = 48

    # Classification and rendering
    classify_maxiter: int = 10_000
    render_maxiter: int = 500
    oracle_res: int = 256
    oracle_maxiter: int = 500

    # Parameter plane
    boundary_rho: float = 0.999
    hole_symbolic_max_level: int = 5
    hole_root_extraprec: int = 800

    # Processing settings
    max_workers: int = 4

    # Logging settings
    log_level: str = "INFO"
    log_file: Optional[str] = None
    log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # Output settings
    output_dir: str = "output"
    save_png: bool = False


class ConfigManager:
    """Manages application configuration"""

    def __init__(self, config_file: Optional[str] = None):
        self.config_file = config_file or os.getenv("MCMULLEN_CONFIG", "mcmullen.json")
        self.system_config = self._load_system_config()

    def _load_system_config(self) -> SystemConfig:
        """Load system configuration from file or environment"""
        config_data = {}

        if os.path.exists(self.config_file):
            try:
                with open(self.config_file, 'r') as f:
                    file_config = json.load(f)
                    config_data.update(file_config.get('system', {}))
            except Exception as e:
                logger.warning(f"Could not load config file: {e}")

        env_mappings = {
            'MCMULLEN_THREADS': ('max_workers', int),
            'MCMULLEN_LOG_LEVEL': ('log_level', str),
            'MCMULLEN_LOG_FILE': ('log_file', str),
            'MCMULLEN_OUTPUT_DIR': ('output_dir', str),
            'MCMULLEN_MAXITER': ('classify_maxiter', int),
            'MCMULLEN_RENDER_MAXITER': ('render_maxiter', int),
            'MCMULLEN_CUT_DEPTH': ('cut_depth', int),
            'MCMULLEN_ORACLE_RES': ('oracle_res', int),
            'MCMULLEN_SAVE_PNG': ('save_png', lambda x: x.lower() == 'true'),
            # Plain fallbacks shared with other tools
            'MAX_WORKERS': ('max_workers', int),
            'LOG_LEVEL': ('log_level', str),
            'OUTPUT_DIR': ('output_dir', str),
        }

        for env_key, (config_key, converter) in env_mappings.items():
            if env_value := os.getenv(env_key):
                try:
                    config_data.setdefault(config_key, converter(env_value))
                except ValueError:
                    logger.warning(f"Invalid value for {env_key}: {env_value}")

        known = {f.name for f in fields(SystemConfig)}
        unknown = set(config_data) - known
        for key in unknown:
            logger.warning(f"Ignoring unknown config key: {key}")
            config_data.pop(key)

        return SystemConfig(**config_data)

    def ensure_output_dir(self) -> Path:
        """Create the output directory on demand"""
        path = Path(self.system_config.output_dir)
        path.mkdir(parents=True, exist_ok=True)
        return path

    def save_config(self, path: Optional[str] = None):
        """Save current configuration to file"""
        target = path or self.config_file
        with open(target, 'w') as f:
            json.dump({'system': asdict(self.system_config)}, f, indent=2)

        logger.info(f"Configuration saved to {target}")

    def validate_config(self) -> bool:
        """Validate configuration settings"""
        cfg = self.system_config
        errors = []

        if cfg.max_workers < 1:
            errors.append("max_workers must be at least 1")

        if cfg.newton_max_steps < 1:
            errors.append("newton_max_steps must be at least 1")

        for name in ('newton_tol', 'period_tol', 'ray_g_min', 'prune_diameter', 'param_ray_log_min'):
            if getattr(cfg, name) <= 0:
                errors.append(f"{name} must be positive")

        if not 0 < cfg.ray_descent < 1:
            errors.append("ray_descent must lie in (0, 1)")

        if not 0 < cfg.newton_damping < 1:
            errors.append("newton_damping must lie in (0, 1)")

        if not 0 < cfg.boundary_rho < 1:
            errors.append("boundary_rho must lie in (0, 1)")

        if cfg.cut_depth < 0:
            errors.append("cut_depth must be non-negative")

        if cfg.oracle_res < 2:
            errors.append("oracle_res must be at least 2")

        if errors:
            for error in errors:
                logger.error(f"Configuration error: {error}")
            return False

        return True


# Singleton instance
_config_manager: Optional[ConfigManager] = None


def get_config() -> ConfigManager:
    """Get the global configuration manager instance"""
    global _config_manager
    if _config_manager is None:
        _config_manager = ConfigManager()
    return _config_manager


def reset_config():
    """Reset the configuration manager (mainly for testing)"""
    global _config_manager
    _config_manager = None
