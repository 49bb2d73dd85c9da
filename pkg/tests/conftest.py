"""Shared pytest configuration"""

import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.utils.config import reset_config


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: runs longer than a few seconds")


@pytest.fixture(autouse=True)
def fresh_config(monkeypatch, tmp_path):
    """Every test sees default settings, untouched by the developer's environment"""
    for key in list(os.environ):
        if key.startswith("MCMULLEN_") or key in ("MAX_WORKERS", "LOG_LEVEL", "OUTPUT_DIR"):
            monkeypatch.delenv(key, raising=False)
    monkeypatch.setenv("MCMULLEN_CONFIG", str(tmp_path / "missing.json"))
    reset_config()
    yield
    reset_config()
