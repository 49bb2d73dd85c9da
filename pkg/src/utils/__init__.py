"""Utility Modules"""

from .config import get_config, reset_config, ConfigManager, SystemConfig
from .error_handling import (
    DynamicsError,
    ConvergenceError,
    BranchError,
    DomainError,
    ResolutionError,
    PreconditionError,
    AngleError,
    ValidationError,
    ConfigurationError,
    ErrorHandler,
    ErrorSeverity,
    retry_with_reseed,
    safe_compute
)
from .data_validation import InputValidator

__all__ = [
    'get_config',
    'reset_config',
    'ConfigManager',
    'SystemConfig',
    'DynamicsError',
    'ConvergenceError',
    'BranchError',
    'DomainError',
    'ResolutionError',
    'PreconditionError',
    'AngleError',
    'ValidationError',
    'ConfigurationError',
    'ErrorHandler',
    'ErrorSeverity',
    'retry_with_reseed',
    'safe_compute',
    'InputValidator'
]
