#!/usr/bin/env python3
"""
Error handling and retry logic for the dynamics toolkit
"""

import logging
import functools
from typing import Any, Callable, Optional, Type, Tuple, List
from datetime import datetime
import traceback
from enum import Enum

from tenacity import Retrying, RetryError, stop_after_attempt, retry_if_exception_type

logger = logging.getLogger(__name__)

class DynamicsError(Exception):
    """Base exception for numerical dynamics errors"""
    pass

class ConvergenceError(DynamicsError):
    """Newton iteration failed to converge or hit a singular derivative"""
    pass

class BranchError(DynamicsError):
    """Branch continuation or inverse-branch selection failed"""
    pass

class DomainError(DynamicsError):
    """Input outside the domain of an operation"""
    pass

class ResolutionError(DynamicsError):
    """Grid too coarse for the requested computation"""
    pass

class PreconditionError(DynamicsError):
    """A numerically checked precondition does not hold"""

    def __init__(self, message: str, iterate: Optional[int] = None):
        super().__init__(message)
        self.iterate = iterate


class AngleError(DynamicsError):
    """Symbolic angle search failed or symbols are invalid"""
    pass

class ValidationError(DynamicsError):
    """User input validation errors"""
    pass

class ConfigurationError(DynamicsError):
    """Configuration errors"""
    pass

class ErrorSeverity(Enum):
    """Error severity levels"""
    LOW = "low"        # Result still usable
    MEDIUM = "medium"  # Retry with another seed may succeed
    HIGH = "high"      # Result flagged or truncated
    FATAL = "fatal"    # Cannot continue

class ErrorHandler:
    """Collects numerical failures for later reporting"""

    def __init__(self):
        self.error_history: List[dict] = []
        self.error_counts: dict = {}

    def log_error(self,
                  error: Exception,
                  context: dict,
                  severity: ErrorSeverity = ErrorSeverity.MEDIUM) -> dict:
        """Log an error with context"""
        error_record = {
            'timestamp': datetime.now().isoformat(),
            'error_type': type(error).__name__,
            'error_message': str(error),
            'severity': severity.value,
            'context': context,
            'traceback': traceback.format_exc()
        }

        self.error_history.append(error_record)

        error_key = f"{context.get('operation', 'unknown')}:{type(error).__name__}"
        self.error_counts[error_key] = self.error_counts.get(error_key, 0) + 1

        message = f"{error_record['error_type']} in {context.get('operation', 'unknown')}: {error}"
        if severity == ErrorSeverity.FATAL:
            logger.critical(message)
        elif severity == ErrorSeverity.HIGH:
            logger.error(message)
        elif severity == ErrorSeverity.MEDIUM:
            logger.warning(message)
        else:
            logger.info(message)

        return error_record

    def get_error_summary(self) -> dict:
        """Get summary of errors"""
        return {
            'total_errors': len(self.error_history),
            'error_counts': dict(self.error_counts),
            'recent_errors': [
                {k: e[k] for k in ('error_type', 'error_message', 'severity', 'context')}
                for e in self.error_history[-10:]
            ],
        }

def retry_with_reseed(
    max_attempts: int = 4,
    exceptions: Tuple[Type[Exception], ...] = (ConvergenceError,),
) -> Callable:
    """
    Decorator re-running a solver with a fresh seed after a failure.

    The wrapped function receives an ``attempt`` keyword (0, 1, ...) and is
    expected to perturb its starting point from it. The last failure is
    re-raised unchanged.

    Args:
        max_attempts: Maximum number of attempts
        exceptions: Exception types that trigger another attempt
    """
    def decorator(func: Callable) -> Callable:
        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> Any:
            retrying = Retrying(
                stop=stop_after_attempt(max_attempts),
                retry=retry_if_exception_type(exceptions),
                reraise=True,
            )
            for attempt in retrying:
                with attempt:
                    number = attempt.retry_state.attempt_number - 1
                    if number > 0:
                        logger.info(f"Reseeding {func.__name__}, attempt {number + 1}/{max_attempts}")
                    return func(*args, attempt=number, **kwargs)

        return wrapper
    return decorator

def safe_compute(func: Callable,
                 fallback_value: Any = None,
                 log_errors: bool = True,
                 handler: Optional[ErrorHandler] = None,
                 operation: str = "compute") -> Any:
    """
    Safely execute a computation with error handling

    Args:
        func: Zero-argument callable to execute
        fallback_value: Value to return on error
        log_errors: Whether to log errors
        handler: Optional ErrorHandler receiving the failure
        operation: Label used in the error context

    Returns:
        The computed value or fallback value
    """
    try:
        return func()
    except (DynamicsError, ArithmeticError, ValueError, RetryError) as e:
        if handler is not None:
            handler.log_error(e, {'operation': operation}, ErrorSeverity.HIGH)
        elif log_errors:
            logger.warning(f"{operation} failed: {e}, using fallback value: {fallback_value}")
        return fallback_value
