#!/usr/bin/env python3
"""
Parsing and validation of command-line numeric input
"""

import re
import logging
from fractions import Fraction
from typing import Optional, Dict, Any, List, Tuple

logger = logging.getLogger(__name__)

class InputValidator:
    """Validates and parses textual parameters (angles, complex numbers, boxes)"""

    # Regex patterns for validation
    PATTERNS = {
        'fraction': r'^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$',
        'resolution': r'^\s*(\d+)\s*[xX]\s*(\d+)\s*$',
        'resolution_square': r'^\s*(\d+)\s*$',
    }

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        self.config = config or {}
        self.validation_errors: List[Dict[str, Any]] = []
        self.validation_warnings: List[Dict[str, Any]] = []

    def _error(self, field: str, value: Any, message: str) -> None:
        self.validation_errors.append({'field': field, 'value': value, 'error': message})
        logger.debug(f"Invalid {field} {value!r}: {message}")

    def validate_angle(self, value: Any) -> Optional[Fraction]:
        """
        Parse an exact angle "p/q" (or an integer) into (0,1]

        Args:
            value: Text such as "1/4", "0", "3/4"

        Returns:
            Fraction in (0,1] or None if invalid
        """
        if isinstance(value, Fraction):
            return value % 1 or Fraction(1)
        if value is None or str(value).strip() == '':
            return None

        match = re.match(self.PATTERNS['fraction'], str(value))
        if not match:
            self._error('angle', value, 'expected an exact fraction p/q')
            return None

        den = int(match.group(2)) if match.group(2) else 1
        if den == 0:
            self._error('angle', value, 'zero denominator')
            return None

        angle = Fraction(int(match.group(1)), den) % 1
        return angle if angle != 0 else Fraction(1)

    def validate_complex(self, value: Any) -> Optional[complex]:
        """
        Parse a complex number written as "a+bi", "a+bj", "bi" or "a"

        Args:
            value: Text or number

        Returns:
            complex or None if invalid
        """
        if isinstance(value, (int, float, complex)) and not isinstance(value, bool):
            return complex(value)
        if value is None:
            return None

        cleaned = str(value).strip().replace(' ', '').replace('i', 'j').replace('J', 'j')
        if not cleaned:
            return None
        if cleaned.endswith('j') and cleaned[:-1] in ('', '+', '-'):
            cleaned = cleaned[:-1] + '1j'
        cleaned = re.sub(r'([+-])j$', r'\g<1>1j', cleaned)

        try:
            parsed = complex(cleaned)
        except ValueError as e:
            self._error('complex', value, str(e))
            return None

        if parsed != parsed or abs(parsed) == float('inf'):
            self._error('complex', value, 'not a finite number')
            return None
        return parsed

    def validate_lambda(self, value: Any) -> Optional[complex]:
        """Parse a map parameter, which must be non-zero"""
        parsed = self.validate_complex(value)
        if parsed is None:
            return None
        if parsed == 0:
            self._error('lambda', value, 'lambda must be non-zero')
            return None
        return parsed

    def validate_degree(self, value: Any) -> Optional[int]:
        """Parse the degree n (n >= 3)"""
        try:
            n = int(value)
        except (TypeError, ValueError):
            self._error('n', value, 'expected an integer')
            return None
        if n < 3:
            self._error('n', value, 'degree must be at least 3')
            return None
        return n

    def validate_bbox(self, value: Any) -> Optional[Tuple[float, float, float, float]]:
        """
        Parse "xmin,xmax,ymin,ymax"

        Returns:
            Tuple of floats or None if invalid
        """
        if isinstance(value, (tuple, list)):
            parts = list(value)
        else:
            parts = str(value).split(',')

        if len(parts) != 4:
            self._error('bbox', value, 'expected xmin,xmax,ymin,ymax')
            return None

        try:
            xmin, xmax, ymin, ymax = (float(p) for p in parts)
        except ValueError as e:
            self._error('bbox', value, str(e))
            return None

        if not (xmin < xmax and ymin < ymax):
            self._error('bbox', value, 'empty box')
            return None
        return xmin, xmax, ymin, ymax

    def validate_resolution(self, value: Any, minimum: int = 2) -> Optional[Tuple[int, int]]:
        """
        Parse "WxH" or a single side length

        Returns:
            (width, height) or None if invalid
        """
        text = str(value)
        match = re.match(self.PATTERNS['resolution'], text)
        if match:
            width, height = int(match.group(1)), int(match.group(2))
        elif match := re.match(self.PATTERNS['resolution_square'], text):
            width = height = int(match.group(1))
        else:
            self._error('resolution', value, 'expected WxH')
            return None

        if width < minimum or height < minimum:
            self._error('resolution', value, f'resolution must be at least {minimum}x{minimum}')
            return None

        if width * height > 16_000_000:
            self.validation_warnings.append({
                'field': 'resolution',
                'value': value,
                'warning': f'{width}x{height} is a very large grid'
            })
        return width, height

    def validate_float_list(self, value: Any, positive: bool = True) -> Optional[List[float]]:
        """Parse a comma separated list of reals"""
        try:
            items = [float(p) for p in str(value).split(',') if p.strip()]
        except ValueError as e:
            self._error('list', value, str(e))
            return None
        if not items:
            self._error('list', value, 'empty list')
            return None
        if positive and any(x <= 0 for x in items):
            self._error('list', value, 'values must be positive')
            return None
        return items

    def get_validation_report(self) -> Dict[str, Any]:
        """Get validation report"""
        return {
            'errors': self.validation_errors,
            'warnings': self.validation_warnings,
            'error_count': len(self.validation_errors),
            'warning_count': len(self.validation_warnings),
            'is_valid': len(self.validation_errors) == 0
        }
