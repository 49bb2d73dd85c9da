"""
Tests for configuration, input validation, serialization and error handling.
"""

import json
import math
import sys
import os
from fractions import Fraction

import numpy as np
import pandas as pd
import pytest

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.utils.config import ConfigManager, SystemConfig, get_config
from src.utils.data_validation import InputValidator
from src.utils.error_handling import (
    ConvergenceError,
    DomainError,
    ErrorHandler,
    ErrorSeverity,
    retry_with_reseed,
    safe_compute,
)
from src.utils.serialization import (
    complex_columns,
    dumps,
    loads,
    parse_angle,
    parse_complex,
    to_jsonable,
    write_csv,
)


class TestConfig:
    """Test the configuration layer"""

    def test_defaults(self):
        cfg = get_config().system_config
        assert cfg.max_workers == 4
        assert cfg.boundary_rho == 0.999
        assert get_config().validate_config()

    def test_file_and_unknown_keys(self, tmp_path):
        path = tmp_path / 'settings.json'
        path.write_text(json.dumps({'system': {'cut_depth': 7, 'no_such_key': 1}}))
        cfg = ConfigManager(str(path)).system_config
        assert cfg.cut_depth == 7
        assert not hasattr(cfg, 'no_such_key')

    def test_environment(self, monkeypatch, tmp_path):
        monkeypatch.setenv('MCMULLEN_THREADS', '8')
        monkeypatch.setenv('MCMULLEN_SAVE_PNG', 'true')
        cfg = ConfigManager(str(tmp_path / 'none.json')).system_config
        assert cfg.max_workers == 8
        assert cfg.save_png is True

    def test_invalid_environment_ignored(self, monkeypatch, tmp_path):
        monkeypatch.setenv('MCMULLEN_THREADS', 'many')
        assert ConfigManager(str(tmp_path / 'none.json')).system_config.max_workers == 4

    def test_file_beats_environment(self, monkeypatch, tmp_path):
        path = tmp_path / 'settings.json'
        path.write_text(json.dumps({'system': {'max_workers': 3}}))
        monkeypatch.setenv('MCMULLEN_THREADS', '8')
        assert ConfigManager(str(path)).system_config.max_workers == 3

    def test_validation_collects_errors(self, tmp_path):
        manager = ConfigManager(str(tmp_path / 'none.json'))
        manager.system_config = SystemConfig(max_workers=0, boundary_rho=1.5, ray_descent=2.0)
        assert not manager.validate_config()

    def test_save_round_trip(self, tmp_path):
        path = tmp_path / 'saved.json'
        manager = ConfigManager(str(tmp_path / 'none.json'))
        manager.system_config.oracle_res = 64
        manager.save_config(str(path))
        assert ConfigManager(str(path)).system_config.oracle_res == 64

    def test_output_dir(self, tmp_path):
        manager = ConfigManager(str(tmp_path / 'none.json'))
        manager.system_config.output_dir = str(tmp_path / 'out' / 'nested')
        assert manager.ensure_output_dir().is_dir()


class TestInputValidator:
    """Test parsing of command-line text"""

    @pytest.mark.parametrize("text,expected", [
        ("1/4", Fraction(1, 4)),
        ("5/4", Fraction(1, 4)),
        ("0", Fraction(1)),
        ("-1/3", Fraction(2, 3)),
    ])
    def test_angles(self, text, expected):
        assert InputValidator().validate_angle(text) == expected

    def test_angle_errors(self):
        validator = InputValidator()
        assert validator.validate_angle("0.25") is None
        assert validator.validate_angle("1/0") is None
        assert validator.get_validation_report()['error_count'] == 2

    @pytest.mark.parametrize("text,expected", [
        ("0+0.125i", 0.125j),
        ("-0.125", -0.125),
        ("1e-6", 1e-6),
        ("i", 1j),
        ("2-i", 2 - 1j),
    ])
    def test_complex(self, text, expected):
        assert InputValidator().validate_complex(text) == expected

    def test_lambda_must_be_nonzero(self):
        validator = InputValidator()
        assert validator.validate_lambda("0") is None
        assert not validator.get_validation_report()['is_valid']

    def test_degree(self):
        validator = InputValidator()
        assert validator.validate_degree("4") == 4
        assert validator.validate_degree("2") is None

    def test_bbox(self):
        validator = InputValidator()
        assert validator.validate_bbox("-1,1,-0.5,0.5") == (-1.0, 1.0, -0.5, 0.5)
        assert validator.validate_bbox("1,-1,0,1") is None
        assert validator.validate_bbox("1,2,3") is None

    def test_resolution(self):
        validator = InputValidator()
        assert validator.validate_resolution("640x480") == (640, 480)
        assert validator.validate_resolution("64") == (64, 64)
        assert validator.validate_resolution("1x10") is None

    def test_large_resolution_warns(self):
        validator = InputValidator()
        assert validator.validate_resolution("5000x5000") == (5000, 5000)
        assert validator.get_validation_report()['warning_count'] == 1

    def test_float_list(self):
        validator = InputValidator()
        assert validator.validate_float_list("100, 1e3") == [100.0, 1000.0]
        assert validator.validate_float_list("1,-2") is None


class TestSerialization:
    """Test JSON and CSV encoding"""

    def test_complex_and_angle(self):
        data = to_jsonable({'lambda': 0.5 - 2j, 'theta': Fraction(3, 4)})
        assert data == {'lambda': [0.5, -2.0], 'theta': {'num': 3, 'den': 4}}

    def test_non_finite(self):
        assert to_jsonable([math.inf, -math.inf, math.nan]) == ['inf', '-inf', 'nan']

    def test_numpy(self):
        assert to_jsonable(np.array([1 + 1j, 2])) == [[1.0, 1.0], [2.0, 0.0]]
        assert to_jsonable(np.float64(0.1)) == 0.1

    def test_floats_lossless(self):
        x = 0.1 + 0.2
        assert loads(dumps({'x': x}))['x'] == x

    def test_sorted_keys(self):
        assert dumps({'b': 1, 'a': 2}) == b'{"a":2,"b":1}'

    def test_parsers(self):
        assert parse_complex([1.5, -2.0]) == 1.5 - 2j
        assert parse_angle({'num': 1, 'den': 12}) == Fraction(1, 12)
        assert parse_angle('1/12') == Fraction(1, 12)

    def test_complex_columns(self):
        df = pd.DataFrame({'s': [0.0, 0.5], 'lambda': [1 + 2j, 3 - 4j]})
        out = complex_columns(df)
        assert list(out.columns) == ['s', 'lambda_re', 'lambda_im']
        assert list(out['lambda_im']) == [2.0, -4.0]

    def test_csv_precision(self, tmp_path):
        x = 1 / 3
        path = write_csv(tmp_path / 'table.csv', pd.DataFrame({'x': [x]}))
        assert float(pd.read_csv(path)['x'].iloc[0]) == x


class TestErrorHandling:
    """Test retry, safe_compute and the error history"""

    def test_retry_passes_attempt(self):
        seen = []

        @retry_with_reseed(max_attempts=3)
        def solver(attempt=0):
            seen.append(attempt)
            if attempt < 2:
                raise ConvergenceError("stalled")
            return attempt

        assert solver() == 2
        assert seen == [0, 1, 2]

    def test_retry_reraises_last(self):
        @retry_with_reseed(max_attempts=2)
        def solver(attempt=0):
            raise ConvergenceError(f"attempt {attempt}")

        with pytest.raises(ConvergenceError, match="attempt 1"):
            solver()

    def test_retry_ignores_other_errors(self):
        calls = []

        @retry_with_reseed(max_attempts=3)
        def solver(attempt=0):
            calls.append(attempt)
            raise DomainError("outside")

        with pytest.raises(DomainError):
            solver()
        assert calls == [0]

    def test_safe_compute_fallback(self):
        def failing():
            raise ConvergenceError("no root")

        handler = ErrorHandler()
        assert safe_compute(failing, fallback_value=-1, handler=handler, operation='census') == -1
        summary = handler.get_error_summary()
        assert summary['total_errors'] == 1
        assert summary['error_counts'] == {'census:ConvergenceError': 1}

    def test_safe_compute_passes_value(self):
        assert safe_compute(lambda: 42) == 42

    def test_error_severity_recorded(self):
        handler = ErrorHandler()
        record = handler.log_error(DomainError("z = 0"), {'operation': 'deriv'}, ErrorSeverity.LOW)
        assert record['severity'] == 'low'
        assert record['error_type'] == 'DomainError'
