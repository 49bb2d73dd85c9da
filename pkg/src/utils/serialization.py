#!/usr/bin/env python3
"""
JSON and CSV serialization of results
"""

import math
import logging
from dataclasses import is_dataclass, fields
from enum import Enum
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Union

import numpy as np
import orjson
import pandas as pd

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"


def _encode_float(x: float) -> Any:
    # JSON has no inf/nan; keep them as strings
    if math.isfinite(x):
        return x
    if math.isnan(x):
        return "nan"
    return "inf" if x > 0 else "-inf"


def to_jsonable(obj: Any) -> Any:
    """Convert results into plain JSON types.

    Complex numbers become ``[re, im]`` and exact angles ``{"num", "den"}``.
    """
    if obj is None or isinstance(obj, (bool, str, int)):
        return obj
    if isinstance(obj, float):
        return _encode_float(obj)
    if isinstance(obj, complex):
        return [_encode_float(obj.real), _encode_float(obj.imag)]
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if is_dataclass(obj):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, Iterable):
        return [to_jsonable(v) for v in obj]
    raise TypeError(f"Cannot serialize {type(obj).__name__}")


def dumps(obj: Any, pretty: bool = False) -> bytes:
    """Serialize to JSON bytes (shortest round-trip floats)"""
    option = orjson.OPT_SORT_KEYS
    if pretty:
        option |= orjson.OPT_INDENT_2
    return orjson.dumps(to_jsonable(obj), option=option)


def loads(data: Union[bytes, str]) -> Any:
    return orjson.loads(data)


def parse_complex(value: Any) -> complex:
    """Inverse of the ``[re, im]`` encoding"""
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    return complex(value)


def parse_angle(value: Any) -> Fraction:
    """Inverse of the ``{"num", "den"}`` encoding"""
    if isinstance(value, Mapping):
        return Fraction(int(value["num"]), int(value["den"]))
    return Fraction(value)


def write_json(path: Union[str, Path], obj: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(obj, pretty=True))
    logger.info(f"Wrote {path}")
    return path


def read_json(path: Union[str, Path]) -> Any:
    return loads(Path(path).read_bytes())


def complex_columns(df: pd.DataFrame) -> pd.DataFrame:
    """Split complex-valued columns into ``<name>_re`` and ``<name>_im``"""
    out = {}
    for name in df.columns:
        col = df[name]
        if np.iscomplexobj(col.to_numpy()) or (
            col.dtype == object and len(col) and isinstance(col.iloc[0], complex)
        ):
            values = col.to_numpy(dtype=complex)
            out[f"{name}_re"] = values.real
            out[f"{name}_im"] = values.imag
        else:
            out[name] = col
    return pd.DataFrame(out)


def write_csv(path: Union[str, Path], df: pd.DataFrame, float_format: Optional[str] = FLOAT_FORMAT) -> Path:
    """Write a table with 17 significant digits and a header row"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    complex_columns(df).to_csv(path, index=False, float_format=float_format)
    logger.info(f"Wrote {path} ({len(df)} rows)")
    return path
