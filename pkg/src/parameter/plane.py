#!/usr/bin/env python3
"""
Parameter-plane pictures coloured by escape level.
"""

import cmath
import math
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
import pandas as pd

from src.render.classify import NON_ESCAPE_CODE, UNDETERMINED_CODE, classify_fast_array
from src.render.images import BBox, level_palette
from src.utils.config import get_config

logger = logging.getLogger(__name__)


def _code_label(code: int) -> str:
    if code == NON_ESCAPE_CODE:
        return 'non_escape'
    if code == UNDETERMINED_CODE:
        return 'undetermined'
    return f'H{code}'


@dataclass
class ParamPlane:
    """classify_fast codes on a lambda grid"""
    n: int
    bbox: BBox
    resolution: Tuple[int, int]
    maxiter: int
    codes: np.ndarray

    def image(self) -> np.ndarray:
        return level_palette(self.codes)

    def histogram(self) -> pd.DataFrame:
        """Pixel count and fraction per escape level"""
        values, counts = np.unique(self.codes, return_counts=True)
        df = pd.DataFrame({'code': values.astype(int), 'pixels': counts.astype(int)})
        df['label'] = df['code'].map(_code_label)
        df['fraction'] = df['pixels'] / self.codes.size
        return df[['code', 'label', 'pixels', 'fraction']].sort_values('code').reset_index(drop=True)

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'bbox': self.bbox.to_dict(),
            'resolution': list(self.resolution),
            'maxiter': self.maxiter,
            'levels': self.histogram().to_dict(orient='records'),
        }


def param_plane(n: int, bbox: BBox, resolution: Tuple[int, int],
                maxiter: Optional[int] = None) -> ParamPlane:
    maxiter = maxiter or get_config().system_config.render_maxiter
    lams = bbox.centers(resolution)
    codes = classify_fast_array(n, lams, maxiter)
    plane = ParamPlane(n, bbox, tuple(resolution), maxiter, codes)
    logger.info(f"parameter plane n={n} {resolution[0]}x{resolution[1]} over {bbox}")
    return plane


def render_param_plane(n: int, bbox: BBox, resolution: Tuple[int, int],
                       maxiter: Optional[int] = None) -> np.ndarray:
    """Per-pixel classify_fast colouring of the lambda-plane"""
    return param_plane(n, bbox, resolution, maxiter).image()


def symmetry_agreement(n: int, lams: np.ndarray, maxiter: Optional[int] = None) -> Dict[str, float]:
    """
    Fraction of determined parameters whose level is unchanged under
    lambda -> conj(lambda) and lambda -> e^(2 pi i/(n-1)) lambda
    """
    lams = np.asarray(lams, dtype=complex).ravel()
    base = classify_fast_array(n, lams, maxiter)
    images = {
        'conjugation': np.conj(lams),
        'rotation': lams * cmath.exp(2j * math.pi / (n - 1)),
    }
    agreement = {}
    for name, moved in images.items():
        other = classify_fast_array(n, moved, maxiter)
        determined = (base != UNDETERMINED_CODE) & (other != UNDETERMINED_CODE)
        if not determined.any():
            agreement[name] = math.nan
            continue
        agreement[name] = float(np.mean(base[determined] == other[determined]))
    logger.debug(f"symmetry agreement n={n}: {agreement}")
    return agreement
