#!/usr/bin/env python3
"""
Pixel geometry, palettes and image files.
"""

import logging
import os
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from PIL import Image

from src.utils.error_handling import ResolutionError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BBox:
    """Axis-parallel rectangle xmin..xmax, ymin..ymax in the complex plane"""
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ResolutionError(f"empty bounding box {self}")

    @classmethod
    def square(cls, center: complex, radius: float) -> 'BBox':
        c = complex(center)
        return cls(c.real - radius, c.real + radius, c.imag - radius, c.imag + radius)

    @property
    def width(self) -> float:
        return self.xmax - self.xmin

    @property
    def height(self) -> float:
        return self.ymax - self.ymin

    def pixel_size(self, resolution: Tuple[int, int]) -> Tuple[float, float]:
        w, h = resolution
        return self.width / w, self.height / h

    def centers(self, resolution: Tuple[int, int]) -> np.ndarray:
        """Pixel centres, shape (h, w); row 0 is the top edge"""
        w, h = resolution
        dx, dy = self.pixel_size(resolution)
        x = self.xmin + (np.arange(w) + 0.5) * dx
        y = self.ymax - (np.arange(h) + 0.5) * dy
        return x[None, :] + 1j * y[:, None]

    def contains(self, z: complex) -> bool:
        return self.xmin <= z.real <= self.xmax and self.ymin <= z.imag <= self.ymax

    def pixel_of(self, z: complex, resolution: Tuple[int, int]) -> Optional[Tuple[int, int]]:
        """(row, col) of the pixel containing z, or None outside the box"""
        if not self.contains(z):
            return None
        w, h = resolution
        dx, dy = self.pixel_size(resolution)
        col = min(int((z.real - self.xmin) / dx), w - 1)
        row = min(int((self.ymax - z.imag) / dy), h - 1)
        return row, col

    def pixel_indices(self, z: np.ndarray, resolution: Tuple[int, int]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorized pixel_of: (rows, cols, inside)"""
        z = np.asarray(z, dtype=complex)
        w, h = resolution
        dx, dy = self.pixel_size(resolution)
        with np.errstate(invalid='ignore'):
            inside = (np.isfinite(z) & (z.real >= self.xmin) & (z.real <= self.xmax)
                      & (z.imag >= self.ymin) & (z.imag <= self.ymax))
            safe = np.where(inside, z, complex(self.xmin, self.ymax))
        cols = np.minimum(((safe.real - self.xmin) / dx).astype(int), w - 1)
        rows = np.minimum(((self.ymax - safe.imag) / dy).astype(int), h - 1)
        return rows, cols, inside

    def to_dict(self) -> dict:
        return {'xmin': self.xmin, 'xmax': self.xmax, 'ymin': self.ymin, 'ymax': self.ymax}


# Palettes

LABEL_COLORS = {
    0: (0, 0, 0),          # non-escaping
    1: (40, 70, 160),      # basin of infinity
    2: (200, 60, 40),      # trap door around 0
    3: (60, 150, 90),      # other preimages
}

LEVEL_COLORS = [
    (30, 50, 120),
    (0, 0, 0),
    (230, 200, 60),
    (200, 80, 40),
    (120, 40, 140),
    (40, 140, 160),
    (90, 170, 60),
    (220, 120, 160),
]
NON_ESCAPE_COLOR = (0, 0, 0)
UNDETERMINED_COLOR = (128, 128, 128)


def escape_palette(escape_time: np.ndarray, maxiter: int) -> np.ndarray:
    """Square-root gradient for escaping pixels, black for survivors"""
    et = np.asarray(escape_time)
    t = np.sqrt(np.clip(et, 0, maxiter) / max(maxiter, 1))
    v = (255.0 * (1.0 - t)).astype(np.uint8)
    img = np.stack([(v * 0.6).astype(np.uint8), (v * 0.9).astype(np.uint8), v], axis=-1)
    img[et < 0] = 0
    return img


def shade_labels(base: np.ndarray, labels: np.ndarray, strength: float = 0.5) -> np.ndarray:
    """Blend basin label colours over an escape-time image"""
    tint = np.zeros_like(base, dtype=float)
    for label, color in LABEL_COLORS.items():
        tint[labels == label] = color
    out = (1 - strength) * base.astype(float) + strength * tint
    out[labels == 0] = 0
    return out.astype(np.uint8)


def level_palette(codes: np.ndarray) -> np.ndarray:
    """Colour escape levels; -1 non-escape, -2 undetermined"""
    codes = np.asarray(codes)
    img = np.zeros(codes.shape + (3,), dtype=np.uint8)
    for k in np.unique(codes[codes >= 0]):
        img[codes == k] = LEVEL_COLORS[int(k) % len(LEVEL_COLORS)]
    img[codes == -1] = NON_ESCAPE_COLOR
    img[codes == -2] = UNDETERMINED_COLOR
    return img


# Files

def write_ppm(path: str, img: np.ndarray) -> str:
    """Binary P6 with maxval 255"""
    img = np.ascontiguousarray(img, dtype=np.uint8)
    h, w, _ = img.shape
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'wb') as f:
        f.write(f"P6\n{w} {h}\n255\n".encode('ascii'))
        f.write(img.tobytes())
    logger.info(f"Wrote {path} ({w}x{h})")
    return path


def write_png(path: str, img: np.ndarray) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    Image.fromarray(np.ascontiguousarray(img, dtype=np.uint8)).save(path)
    logger.info(f"Wrote {path}")
    return path


def read_ppm(path: str) -> np.ndarray:
    """Read a P6 file written by write_ppm"""
    with open(path, 'rb') as f:
        data = f.read()
    header = data.split(b'\n', 3)
    if header[0] != b'P6':
        raise ValueError(f"{path} is not a binary PPM")
    w, h = (int(v) for v in header[1].split())
    pixels = np.frombuffer(header[3], dtype=np.uint8)
    return pixels.reshape(h, w, 3)


def save_image(stem: str, img: np.ndarray, png: bool = False) -> list:
    """Write stem.ppm and optionally stem.png; returns the written paths"""
    paths = [write_ppm(stem + '.ppm', img)]
    if png:
        paths.append(write_png(stem + '.png', img))
    return paths
