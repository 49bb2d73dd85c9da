#!/usr/bin/env python3
"""
Dynamical-plane grids and escape-level classification.

Membership in the basin of infinity B and in the trap T around 0 is decided
by flood fill on pixel grids; results close to a label change are reported
as undetermined rather than guessed.
"""

import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, replace
from enum import Enum, IntEnum
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from src.dynamics.core import MapParams, eval_array, deriv_array, iterate_orbit
from src.render.images import BBox, escape_palette, shade_labels
from src.utils.config import get_config
from src.utils.error_handling import DomainError, ResolutionError

logger = logging.getLogger(__name__)

_ROWS_PER_BLOCK = 32
_LAMBDAS_PER_BLOCK = 4096
_DE_BAILOUT = 1e6
_BARRIER_PIXELS = 2.0


class Label(IntEnum):
    NON_ESCAPING = 0
    B = 1
    T = 2
    OTHER = 3


class ResultKind(str, Enum):
    ESCAPE = "escape"
    NON_ESCAPE = "non_escape"
    UNDETERMINED = "undetermined"


# Codes used by classify_fast_array
NON_ESCAPE_CODE = -1
UNDETERMINED_CODE = -2


@dataclass
class DynGrid:
    """Escape times and basin labels on a pixel grid"""
    params: MapParams
    bbox: BBox
    resolution: Tuple[int, int]
    escape_time: np.ndarray
    maxiter: int
    distance: Optional[np.ndarray] = None
    label: Optional[np.ndarray] = None
    merged: Optional[bool] = None

    def centers(self) -> np.ndarray:
        return self.bbox.centers(self.resolution)

    @property
    def pixel_size(self) -> float:
        return max(self.bbox.pixel_size(self.resolution))

    @property
    def survivor_fraction(self) -> float:
        return float(np.mean(self.escape_time < 0))

    def near_julia(self, pixels: float = 1.0) -> np.ndarray:
        """Survivors and escaping pixels estimated within `pixels` pixel widths of J"""
        mask = self.escape_time < 0
        if self.distance is not None:
            mask |= self.distance < pixels * self.pixel_size
        return mask

    def pixel_label(self, z: complex) -> Tuple[Optional[Label], bool]:
        """Label of the pixel containing z and whether its 3x3 neighbourhood agrees"""
        if self.label is None:
            raise DomainError("grid has no basin labels")
        pixel = self.bbox.pixel_of(z, self.resolution)
        if pixel is None:
            return None, False
        row, col = pixel
        value = self.label[row, col]
        block = self.label[max(row - 1, 0):row + 2, max(col - 1, 0):col + 2]
        return Label(int(value)), bool(np.all(block == value))


@dataclass
class ClassificationResult:
    """Escape level, non-escape, or undetermined at the working resolution"""
    kind: ResultKind
    level: Optional[int] = None
    escape_index: Optional[int] = None
    diagnostics: str = ""

    def __post_init__(self):
        if self.kind == ResultKind.ESCAPE:
            if self.level is None or self.level == 1 or self.level < 0:
                raise ValueError(f"invalid escape level {self.level}")
        elif self.level is not None:
            raise ValueError("only escaping parameters carry a level")

    @property
    def code(self) -> int:
        if self.kind == ResultKind.ESCAPE:
            return self.level
        return NON_ESCAPE_CODE if self.kind == ResultKind.NON_ESCAPE else UNDETERMINED_CODE

    def to_dict(self) -> dict:
        return {
            'kind': self.kind.value,
            'level': self.level,
            'escape_index': self.escape_index,
            'diagnostics': self.diagnostics,
        }


def _settings():
    return get_config().system_config


def _check_resolution(resolution: Tuple[int, int]):
    w, h = resolution
    if w < 2 or h < 2:
        raise ResolutionError(f"resolution must be at least 2x2, got {w}x{h}")


def _escape_block(n: int, lam: complex, R: float, r: float, maxiter: int,
                  z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Escape times with radius R and distance-to-J estimates.

    The estimate is |z| log|z| / |dz| at the bailout, raised to
    (r - |z_m|) / |dz_m| when the orbit first enters the disk |z| <= r,
    where the potential has a log singularity and the first form collapses.
    """
    z = z.copy()
    dz = np.ones(z.shape, dtype=complex)
    et = np.full(z.shape, -1, dtype=np.int64)
    est = np.zeros(z.shape, dtype=float)
    near_pole = np.zeros(z.shape, dtype=float)
    active = np.ones(z.shape, dtype=bool)
    bailout = max(R, _DE_BAILOUT)
    for k in range(maxiter + 1):
        with np.errstate(all='ignore'):
            finite = np.isfinite(z)
            modulus = np.where(finite, np.abs(z), np.inf)
            escaped = active & (modulus > R) & (et < 0)
            et[escaped] = k
            entering = active & (modulus <= r) & (near_pole == 0)
            near_pole[entering] = (r - modulus[entering]) / np.abs(dz[entering])
            pole = active & ~finite
            done = active & finite & (modulus > bailout)
            est[pole] = np.inf
            est[done] = modulus[done] * np.log(modulus[done]) / np.abs(dz[done])
        active &= ~(pole | done)
        if not active.any():
            break
        if k == maxiter:
            # escaped but short of the bailout
            slow = active & (et >= 0)
            est[slow] = np.inf
            break
        with np.errstate(all='ignore'):
            dz[active] = deriv_array(n, lam, z[active]) * dz[active]
            z[active] = eval_array(n, lam, z[active])
    est[np.isnan(est)] = np.inf
    return et, np.maximum(est, near_pole)


def _map_row_blocks(func, centers: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Run func over row blocks in worker threads; one writer fills the result"""
    h = centers.shape[0]
    et = np.empty(centers.shape, dtype=np.int64)
    est = np.empty(centers.shape, dtype=float)
    starts = list(range(0, h, _ROWS_PER_BLOCK))
    workers = max(1, _settings().max_workers)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {
            executor.submit(func, centers[s:s + _ROWS_PER_BLOCK]): s
            for s in starts
        }
        for future in as_completed(futures):
            s = futures[future]
            et[s:s + _ROWS_PER_BLOCK], est[s:s + _ROWS_PER_BLOCK] = future.result()
    return et, est


def escape_time_grid(params: MapParams,
                     bbox: BBox,
                     resolution: Tuple[int, int],
                     maxiter: Optional[int] = None) -> DynGrid:
    """Escape step count per pixel centre with radius R; -1 for survivors"""
    _check_resolution(resolution)
    if maxiter is None:
        maxiter = _settings().render_maxiter
    centers = bbox.centers(resolution)

    def block(z):
        return _escape_block(params.n, params.lam, params.escape_radius,
                             params.inner_radius, maxiter, z)

    et, est = _map_row_blocks(block, centers)
    logger.debug(f"Escape grid {resolution[0]}x{resolution[1]} for lambda={params.lam}: "
                 f"{np.mean(et < 0):.4f} survivors")
    return DynGrid(params, bbox, tuple(resolution), et, maxiter, distance=est)


def _label(grid: DynGrid,
           params: MapParams,
           reference: Optional[DynGrid] = None,
           require_seed: bool = True) -> DynGrid:
    """Flood fill B and T; B lookups outside grid go through reference"""
    R = params.escape_radius
    r = params.inner_radius
    centers = grid.centers()
    beyond = np.abs(centers) > R
    # J thickened to a barrier a few pixels wide
    escaping = ~grid.near_julia(_BARRIER_PIXELS) | beyond
    components, _ = ndimage.label(escaping)

    outer = escaping & beyond
    if reference is not None:
        rows, cols, inside = reference.bbox.pixel_indices(centers, reference.resolution)
        outer |= escaping & inside & (reference.label[rows, cols] == Label.B)
    if reference is None and not outer.any():
        logger.warning("No pixel beyond the escape radius; seeding B from the frame")
        frame = np.zeros_like(escaping)
        frame[0, :] = frame[-1, :] = frame[:, 0] = frame[:, -1] = True
        outer = escaping & frame
    b_ids = np.unique(components[outer])
    in_B = np.isin(components, b_ids[b_ids > 0])

    # pixels whose image lies in B
    images = eval_array(params.n, params.lam, centers)
    with np.errstate(invalid='ignore', over='ignore'):
        image_in_B = ~np.isfinite(images) | (np.abs(images) > R)
    rows, cols, inside = grid.bbox.pixel_indices(images, grid.resolution)
    image_in_B |= inside & in_B[rows, cols]
    if reference is not None:
        rows, cols, inside = reference.bbox.pixel_indices(images, reference.resolution)
        image_in_B |= inside & (reference.label[rows, cols] == Label.B)
    candidates = escaping & image_in_B

    seed = np.abs(centers) <= r
    if not seed.any():
        if require_seed:
            raise ResolutionError(
                f"seed disk |z| <= {r:.3g} holds no pixel centre; use a finer grid")
        in_T = np.zeros_like(escaping)
        merged = False
    else:
        trap, _ = ndimage.label(candidates)
        t_ids = np.unique(trap[seed & candidates])
        in_T = np.isin(trap, t_ids[t_ids > 0])
        seed_components = np.unique(components[seed & escaping])
        merged = bool(np.isin(seed_components, b_ids[b_ids > 0]).any())

    labels = np.full(escaping.shape, Label.NON_ESCAPING, dtype=np.int8)
    labels[escaping] = Label.OTHER
    labels[in_T] = Label.T
    labels[in_B] = Label.B
    return replace(grid, label=labels, merged=merged)


def basin_components(grid: DynGrid, params: MapParams) -> DynGrid:
    """Label B, T, other escaping components and the non-escaping set"""
    labeled = _label(grid, params)
    if labeled.merged:
        logger.info(f"B and T merge for lambda={params.lam}")
    return labeled


def _oracle_grids(params: MapParams, res: int, maxiter: int) -> Tuple[DynGrid, DynGrid]:
    """A global grid covering |z| <= R and a zoomed grid around the trap"""
    R = params.escape_radius
    outer = escape_time_grid(params, BBox.square(0, 1.5 * R), (res, res), maxiter)
    outer = _label(outer, params, require_seed=False)
    rho = min(1.5 * R, 8.0 * params.inner_radius)
    inner = escape_time_grid(params, BBox.square(0, rho), (res, res), maxiter)
    inner = _label(inner, params, reference=outer)
    return outer, inner


def classify_oracle(params: MapParams,
                    res: Optional[int] = None,
                    maxiter: Optional[int] = None) -> ClassificationResult:
    """Escape level from the critical orbit read against flood-filled basins"""
    cfg = _settings()
    res = res or cfg.oracle_res
    grid_maxiter = cfg.oracle_maxiter
    maxiter = maxiter or cfg.classify_maxiter

    orbit = iterate_orbit(params, params.v_plus, maxiter)
    if not orbit.escaped:
        return ClassificationResult(ResultKind.NON_ESCAPE,
                                    diagnostics=f"orbit bounded for {maxiter} steps")
    m = orbit.escape_index
    if m == 0:
        return ClassificationResult(ResultKind.ESCAPE, 0, 0, "|v+| > R")

    try:
        outer, inner = _oracle_grids(params, res, grid_maxiter)
    except ResolutionError as e:
        return ClassificationResult(ResultKind.UNDETERMINED, escape_index=m, diagnostics=str(e))
    merged = outer.merged or inner.merged

    for j, z in enumerate(orbit.points[:m]):
        grid = inner if inner.bbox.contains(z) else outer
        label, certain = grid.pixel_label(z)
        if label is None:
            continue
        if label == Label.T:
            if certain:
                return ClassificationResult(ResultKind.ESCAPE, j + 2, m,
                                            f"f^{j}(v+) in T")
            return ClassificationResult(ResultKind.UNDETERMINED, escape_index=m,
                                        diagnostics=f"f^{j}(v+) next to the edge of T")
        if label == Label.B:
            if merged and certain:
                return ClassificationResult(ResultKind.ESCAPE, 0, m, "v+ in B = T")
            return ClassificationResult(ResultKind.UNDETERMINED, escape_index=m,
                                        diagnostics=f"f^{j}(v+) reached B without passing T")
        if label == Label.NON_ESCAPING:
            return ClassificationResult(ResultKind.UNDETERMINED, escape_index=m,
                                        diagnostics=f"f^{j}(v+) on a non-escaping pixel")

    if merged:
        return ClassificationResult(ResultKind.ESCAPE, 0, m, "v+ in B = T")
    return ClassificationResult(ResultKind.UNDETERMINED, escape_index=m,
                                diagnostics="orbit left the disk of radius R without entering T")


def classify_fast(params: MapParams, maxiter: Optional[int] = None) -> ClassificationResult:
    """Grid-free level heuristic from the critical orbit alone"""
    maxiter = maxiter or _settings().classify_maxiter
    orbit = iterate_orbit(params, params.v_plus, maxiter)
    if not orbit.escaped:
        return ClassificationResult(ResultKind.NON_ESCAPE)
    m = orbit.escape_index
    if m == 0:
        return ClassificationResult(ResultKind.ESCAPE, 0, 0)

    r = params.inner_radius
    before = orbit.points[:m]
    if abs(before[-1]) <= r:
        return ClassificationResult(ResultKind.ESCAPE, m + 1, m)
    if all(abs(z) >= r for z in before):
        return ClassificationResult(ResultKind.ESCAPE, 0, m, "orbit never entered |z| < r")
    return ClassificationResult(ResultKind.UNDETERMINED, escape_index=m,
                                diagnostics="orbit entered |z| < r but escaped from elsewhere")


def _fast_block(n: int, maxiter: int, lams: np.ndarray) -> np.ndarray:
    a = np.abs(lams)
    R = np.maximum(np.maximum(2.0, 2.0 * (2.0 * a) ** (1.0 / (2 * n))), 2.0 * a ** (1.0 / n))
    r = np.minimum((a / (2.0 * R)) ** (1.0 / n), (R / 2.0) ** (1.0 / n))
    z = 2.0 * np.sqrt(lams)

    codes = np.full(lams.shape, NON_ESCAPE_CODE, dtype=np.int64)
    active = np.ones(lams.shape, dtype=bool)
    entered = np.zeros(lams.shape, dtype=bool)
    last_in = np.zeros(lams.shape, dtype=bool)
    for k in range(maxiter + 1):
        with np.errstate(invalid='ignore', over='ignore'):
            out = active & (~np.isfinite(z) | (np.abs(z) > R))
        if k == 0:
            codes[out] = 0
        else:
            codes[out & last_in] = k + 1
            codes[out & ~last_in & ~entered] = 0
            codes[out & ~last_in & entered] = UNDETERMINED_CODE
        active &= ~out
        if k == maxiter or not active.any():
            break
        modulus = np.abs(z)
        entered |= active & (modulus < r)
        last_in = modulus <= r
        z = np.where(active, eval_array(n, lams, np.where(active, z, 1.0)), z)
    return codes


def classify_fast_array(n: int, lams: np.ndarray, maxiter: Optional[int] = None) -> np.ndarray:
    """Vectorized classify_fast codes: level, -1 non-escape, -2 undetermined"""
    if n < 3:
        raise DomainError(f"degree must be >= 3, got {n}")
    maxiter = maxiter or _settings().classify_maxiter
    lams = np.asarray(lams, dtype=complex)
    flat = lams.ravel()
    out = np.empty(flat.shape, dtype=np.int64)
    starts = list(range(0, flat.size, _LAMBDAS_PER_BLOCK))
    workers = max(1, _settings().max_workers)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {
            executor.submit(_fast_block, n, maxiter, flat[s:s + _LAMBDAS_PER_BLOCK]): s
            for s in starts
        }
        for future in as_completed(futures):
            s = futures[future]
            out[s:s + _LAMBDAS_PER_BLOCK] = future.result()
    return out.reshape(lams.shape)


def julia_area_estimate(params: MapParams,
                        resolutions: Sequence[int],
                        bbox: Optional[BBox] = None,
                        maxiter: Optional[int] = None) -> List[float]:
    """Area of pixels touching J: survivors plus escapes closer than a pixel"""
    maxiter = maxiter or _settings().render_maxiter
    bbox = bbox or BBox.square(0, 1.5 * params.escape_radius)
    areas = []
    for res in resolutions:
        grid = escape_time_grid(params, bbox, (res, res), maxiter)
        dx, dy = bbox.pixel_size((res, res))
        touching = int(np.count_nonzero(grid.near_julia(1.0)))
        areas.append(touching * dx * dy)
        logger.info(f"Area estimate at {res}x{res}: {areas[-1]:.6g} ({touching} pixels)")
    return areas


def render_julia(params: MapParams,
                 bbox: BBox,
                 resolution: Tuple[int, int],
                 maxiter: Optional[int] = None) -> np.ndarray:
    """Escape-time image tinted by basin labels"""
    grid = escape_time_grid(params, bbox, resolution, maxiter)
    image = escape_palette(grid.escape_time, grid.maxiter)
    try:
        grid = basin_components(grid, params)
    except ResolutionError as e:
        logger.warning(f"Rendering without basin labels: {e}")
        return image
    return shade_labels(image, grid.label)
