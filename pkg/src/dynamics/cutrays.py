#!/usr/bin/env python3
"""
Sector decomposition, inverse branches and cut-ray approximations.

The lines l_k = c_k [0, inf] through the critical points cut the sphere into
2n closed sectors S_0..S_n, S_-1..S_-(n-1) in counterclockwise order, each
mapped univalently onto the sphere minus the two critical value rays. The
depth-d approximation of a cut ray is the intersection of the sector pairs
along the itinerary, pulled back through the inverse branches.
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from fractions import Fraction
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from src.dynamics.angles import (
    Angle,
    ThetaMembership,
    as_angle,
    in_theta,
    is_exact,
    is_tau_periodic,
    itinerary,
    tau,
)
from src.dynamics.boettcher import RayPolyline, trace_external_ray
from src.dynamics.core import MapParams, eval_map, is_infinite
from src.utils.config import get_config
from src.utils.error_handling import BranchError, DomainError, PreconditionError

logger = logging.getLogger(__name__)

_ANGLE_TOL = 1e-9
# modulus above which w^2 - 4 lambda is formed as w^2 (1 - 4 lambda / w^2)
_LARGE = 1e150
_PARALLEL_ROWS = 4096
# relative distance below which a sample counts as on the real axis
_AXIS_TOL = 1e-14
# relative offset of the two copies of a boundary piece lying on the real axis
_AXIS_OFFSET = 1e-9


def _settings():
    return get_config().system_config


def _wrap(x):
    """Elementwise representative in [-pi, pi)"""
    return (np.asarray(x) + np.pi) % (2 * np.pi) - np.pi


def _slot(n: int, eps: int) -> int:
    """Position j of S_eps between l_j and l_(j+1)"""
    if not -(n - 1) <= eps <= n:
        raise DomainError(f"sector index {eps} outside 0..{n}, -1..-{n - 1}")
    return eps if eps >= 0 else n - eps


def _partner(n: int, s: int) -> int:
    """The sector -S_s"""
    if s == 0:
        return n
    if s == n:
        return 0
    return -s


def sector_center(params: MapParams, eps: int) -> float:
    """Argument of the bisector of S_eps"""
    n = params.n
    return params.arg / (2 * n) + (_slot(n, eps) + 0.5) * math.pi / n


# Sectors

def sector_of_array(params: MapParams, z: np.ndarray) -> np.ndarray:
    """Sector index of every point; a boundary line l_k belongs to S_k"""
    n = params.n
    rel = (np.angle(np.asarray(z, dtype=complex)) - params.arg / (2 * n)) % (2 * np.pi)
    j = np.clip(np.floor(rel / (np.pi / n)).astype(int), 0, 2 * n - 1)
    return np.where(j <= n, j, -(j - n))


def sector_of(params: MapParams, z: complex) -> int:
    """
    Index of the closed sector containing z

    Raises:
        DomainError: z is 0 or infinity
    """
    if z == 0 or is_infinite(z):
        raise DomainError("0 and infinity lie on every sector")
    return int(sector_of_array(params, np.array([z]))[0])


def in_closed_sector(params: MapParams, z: complex, eps: int, tol: float = _ANGLE_TOL) -> bool:
    if z == 0 or is_infinite(z):
        return True
    offset = float(_wrap(np.angle(z) - sector_center(params, eps)))
    return abs(offset) <= math.pi / (2 * params.n) + tol


# Inverse branches

def _preimage_candidates(n: int, lam: complex, w: np.ndarray) -> np.ndarray:
    """All 2n solutions of f(z) = w, shape w.shape + (2n,)"""
    w = np.asarray(w, dtype=complex)
    with np.errstate(all='ignore'):
        direct = np.sqrt(w * w - 4 * lam)
        scaled = w * np.sqrt(1 - 4 * lam / (w * w))
        s = np.where(np.abs(w) < _LARGE, direct, scaled)
        s = np.where(np.abs(w + s) >= np.abs(w - s), s, -s)
        u_big = np.where(w == 0, np.sqrt(-lam + 0j), 0.5 * (w + s))
        u_small = lam / u_big

        k = np.arange(n)
        roots = []
        for u in (u_big, u_small):
            modulus = np.abs(u)[..., None] ** (1.0 / n)
            phase = (np.angle(u)[..., None] + 2 * np.pi * k) / n
            roots.append(modulus * np.exp(1j * phase))
    return np.concatenate(roots, axis=-1)


def preimages(params: MapParams, w: complex) -> np.ndarray:
    """The 2n preimages of w, overflow-safe for large |w|"""
    if is_infinite(w):
        raise DomainError("preimages of infinity are 0 and infinity")
    return _preimage_candidates(params.n, params.lam, np.array([w]))[0]


def inverse_branch_array(params: MapParams, eps: int, w: np.ndarray) -> np.ndarray:
    """
    Vectorized h_eps: the preimage nearest the bisector of S_eps.

    Points with no candidate in the closed sector (numerically) and
    non-finite inputs come back as NaN.
    """
    n = params.n
    w = np.asarray(w, dtype=complex)
    out = np.full(w.shape, np.nan + 0j)
    finite = np.isfinite(w)
    if not finite.any():
        return out
    candidates = _preimage_candidates(n, params.lam, w[finite])
    offsets = np.abs(_wrap(np.angle(candidates) - sector_center(params, eps)))
    best = np.argmin(offsets, axis=-1)
    chosen = np.take_along_axis(candidates, best[..., None], axis=-1)[..., 0]
    inside = np.take_along_axis(offsets, best[..., None], axis=-1)[..., 0] <= math.pi / (2 * n) + 1e-7
    out[finite] = np.where(inside, chosen, np.nan + 0j)
    return out


def on_critical_value_ray(params: MapParams, w: complex, tol: float = 1e-12) -> bool:
    """Whether w lies on v+ [1, inf] or v- [1, inf]"""
    if is_infinite(w):
        return True
    for v in (params.v_plus, -params.v_plus):
        ratio = w / v
        if ratio.real >= 1 - tol and abs(ratio.imag) <= tol * max(1.0, ratio.real):
            return True
    return False


def inverse_branch(params: MapParams, eps: int, w: complex) -> complex:
    """
    The solution of f(z) = w inside int(S_eps)

    Raises:
        BranchError: w on a critical value ray, or no candidate strictly
            inside the sector
    """
    if on_critical_value_ray(params, w):
        raise BranchError(f"{w} lies on a critical value ray")
    n = params.n
    candidates = _preimage_candidates(n, params.lam, np.array([w]))[0]
    offsets = np.abs(_wrap(np.angle(candidates) - sector_center(params, eps)))
    best = int(np.argmin(offsets))
    if offsets[best] >= math.pi / (2 * n) - 1e-12:
        raise BranchError(f"no preimage of {w} in the interior of S_{eps}")
    return complex(candidates[best])


# Cut rays

@dataclass
class CutRayApprox:
    """Depth-d approximation of a cut ray: boundary pieces and Cantor-set samples"""
    theta: Angle
    depth: int
    symbols: List[int]
    radii: np.ndarray
    pieces: np.ndarray
    julia_samples: np.ndarray
    real_variant: bool = False
    requested_depth: Optional[int] = None
    diagnostics: List[str] = field(default_factory=list)

    @property
    def contains_zero_and_infinity(self) -> bool:
        moduli = np.abs(self.points())
        return bool(moduli.size and moduli.min() < 1e-3 and moduli.max() > 1e3)

    def points(self) -> np.ndarray:
        """Every finite sample of the boundary pieces and the Cantor set"""
        flat = np.concatenate([self.pieces.ravel(), self.julia_samples.ravel()])
        return flat[np.isfinite(flat)]

    def boundary(self) -> List[RayPolyline]:
        polylines = []
        for row in self.pieces:
            keep = np.isfinite(row)
            polylines.append(RayPolyline(
                kind='cutray-boundary',
                angle=self.theta,
                points=[complex(z) for z in row[keep]],
                potentials=[float(r) for r in self.radii[keep]],
            ))
        return polylines

    def contains(self, params: MapParams, z: complex) -> bool:
        return in_cut_region(params, z, self.symbols, real_variant=self.real_variant)

    def to_dict(self) -> dict:
        return {
            'theta': self.theta,
            'depth': self.depth,
            'requested_depth': self.requested_depth,
            'symbols': self.symbols,
            'real_variant': self.real_variant,
            'contains_zero_and_infinity': self.contains_zero_and_infinity,
            'pieces': len(self.pieces),
            'julia_samples': self.julia_samples,
            'diagnostics': self.diagnostics,
        }


def in_fundamental_domain(params: MapParams) -> bool:
    """0 < arg lambda < 2pi/(n-1)"""
    return 0 < params.arg < 2 * math.pi / (params.n - 1)


def _is_real_positive(params: MapParams) -> bool:
    return params.lam.imag == 0 and params.lam.real > 0


def _on_punctured_axis(z: complex) -> bool:
    return z != 0 and not is_infinite(z) and abs(z.imag) <= _AXIS_TOL * abs(z)


def in_cut_region(params: MapParams,
                  z: complex,
                  symbols: Sequence[int],
                  real_variant: bool = False) -> bool:
    """
    Whether f^k(z) lies in S_(s_k) union its partner for every listed symbol

    0 and infinity belong to every cut ray. The real variant also removes
    the punctured real axis at every level.
    """
    for s in symbols:
        if z == 0 or is_infinite(z):
            return True
        if real_variant and _on_punctured_axis(z):
            return False
        if not (in_closed_sector(params, z, s) or in_closed_sector(params, z, _partner(params.n, s))):
            return False
        z = eval_map(params, z)
    return True


def theta_symbols(n: int, theta: Angle, depth: int) -> List[int]:
    """Symbols s_0..s_depth of theta"""
    return list(itinerary(n, theta, depth + 1).symbols[:depth + 1])


def _map_rows(func: Callable[[np.ndarray], np.ndarray], rows: np.ndarray) -> np.ndarray:
    """Apply a row-wise numpy function, in worker threads for large inputs"""
    if len(rows) < _PARALLEL_ROWS:
        return func(rows)
    workers = max(1, _settings().max_workers)
    blocks = np.array_split(rows, workers)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return np.concatenate(list(executor.map(func, blocks)))


def _prune(params: MapParams, rows: np.ndarray, diameter: float) -> np.ndarray:
    """Drop empty pieces and pieces whose finite part has collapsed"""
    finite = np.isfinite(rows)
    moduli = np.where(finite, np.abs(np.where(finite, rows, 0)), np.nan)
    with np.errstate(invalid='ignore'):
        middle = finite & (moduli >= params.inner_radius) & (moduli <= params.escape_radius)
    re_lo = np.where(middle, rows.real, np.inf).min(axis=1)
    re_hi = np.where(middle, rows.real, -np.inf).max(axis=1)
    im_lo = np.where(middle, rows.imag, np.inf).min(axis=1)
    im_hi = np.where(middle, rows.imag, -np.inf).max(axis=1)
    has_middle = middle.sum(axis=1) >= 2
    with np.errstate(invalid='ignore'):
        span = np.where(has_middle, np.hypot(re_hi - re_lo, im_hi - im_lo), np.inf)
    return rows[finite.any(axis=1) & (span >= diameter)]


def _sector_boundary(params: MapParams, eps: int, radii: np.ndarray) -> np.ndarray:
    """The two lines bounding S_eps, one row each"""
    n = params.n
    j = _slot(n, eps)
    base = params.arg / (2 * n)
    return np.stack([radii * np.exp(1j * (base + (j + e) * math.pi / n)) for e in (0, 1)])


def _pullback_level(params: MapParams, s: int, pieces: np.ndarray, samples: np.ndarray):
    branches = (s, _partner(params.n, s))
    new_pieces = np.concatenate([_map_rows(partial(inverse_branch_array, params, e), pieces)
                                 for e in branches])
    new_samples = np.concatenate([inverse_branch_array(params, e, samples) for e in branches])
    return new_pieces, new_samples


def _close_at_poles(params: MapParams, pieces: np.ndarray, radii: np.ndarray, extra: int = 8):
    """
    Continue every piece radially from its far end to modulus 1e6 or 1e-6.

    The far end of a sector line is carried to 0 or infinity by every
    inverse branch, where the pulled-back curves are asymptotically radial.
    """
    end = pieces[:, -1]
    ok = np.isfinite(end) & (end != 0)
    safe = np.where(ok, end, 1.0)
    target = np.where(np.abs(safe) > abs(params.c0), 1e6, 1e-6)
    steps = np.linspace(0.0, 1.0, extra + 1)[1:]
    tail = safe[:, None] * (target / np.abs(safe))[:, None] ** steps[None, :]
    tail[~ok] = np.nan
    ratio = radii[-1] / radii[-2]
    more = radii[-1] * ratio ** np.arange(1, extra + 1)
    return np.concatenate([pieces, tail], axis=1), np.concatenate([radii, more])


def _double_along_axis(pieces: np.ndarray) -> np.ndarray:
    """
    Replace every piece meeting the punctured real axis by an upper and a
    lower copy. Samples on the axis move off it by a relative _AXIS_OFFSET;
    samples in the opposite half-plane are dropped from each copy.
    """
    finite = np.isfinite(pieces)
    values = np.where(finite, pieces, 0)
    moduli = np.abs(values)
    on_axis = finite & (moduli > 0) & (np.abs(values.imag) <= _AXIS_TOL * moduli)
    upper = finite & ~on_axis & (values.imag > 0)
    lower = finite & ~on_axis & (values.imag < 0)
    meets = on_axis.any(axis=1) | (upper.any(axis=1) & lower.any(axis=1))
    if not meets.any():
        return pieces

    rows, axis, up, down = pieces[meets], on_axis[meets], upper[meets], lower[meets]
    lift = 1j * _AXIS_OFFSET * np.abs(rows.real)
    above = np.where(axis, rows.real + lift, np.where(down, np.nan + 0j, rows))
    below = np.where(axis, rows.real - lift, np.where(up, np.nan + 0j, rows))
    logger.debug(f"doubled {int(meets.sum())} boundary pieces along the real axis")
    return np.concatenate([pieces[~meets], above, below])


def cut_ray(params: MapParams, theta: Angle, depth: Optional[int] = None) -> CutRayApprox:
    """
    Depth-d approximation of the cut ray of angle theta.

    lambda must be in the open fundamental domain, or real positive with a
    periodic theta (the punctured real axis is then removed at every level).
    If every inverse branch fails at some level the depth is reduced.

    Raises:
        DomainError: theta outside the Cantor set, or lambda outside the
            supported region
    """
    cfg = _settings()
    depth = cfg.cut_depth if depth is None else depth
    if depth < 0:
        raise DomainError("depth must be non-negative")
    n = params.n
    theta = as_angle(theta)

    membership = in_theta(n, theta)
    if membership is ThetaMembership.NO:
        raise DomainError(f"{theta} is not in the Cantor set of angles for n={n}")
    if membership is ThetaMembership.UNDETERMINED:
        logger.warning(f"cut ray of inexact angle {theta}: membership only checked on a prefix")

    real_variant = _is_real_positive(params)
    if real_variant:
        if not is_exact(theta) or theta in (Fraction(1), Fraction(1, 2)) or is_tau_periodic(n, theta) is None:
            raise DomainError("real positive lambda needs a periodic angle other than 1 and 1/2")
    elif not in_fundamental_domain(params):
        raise DomainError(f"lambda={params.lam} is outside the fundamental domain 0 < arg < 2pi/{n - 1}")

    symbols = theta_symbols(n, theta, depth)
    diagnostics = []
    for d in range(depth, -1, -1):
        result, failure = _build(params, theta, symbols[:d + 1], real_variant)
        if result is not None:
            result.requested_depth = depth
            result.diagnostics = diagnostics + result.diagnostics
            return result
        diagnostics.append(failure)
        logger.warning(f"cut ray {theta}: {failure}; retrying at depth {d - 1}")
    raise BranchError(f"cut ray {theta} could not be built")


def _build(params: MapParams, theta: Angle, symbols: List[int], real_variant: bool):
    """(approximation, None) or (None, reason) when a level loses every piece"""
    cfg = _settings()
    n = params.n
    radii = np.geomspace(1e-6, 1e6, cfg.boundary_samples)

    last = symbols[-1]
    pair = (last, _partner(n, last))
    pieces = np.concatenate([_sector_boundary(params, e, radii) for e in pair])
    samples = np.array([abs(params.c0) * np.exp(1j * sector_center(params, e)) for e in pair])
    diagnostics = []

    for level in range(len(symbols) - 2, -1, -1):
        pieces, samples = _pullback_level(params, symbols[level], pieces, samples)
        if real_variant:
            on_axis = np.abs(samples.imag) <= _AXIS_TOL * np.abs(samples)
            samples = np.where(on_axis, np.nan + 0j, samples)
        pieces = _prune(params, pieces, cfg.prune_diameter)
        lost = int(np.count_nonzero(~np.isfinite(samples)))
        if lost:
            diagnostics.append(f"level {level}: {lost} Cantor-set samples lost")
        if len(pieces) == 0:
            return None, f"inverse branches failed for every piece at level {level}"

    pieces, radii = _close_at_poles(params, pieces, radii)
    if real_variant:
        pieces = _double_along_axis(pieces)
    samples = samples[np.isfinite(samples)]
    logger.debug(f"cut ray {theta}: depth {len(symbols) - 1}, {len(pieces)} pieces, "
                 f"{len(samples)} Cantor-set samples")
    return CutRayApprox(theta=theta, depth=len(symbols) - 1, symbols=list(symbols), radii=radii,
                        pieces=pieces, julia_samples=samples, real_variant=real_variant,
                        diagnostics=diagnostics), None


def _lift_by_continuity(params: MapParams, rows: np.ndarray, eps: int) -> np.ndarray:
    """
    Lift every row through f, starting in S_eps at its first finite sample
    and following the nearest preimage afterwards.
    """
    out = np.full(rows.shape, np.nan + 0j)
    current = np.full(len(rows), np.nan + 0j)
    center = sector_center(params, eps)
    for j in range(rows.shape[1]):
        w = rows[:, j]
        finite = np.isfinite(w)
        if not finite.any():
            current[:] = np.nan
            continue
        candidates = np.full((len(rows), 2 * params.n), np.nan + 0j)
        candidates[finite] = _preimage_candidates(params.n, params.lam, w[finite])
        fresh = ~np.isfinite(current)
        by_sector = np.argmin(np.nan_to_num(np.abs(_wrap(np.angle(candidates) - center)), nan=np.inf), axis=1)
        by_distance = np.argmin(np.nan_to_num(np.abs(candidates - current[:, None]), nan=np.inf), axis=1)
        pick = np.where(fresh, by_sector, by_distance)
        chosen = np.take_along_axis(candidates, pick[:, None], axis=1)[:, 0]
        current = np.where(finite, chosen, np.nan + 0j)
        out[:, j] = current
    return out


def cut_ray_preimage(params: MapParams, alpha: Angle, base: CutRayApprox,
                     max_level: int = 64) -> CutRayApprox:
    """
    Cut ray of a preimage angle alpha, tau^N(alpha) = base.theta.

    Each pullback step takes the sector pair of the corresponding symbol of
    alpha (0 pairs with n). When the image curve may cross a critical value
    ray, branches are followed by continuity instead. The external ray of
    alpha is traced as an anchor and must lie in the result.

    Raises:
        DomainError: alpha is not a preimage of base.theta
        PreconditionError: the critical orbit meets the base cut ray
        BranchError: the external ray of alpha is not contained in the result
    """
    n = params.n
    alpha = as_angle(alpha)
    theta = as_angle(base.theta)
    if not is_exact(alpha) or not is_exact(theta):
        raise DomainError("preimage cut rays need exact angles")

    half = as_angle(theta + Fraction(1, 2))
    current = alpha
    N = None
    for k in range(max_level + 1):
        if current in (theta, half):
            N = k
            break
        current = tau(n, current)
    if N is None:
        raise DomainError(f"{alpha} does not reach {theta} within {max_level} steps")

    # f^k of the critical points is f^(k-1)(v+) up to sign; the cut ray is symmetric
    z = params.v_plus
    for k in range(1, N + 1):
        if z != 0 and not is_infinite(z) and base.contains(params, z):
            raise PreconditionError(f"f^{k}(critical point) = {z} lies on the cut ray of {theta}", iterate=k)
        z = eval_map(params, z)

    prefix = list(itinerary(n, alpha, N).symbols[:N])
    pieces, samples = base.pieces, base.julia_samples
    for level in range(N - 1, -1, -1):
        s = prefix[level]
        image_angle = alpha
        for _ in range(level + 1):
            image_angle = tau(n, image_angle)
        crossing_free = in_theta(n, image_angle) is ThetaMembership.YES
        if crossing_free:
            pieces, samples = _pullback_level(params, s, pieces, samples)
        else:
            pieces = np.concatenate([_lift_by_continuity(params, pieces, e) for e in (s, _partner(n, s))])
            samples = np.concatenate([inverse_branch_array(params, e, samples) for e in (s, _partner(n, s))])
        pieces = _prune(params, pieces, _settings().prune_diameter)
    pieces, radii = _close_at_poles(params, pieces, base.radii)
    if base.real_variant:
        pieces = _double_along_axis(pieces)

    result = CutRayApprox(
        theta=alpha,
        depth=base.depth + N,
        symbols=prefix + list(base.symbols),
        radii=radii,
        pieces=pieces,
        julia_samples=samples[np.isfinite(samples)],
        real_variant=base.real_variant,
        requested_depth=base.depth + N,
    )

    anchor = trace_external_ray(params, alpha, steps=24)
    outside = sum(1 for p in anchor.points if not result.contains(params, p))
    if outside:
        raise BranchError(f"preimage cut ray {alpha}: {outside} of {len(anchor)} points of R({alpha}) "
                          f"fall outside the pulled-back region")
    return result


def hausdorff_distance(a: Sequence[complex], b: Sequence[complex]) -> float:
    """
    Symmetric Hausdorff distance between finite point sets

    Raises:
        DomainError: either set is empty
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    if a.size == 0 or b.size == 0:
        raise DomainError("Hausdorff distance of an empty set")
    pa = np.column_stack([a.real, a.imag])
    pb = np.column_stack([b.real, b.imag])
    d_ab, _ = cKDTree(pb).query(pa)
    d_ba, _ = cKDTree(pa).query(pb)
    return float(max(d_ab.max(), d_ba.max()))
