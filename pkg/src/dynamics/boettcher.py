#!/usr/bin/env python3
"""
Green's function, Boettcher coordinate and rays.

log phi(z) = log z + sum_k n^-(k+1) Log(1 + lambda f^k(z)^-2n) on the direct
domain |z| > R. Elsewhere phi is pulled back through the orbit and the
n^m-fold ambiguity of the root is settled by continuation along a path.
"""

import cmath
import math
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

from scipy.special import expm1, log1p

from src.dynamics.angles import Angle, as_angle
from src.dynamics.core import (
    MapParams,
    deriv,
    eval_map,
    find_hole_center,
    is_infinite,
    orbit_multiplier,
)
from src.utils.config import get_config
from src.utils.error_handling import BranchError, ConvergenceError, DomainError

logger = logging.getLogger(__name__)

TWO_PI = 2 * math.pi
_MAX_PULL = 400
# |z|^n must stay finite while the series is summed
_SERIES_EXPONENT = 300.0
# largest branch jump accepted between path samples, as a fraction of the spacing
_JUMP_FRACTION = 0.25


@dataclass
class RayPolyline:
    """Samples along an external, internal, parameter or cut-ray boundary curve"""
    kind: str
    angle: Angle
    points: List[complex] = field(default_factory=list)
    potentials: List[float] = field(default_factory=list)
    landing_estimate: Optional[complex] = None
    truncated: bool = False
    message: str = ""

    def __len__(self) -> int:
        return len(self.points)

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'angle': self.angle,
            'points': self.points,
            'potentials': self.potentials,
            'landing_estimate': self.landing_estimate,
            'truncated': self.truncated,
            'message': self.message,
        }


def _settings():
    return get_config().system_config


def wrap_angle(x: float) -> float:
    """Representative of x mod 2pi in (-pi, pi]"""
    y = math.remainder(x, TWO_PI)
    return math.pi if y == -math.pi else y


def angle_fraction(angle: Angle, scale: int) -> float:
    """2pi * (scale * angle mod 1), exact for Fractions"""
    if isinstance(angle, Fraction):
        return TWO_PI * float((scale * angle) % 1)
    return TWO_PI * math.fmod(scale * angle, 1.0)


# Green's function

def green(params: MapParams, z: complex, maxiter: Optional[int] = None) -> Optional[float]:
    """
    Escape rate G(z) = lim n^-k log|f^k(z)|

    Returns None when the orbit stays bounded for maxiter steps and inf for
    points whose orbit runs into the pole at 0.
    """
    maxiter = maxiter or _settings().classify_maxiter
    n = params.n
    R = params.escape_radius
    m = 0
    while True:
        if is_infinite(z) or z == 0:
            return math.inf
        if abs(z) > R:
            break
        if m >= maxiter:
            return None
        z = eval_map(params, z)
        m += 1

    total = math.log(abs(z))
    coef = 1.0 / n
    for _ in range(_MAX_PULL):
        u = params.lam * (1.0 / z) ** (2 * n)
        # log|1+u| = log1p(2 Re u + |u|^2) / 2
        total += coef * 0.5 * float(log1p(2 * u.real + abs(u) ** 2))
        if abs(u) * coef < 1e-18 * abs(total) or abs(z) > 10.0 ** (_SERIES_EXPONENT / n):
            break
        z = z ** n * (1 + u)
        coef /= n
    return total / n ** m


# Boettcher coordinate on the direct domain

def _series(params: MapParams, w: complex, with_derivative: bool = False) -> Tuple[complex, complex]:
    """S(w) = sum n^-(k+1) Log(1 + u_k) and dS/dw"""
    n = params.n
    lam = params.lam
    S = 0j
    dS = 0j
    D = 1 + 0j
    z = w
    coef = 1.0 / n
    for k in range(_MAX_PULL):
        zinv = 1.0 / z
        u = lam * zinv ** (2 * n)
        if abs(u) >= 0.5:
            raise DomainError(f"series term {k} not small at w={w} (|u|={abs(u):.3g})")
        term = complex(log1p(u))
        S += coef * term
        if with_derivative:
            dS += coef * (-2 * n * u * zinv) * D / (1 + u)
        if abs(z) > 10.0 ** (_SERIES_EXPONENT / n) or abs(u) * coef <= 1e-17 * abs(S):
            break
        if with_derivative:
            D *= n * z ** (n - 1) * (1 - u)
        z = z ** n * (1 + u)
        coef /= n
    return S, dS


def log_boettcher_direct(params: MapParams, w: complex) -> complex:
    """Principal-branch log phi(w) for w in the direct domain"""
    S, _ = _series(params, w)
    return cmath.log(w) + S


def log_boettcher_jet(params: MapParams, w: complex) -> Tuple[complex, complex]:
    S, dS = _series(params, w, with_derivative=True)
    return cmath.log(w) + S, 1.0 / w + dS


def boettcher(params: MapParams, z: complex) -> complex:
    """
    phi(z) for |z| > R, tangent to the identity at infinity

    Raises:
        DomainError: a series term |lambda f^k(z)^-2n| is not below 1/2
    """
    S, _ = _series(params, z)
    return z * complex(cmath.exp(S))


def boettcher_offset(params: MapParams, z: complex) -> complex:
    """phi(z) - z without cancellation"""
    S, _ = _series(params, z)
    return z * complex(expm1(S))


# Branch continuation

def pull_to_direct(params: MapParams, z: complex, min_iter: int = 0,
                   maxiter: Optional[int] = None) -> Tuple[complex, int, complex]:
    """
    Iterate until the orbit is in the direct domain

    Returns (f^m(z), m, (f^m)'(z)).

    Raises:
        BranchError: the orbit does not escape or passes through 0
    """
    maxiter = maxiter or _settings().classify_maxiter
    R = params.escape_radius
    w = z
    D = 1 + 0j
    m = 0
    while m < min_iter or abs(w) <= R:
        if m >= maxiter:
            raise BranchError(f"orbit of {z} does not escape within {maxiter} steps")
        if w == 0 or is_infinite(w):
            raise BranchError(f"orbit of {z} runs into the pole")
        D *= deriv(params, w)
        w = eval_map(params, w)
        m += 1
    if is_infinite(w):
        raise BranchError(f"orbit of {z} overflows")
    return w, m, D


def continue_branch(evaluate: Callable[[float], Tuple[complex, int, int]],
                    start: complex,
                    knots: Sequence[float],
                    max_depth: int = 16) -> complex:
    """
    Continue a multivalued logarithm along a path.

    ``evaluate(s)`` returns ``(X, M, n)`` such that the wanted value Q at s
    satisfies n^M Q = X mod 2 pi i. Between consecutive knots the path is
    bisected until every jump is a small fraction of the branch spacing.

    Raises:
        BranchError: bisection depth exhausted or evaluation failed
    """
    def candidate(s: float, previous: complex) -> Tuple[complex, float]:
        X, M, n = evaluate(s)
        scale = float(n) ** M
        j = round((scale * previous - X).imag / TWO_PI)
        value = (X + 2j * math.pi * j) / scale
        spacing = TWO_PI / scale
        return value, abs((value - previous).imag) / spacing

    def step(s_a: float, q_a: complex, s_b: float, depth: int) -> complex:
        value, jump = candidate(s_b, q_a)
        if jump <= _JUMP_FRACTION:
            return value
        if depth >= max_depth:
            raise BranchError(f"branch continuation needs a finer path near s={s_b:.6g}")
        mid = 0.5 * (s_a + s_b)
        q_mid = step(s_a, q_a, mid, depth + 1)
        return step(mid, q_mid, s_b, depth + 1)

    value = start
    for s_a, s_b in zip(knots[:-1], knots[1:]):
        value = step(s_a, value, s_b, 0)
    return value


def polyline(path: Sequence[complex]) -> Tuple[Callable[[float], complex], List[float]]:
    """Linear parameterization of a polyline on [0, len-1]"""
    points = [complex(p) for p in path]

    def point_at(s: float) -> complex:
        i = min(int(math.floor(s)), len(points) - 2)
        frac = s - i
        return points[i] + frac * (points[i + 1] - points[i])

    return point_at, [float(i) for i in range(len(points))]


def log_boettcher_along(params: MapParams, path: Sequence[complex]) -> complex:
    """log phi at the end of ``path``, whose first point lies in the direct domain"""
    path = list(path)
    if abs(path[0]) <= params.escape_radius:
        raise DomainError("reference path must start in the direct domain")
    start = log_boettcher_direct(params, path[0])
    if len(path) == 1:
        return start
    point_at, knots = polyline(path)

    def evaluate(s: float):
        w, m, _ = pull_to_direct(params, point_at(s))
        return log_boettcher_direct(params, w), m, params.n

    return continue_branch(evaluate, start, knots)


def boettcher_extended(params: MapParams, z: complex,
                       reference_path: Optional[Sequence[complex]] = None) -> complex:
    """
    phi(z) for any escaping z

    The modulus is e^G(z); the argument is continued along
    ``reference_path`` (direct domain to z). Without a path the radial
    segment from |z| = 2R is used.
    """
    R = params.escape_radius
    if abs(z) > R and reference_path is None:
        return boettcher(params, z)
    if reference_path is None:
        if z == 0:
            raise DomainError("0 is not in the basin of infinity")
        anchor = z * (2 * R / abs(z))
        reference_path = [anchor + (z - anchor) * k / 32 for k in range(33)]
    else:
        reference_path = list(reference_path)
        if reference_path[-1] != z:
            reference_path.append(z)
    return cmath.exp(log_boettcher_along(params, reference_path))


# Rays

def descent_iterations(params: MapParams, G: float, min_iter: int) -> int:
    target = math.log(2 * params.escape_radius)
    if G >= target:
        return min_iter
    return max(min_iter, math.ceil(math.log(target / G) / math.log(params.n)))


def ray_residual(params: MapParams, z: complex, G: float, angle: Angle,
                 min_iter: int = 0) -> Tuple[complex, complex]:
    """
    F(z) = log phi(f^m(z)) - n^m (G + 2 pi i angle), imaginary part wrapped

    Returns (F, dF/dz). Zero exactly on the ray of that angle at potential G.
    """
    m0 = descent_iterations(params, G, min_iter)
    w, m, D = pull_to_direct(params, z, min_iter=m0)
    L, dL = log_boettcher_jet(params, w)
    scale = params.n ** m
    F = complex(L.real - scale * G, wrap_angle(L.imag - angle_fraction(angle, scale)))
    return F, dL * D


def solve_ray_point(params: MapParams, seed: complex, G: float, angle: Angle,
                    min_iter: int = 0, max_steps: Optional[int] = None) -> complex:
    """
    Newton for the point of potential G on the ray of ``angle``

    Raises:
        ConvergenceError: Newton failed from this seed
    """
    cfg = _settings()
    max_steps = max_steps or cfg.newton_max_steps
    z = complex(seed)
    try:
        F, dF = ray_residual(params, z, G, angle, min_iter)
    except (BranchError, DomainError) as e:
        raise ConvergenceError(f"ray seed {seed} is not usable: {e}") from e

    for _ in range(max_steps):
        # rounding floor grows with the derivative of the pulled-back map
        floor = 1e-11 + 1e-15 * abs(dF) * max(1.0, abs(z))
        if abs(F) <= floor:
            return z
        if dF == 0:
            raise ConvergenceError("singular ray derivative")
        delta = F / dF
        for _ in range(40):
            trial = z - delta
            try:
                Ft, dFt = ray_residual(params, trial, G, angle, min_iter)
                if abs(Ft) < abs(F):
                    break
            except (BranchError, DomainError):
                pass
            delta *= cfg.newton_damping
        else:
            if abs(F) <= 100 * floor:
                return z
            raise ConvergenceError(f"ray Newton stalled at z={z}, |F|={abs(F):.3e}")
        z, F, dF = trial, Ft, dFt

    if abs(F) <= 1e-9 + 100 * floor:
        return z
    raise ConvergenceError(f"ray Newton did not converge (|F|={abs(F):.3e})")


def aitken_limit(points: Sequence[complex]) -> Optional[complex]:
    """Delta-squared extrapolation from the last three samples"""
    if len(points) < 3:
        return points[-1] if points else None
    z0, z1, z2 = points[-3], points[-2], points[-1]
    d1, d2 = z1 - z0, z2 - z1
    denom = d2 - d1
    if abs(denom) <= 1e-14 * max(abs(d1), abs(d2), 1e-300):
        return z2
    limit = z2 - d2 * d2 / denom
    # reject extrapolations that jump further than the sampled tail
    if abs(limit - z2) > 10 * abs(z2 - z0):
        return z2
    return limit


def _trace(params: MapParams,
           kind: str,
           label: Angle,
           angle: Angle,
           seed: complex,
           G_start: float,
           G_min: float,
           min_iter: int,
           steps: Optional[int],
           to_potential: Callable[[float], float]) -> RayPolyline:
    cfg = _settings()
    ray = RayPolyline(kind=kind, angle=label)
    G = G_start
    z = seed
    previous = None
    count = 0
    while G >= G_min * (1 - 1e-12):
        if steps is not None and count >= steps:
            break
        guess = z
        if previous is not None:
            guess = z + (z - previous) * cfg.ray_descent
        try:
            try:
                point = solve_ray_point(params, guess, G, angle, min_iter)
            except ConvergenceError:
                point = solve_ray_point(params, z, G, angle, min_iter)
        except ConvergenceError as e:
            ray.truncated = True
            ray.message = f"stopped at potential {G:.3e}: {e}"
            logger.warning(f"{kind} ray {angle} truncated: {ray.message}")
            break
        previous, z = (z if ray.points else None), point
        ray.points.append(point)
        ray.potentials.append(to_potential(G))
        G *= cfg.ray_descent
        count += 1

    ray.landing_estimate = aitken_limit(ray.points)
    return ray


def trace_external_ray(params: MapParams,
                       t: Angle,
                       G_min: Optional[float] = None,
                       steps: Optional[int] = None) -> RayPolyline:
    """
    External ray phi^-1((1, inf) e^(2 pi i t)) sampled at geometrically
    decreasing potentials, with a landing estimate.
    """
    cfg = _settings()
    t = as_angle(t)
    G_min = G_min or cfg.ray_g_min
    G_start = math.log(cfg.ray_start_factor * params.escape_radius)
    seed = cmath.exp(complex(G_start, angle_fraction(t, 1)))
    return _trace(params, 'external', t, t, seed, G_start, G_min, 0, steps, lambda g: g)


# Riemann coordinate of the trap T

def _inverse_germ(params: MapParams) -> complex:
    """lambda^(1/n) with arg lambda in [0, 2pi)"""
    return abs(params.lam) ** (1.0 / params.n) * cmath.exp(1j * params.arg / params.n)


def _germ_log_phi_f(params: MapParams, w: complex) -> complex:
    """log phi(f(w)) near 0 on the branch with psi(w) ~ w lambda^(-1/n)"""
    n = params.n
    X = log_boettcher_direct(params, eval_map(params, w))
    target = w / _inverse_germ(params)
    best = min(range(n), key=lambda j: abs(cmath.exp(-(X + 2j * math.pi * j) / n) - target))
    return X + 2j * math.pi * best


def riemann_T(params: MapParams, w: complex,
              path: Optional[Sequence[complex]] = None) -> complex:
    """
    psi(w) = phi(f(w))^(-1/n) on the trap component T around 0

    The root is fixed by psi(w)/w -> lambda^(-1/n) at 0 and continued along
    ``path`` (by default the segment from 0 to w).

    Raises:
        BranchError: continuation failed
        DomainError: f(w) is not in the basin of infinity
    """
    if w == 0:
        return 0j
    n = params.n
    r_germ = params.inner_radius / 10
    if path is None:
        if abs(w) <= r_germ:
            return cmath.exp(-_germ_log_phi_f(params, w) / n)
        start = w * (r_germ / abs(w))
        path = [start + (w - start) * k / 32 for k in range(33)]
    else:
        path = list(path)
        if abs(path[0]) > params.inner_radius:
            raise DomainError("psi continuation must start inside the inner radius")
        if path[-1] != w:
            path.append(w)

    point_at, knots = polyline(path)

    def evaluate(s: float):
        image = eval_map(params, point_at(s))
        target, m, _ = pull_to_direct(params, image)
        return log_boettcher_direct(params, target), m, n

    Q = continue_branch(evaluate, _germ_log_phi_f(params, path[0]), knots)
    return cmath.exp(-Q / n)


def trace_internal_ray(params: MapParams,
                       t: Angle,
                       G_min: Optional[float] = None,
                       steps: Optional[int] = None) -> RayPolyline:
    """
    Internal ray psi^-1((0, 1) e^(2 pi i t)) of T, traced from near 0.

    A point w with psi(w) = rho e^(2 pi i t) is a point whose image lies on
    the external ray of angle -nt at potential -n log rho, so the same
    Newton step as for external rays applies with one forced iteration.
    Potentials are stored as the radius rho.
    """
    cfg = _settings()
    t = as_angle(t)
    G_min = G_min or cfg.ray_g_min
    germ = _inverse_germ(params)
    rho0 = (params.inner_radius / 10) / abs(germ)
    G_start = -math.log(rho0)
    seed = germ * rho0 * cmath.exp(1j * angle_fraction(t, 1))
    return _trace(params, 'internal', t, as_angle(-t), seed, G_start, G_min, 1, steps,
                  lambda g: math.exp(-g))


def pullback_ray_to_U(params: MapParams,
                      k: int,
                      t: Angle,
                      center: Optional[complex] = None,
                      ray: Optional[RayPolyline] = None,
                      track_steps: int = 16) -> RayPolyline:
    """
    Internal ray of the component U around v+ mapped onto T by f^(k-2).

    The inverse branch of f^(k-2) is the one sending 0 to the point of
    f^-(k-2)(0) that moves continuously from v+ as lambda moves from the
    hole centre to the current parameter.
    """
    if k < 3:
        raise DomainError("U is only defined for holes of level k >= 3")
    q = k - 2
    if center is None:
        center = find_hole_center(params.n, params.lam, q)
    base = ray or trace_internal_ray(params, t)

    # track the preimage of 0 from the centre, where it equals v+
    z = MapParams(params.n, center).v_plus
    for s in range(1, track_steps + 1):
        lam_s = center + (params.lam - center) * s / track_steps
        z = _solve_preimage(MapParams(params.n, lam_s), z, 0j, q)

    out = RayPolyline(kind='internal-U', angle=as_angle(t))
    for w, radius in zip(base.points, base.potentials):
        try:
            z = _solve_preimage(params, z, w, q)
        except ConvergenceError as e:
            out.truncated = True
            out.message = f"pullback stopped at radius {radius:.6f}: {e}"
            logger.warning(out.message)
            break
        out.points.append(z)
        out.potentials.append(radius)
    out.landing_estimate = aitken_limit(out.points)
    return out


def _solve_preimage(params: MapParams, seed: complex, w: complex, q: int) -> complex:
    """Newton for f^q(z) = w"""
    cfg = _settings()
    z = seed
    for _ in range(cfg.newton_max_steps):
        value, d, _ = orbit_multiplier(params, z, q)
        residual = value - w
        if abs(residual) <= 1e-13 * max(1.0, abs(w)):
            return z
        if d == 0 or is_infinite(value):
            raise ConvergenceError(f"singular preimage Newton at z={z}")
        z -= residual / d
    raise ConvergenceError(f"preimage Newton did not converge from {seed}")
