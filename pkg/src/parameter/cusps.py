#!/usr/bin/env python3
"""
Cusps on the boundary of the escape locus.

A cusp carries a parabolic cycle on the boundary of B: a solution (lambda, z)
of eps f^q(z) = z, (eps f^q)'(z) = 1. The landing point of R_0(theta) is a
cusp exactly when theta is tau-periodic of period q, and eps = -1 when
tau^q(theta/2) = theta/2 + 1/2.
"""

import cmath
import math
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

from src.dynamics.angles import Angle, as_angle, is_exact, is_tau_periodic
from src.dynamics.core import MapParams, eval_map, is_infinite, orbit_multiplier
from src.parameter.multiplier import solve_multiplier_system
from src.parameter.rays import trace_param_ray
from src.utils.error_handling import ConvergenceError, DomainError, retry_with_reseed

logger = logging.getLogger(__name__)

# iterations of eps f^q searched for the slow passage near the parabolic point
_GATE_SEARCH = 4000


@dataclass
class CuspResult:
    """Parabolic parameter reached by a periodic parameter ray"""
    theta: Angle
    lam: complex
    period: int
    sign: int
    parabolic_point: complex
    multiplier: complex
    residual: float
    seed: Optional[Tuple[complex, complex]] = None

    def to_dict(self) -> dict:
        return {
            'theta': self.theta,
            'lambda': self.lam,
            'period': self.period,
            'sign': self.sign,
            'parabolic_point': self.parabolic_point,
            'multiplier': self.multiplier,
            'residual': self.residual,
            'seed': list(self.seed) if self.seed else None,
        }


def zero_ray_cusp(n: int) -> CuspResult:
    """
    Landing point of R_0(0): the double root of z^2n - z^(n+1) + lambda

    lambda_* = ((n-1)/2n) ((n+1)/2n)^((n+1)/(n-1)), z_* = ((n+1)/2n)^(1/(n-1)).
    """
    if n < 3:
        raise DomainError(f"degree must be at least 3, got {n}")
    base = (n + 1) / (2 * n)
    lam = (n - 1) / (2 * n) * base ** ((n + 1) / (n - 1))
    z = base ** (1 / (n - 1))
    params = MapParams(n, lam)
    value, multiplier, _ = orbit_multiplier(params, z, 1)
    return CuspResult(
        theta=Fraction(1),
        lam=complex(lam),
        period=1,
        sign=1,
        parabolic_point=complex(z),
        multiplier=multiplier,
        residual=max(abs(value - z), abs(multiplier - 1)),
    )


def cusp_type(n: int, theta: Angle) -> Tuple[int, List[int]]:
    """
    (q, signs) for a tau-periodic angle; the first sign follows the
    half-angle test and even degrees also try the opposite sign.

    Raises:
        DomainError: theta is not exact or not tau-periodic
    """
    theta = as_angle(theta)
    if not is_exact(theta):
        raise DomainError("cusp angles must be exact fractions")
    period = is_tau_periodic(n, theta)
    if period is None:
        raise DomainError(f"{theta} is not tau-periodic; nu({theta}) is not a cusp")
    half = (theta % 1) / 2
    sign = 1 if (n ** period * half) % 1 == half else -1
    signs = [sign, -sign] if n % 2 == 0 else [sign]
    return period, signs


def _gate_point(params: MapParams, period: int, sign: int) -> complex:
    """Point of the critical orbit of eps f^q that moves least, i.e. the slow passage"""
    R = params.escape_radius
    z = params.v_plus
    best, best_move = z, math.inf
    for _ in range(_GATE_SEARCH):
        w = z
        for _ in range(period):
            w = eval_map(params, w)
        w = sign * w
        if is_infinite(w):
            break
        move = abs(w - z)
        if move < best_move:
            best, best_move = z, move
        if abs(w) > R:
            break
        z = w
    return best


def _rotated_zero_cusp(n: int, theta: Fraction) -> Optional[Tuple[complex, complex]]:
    """Exact seed for theta = j/(n-1), the rotations of the zero ray"""
    if (theta * (n - 1)) % 1 != 0:
        return None
    base = zero_ray_cusp(n)
    turn = float(theta % 1)
    return (base.lam * cmath.exp(2j * math.pi * turn),
            base.parabolic_point * cmath.exp(1j * math.pi * turn))


@retry_with_reseed(max_attempts=4)
def _solve_cusp(n: int, theta: Fraction, period: int, sign: int, ray, exact_seed,
                tol: float, attempt: int = 0) -> Tuple[complex, complex, float, Tuple[complex, complex]]:
    if exact_seed is not None and attempt == 0:
        lam0, z0 = exact_seed
    else:
        if ray is None:
            raise ConvergenceError(f"no parameter ray {theta} to reseed from")
        points = ray.points
        if not points:
            raise ConvergenceError(f"parameter ray {theta} has no samples to seed from")
        if attempt == 0 and ray.landing_estimate is not None:
            lam0 = ray.landing_estimate
        else:
            lam0 = points[max(0, len(points) - 1 - 3 * max(attempt - 1, 0))]
        z0 = _gate_point(MapParams(n, lam0), period, sign)
    lam, z, residual = solve_multiplier_system(n, lam0, z0, period, sign, 1.0, tol=tol)
    return lam, z, residual, (complex(lam0), complex(z0))


def find_cusp(n: int, theta: Angle, ray=None,
              seed: Optional[Tuple[complex, complex]] = None,
              tol: float = 1e-10) -> CuspResult:
    """
    Cusp at the landing point of R_0(theta) for tau-periodic theta

    Seeds come from the traced parameter ray: lambda from its landing
    estimate or last samples, z from the slow passage of the critical orbit
    near the nascent parabolic cycle. ``seed`` overrides both. A solution
    is accepted once both equations hold to ``tol``.

    Raises:
        DomainError: theta is not tau-periodic
        ConvergenceError: every seed failed; the message lists them
    """
    theta = as_angle(theta)
    period, signs = cusp_type(n, theta)
    exact_seed = seed or _rotated_zero_cusp(n, theta)
    if ray is None and exact_seed is None:
        ray = trace_param_ray(n, theta)

    failures = []
    for sign in signs:
        try:
            lam, z, residual, used = _solve_cusp(n, theta, period, sign, ray, exact_seed, tol)
        except ConvergenceError as e:
            failures.append(f"eps={sign}: {e}")
            logger.info(f"cusp {theta} with eps={sign} did not close: {e}")
            continue
        _, multiplier, _ = orbit_multiplier(MapParams(n, lam), z, period, sign)
        logger.info(f"cusp for theta={theta}: lambda={lam}, q={period}, eps={sign}")
        return CuspResult(theta, lam, period, sign, z, multiplier, residual, seed=used)

    raise ConvergenceError(f"no cusp found for theta={theta}: " + "; ".join(failures))
