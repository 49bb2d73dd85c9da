#!/usr/bin/env python3
"""
Landing points nu(theta) of parameter rays.

The traced ray only approaches its landing point, very slowly at cusps,
so exact angles are refined: tau-periodic angles through the parabolic
system, strictly preperiodic ones through the postcritically finite
relation f^(l+q)(v+) = sigma f^l(v+) read off the tau-orbit of theta/2.
"""

import logging
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

from cachetools import LRUCache, cached

from src.dynamics.angles import Angle, as_angle, is_exact, is_tau_periodic, tau
from src.dynamics.boettcher import trace_external_ray
from src.dynamics.core import MapParams, critical_orbit_jets, is_infinite, orbit_multiplier
from src.parameter.cusps import find_cusp
from src.parameter.rays import trace_param_ray
from src.utils.config import get_config
from src.utils.error_handling import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

# proximity ratio needed before a landing verdict is given
_VERDICT_RATIO = 3.0

# a refined landing point must lie this close to the ray estimate
_SNAP_FACTOR = 10.0
_SNAP_RELATIVE = 0.05


@dataclass
class PostcriticallyFinite:
    """Parameter with f^(l+q)(v+) = sigma f^l(v+)"""
    theta: Angle
    lam: complex
    preperiod: int
    period: int
    sign: int
    cycle_multiplier: complex
    residual: float

    @property
    def repelling(self) -> bool:
        return abs(self.cycle_multiplier) > 1

    def to_dict(self) -> dict:
        return {
            'theta': self.theta,
            'lambda': self.lam,
            'preperiod': self.preperiod,
            'period': self.period,
            'sign': self.sign,
            'cycle_multiplier': self.cycle_multiplier,
            'repelling': self.repelling,
            'residual': self.residual,
        }


@dataclass
class LandingReport:
    """Where R_lambda(theta/2) lands at lambda = nu(theta)"""
    theta: Angle
    lam: complex
    landing: Optional[complex]
    distance_to_critical_value: float
    distance_to_parabolic: Optional[float]
    verdict: str
    truncated: bool = False

    def to_dict(self) -> dict:
        return {
            'theta': self.theta,
            'lambda': self.lam,
            'landing': self.landing,
            'distance_to_critical_value': self.distance_to_critical_value,
            'distance_to_parabolic': self.distance_to_parabolic,
            'verdict': self.verdict,
            'truncated': self.truncated,
        }


def half_angle_relation(n: int, theta: Fraction) -> Tuple[int, int, int]:
    """
    (l, q, sigma) with tau^(l+q)(theta/2) = tau^l(theta/2) + (0 or 1/2),
    sigma = -1 for the half-turn; l and q minimal.
    """
    theta = as_angle(theta)
    if not is_exact(theta):
        raise DomainError("the preperiodic relation needs an exact angle")
    a = (theta % 1) / 2
    seen = {}
    orbit = []
    j = 0
    while True:
        key = a % Fraction(1, 2)
        if key in seen:
            l = seen[key]
            sign = 1 if a % 1 == orbit[l] % 1 else -1
            return l, j - l, sign
        seen[key] = j
        orbit.append(a)
        a = tau(n, a)
        j += 1


def refine_postcritically_finite(n: int, theta: Angle, seed: complex,
                                 tol: float = 1e-9,
                                 max_steps: Optional[int] = None) -> PostcriticallyFinite:
    """
    Newton in lambda for f^(l+q)(v+) = sigma f^l(v+) from ``seed``

    Raises:
        ConvergenceError: Newton failed or the residual stayed above tol
    """
    max_steps = max_steps or get_config().system_config.newton_max_steps
    l, q, sign = half_angle_relation(n, theta)

    def equation(lam: complex) -> Tuple[complex, complex]:
        params = MapParams(n, lam)
        far, d_far = critical_orbit_jets(params, l + q)
        near, d_near = critical_orbit_jets(params, l)
        return far - sign * near, d_far - sign * d_near

    lam = complex(seed)
    value = complex('inf')
    for _ in range(max_steps):
        try:
            value, d = equation(lam)
        except DomainError as e:
            raise ConvergenceError(f"critical orbit hit the pole at lambda={lam}") from e
        if d == 0 or is_infinite(d):
            raise ConvergenceError(f"singular postcritical Newton at lambda={lam}")
        step = value / d
        lam -= step
        if abs(step) <= 1e-15 * max(abs(lam), 1e-300):
            break
    value, _ = equation(lam)
    residual = abs(value)
    if residual > tol:
        raise ConvergenceError(f"postcritical relation for {theta} not met (|E|={residual:.3e})")

    params = MapParams(n, lam)
    _, multiplier, _ = orbit_multiplier(params, critical_orbit_jets(params, l)[0], q, sign)
    result = PostcriticallyFinite(as_angle(theta), lam, l, q, sign, multiplier, residual)
    if not result.repelling:
        logger.warning(f"cycle reached at nu({theta}) is not repelling (|mult|={abs(multiplier):.6f})")
    return result


_landing_cache = LRUCache(maxsize=256)


@cached(_landing_cache, lock=threading.Lock())
def nu(n: int, theta: Angle, tol: float = 1e-9) -> complex:
    """
    Landing point of R_0(theta)

    Exact angles are refined to the cusp or postcritically finite
    parameter; when refinement fails the extrapolated landing estimate is
    returned with a warning.
    """
    theta = as_angle(theta)
    ray = trace_param_ray(n, theta)
    estimate = ray.landing_estimate
    if estimate is None:
        raise ConvergenceError(f"parameter ray {theta} has no samples")
    if not is_exact(theta):
        return estimate
    try:
        if is_tau_periodic(n, theta):
            lam = find_cusp(n, theta, ray=ray).lam
        else:
            lam = refine_postcritically_finite(n, theta, estimate, tol).lam
    except ConvergenceError as e:
        logger.warning(f"nu({theta}) left unrefined: {e}")
        return estimate
    radius = max(_SNAP_FACTOR * abs(ray.points[-1] - estimate), _SNAP_RELATIVE * abs(estimate))
    if abs(lam - estimate) > radius:
        logger.warning(f"nu({theta}): refined {lam} is {abs(lam - estimate):.3e} from the ray, keeping the estimate")
        return estimate
    return lam


def ray_landing_report(n: int, theta: Angle) -> LandingReport:
    """
    Trace R_lambda(theta/2) at lambda = nu(theta) and compare its landing
    estimate with v+ and with the parabolic cycle (cusps only). The verdict
    is 'critical-value', 'parabolic' or 'ambiguous' when neither distance
    clearly wins.
    """
    theta = as_angle(theta)
    cusp = None
    if is_exact(theta) and is_tau_periodic(n, theta):
        cusp = find_cusp(n, theta)
        lam = cusp.lam
    else:
        lam = nu(n, theta)
    params = MapParams(n, lam)
    ray = trace_external_ray(params, as_angle((theta % 1) / 2))
    landing = ray.landing_estimate

    v = params.v_plus
    d_v = min(abs(landing - v), abs(landing + v)) if landing is not None else float('inf')
    d_beta = None
    if cusp is not None and landing is not None:
        _, _, cycle = orbit_multiplier(params, cusp.parabolic_point, cusp.period, cusp.sign)
        d_beta = min(min(abs(landing - z), abs(landing + z)) for z in cycle)

    if d_beta is None:
        verdict = 'critical-value' if d_v < 1e-3 else 'ambiguous'
    elif d_beta * _VERDICT_RATIO < d_v:
        verdict = 'parabolic'
    elif d_v * _VERDICT_RATIO < d_beta:
        verdict = 'critical-value'
    else:
        verdict = 'ambiguous'
    if verdict == 'ambiguous':
        logger.warning(f"landing of R({theta}/2) at nu({theta}) is ambiguous "
                       f"(|to v+|={d_v:.3e}, |to cycle|={d_beta})")
    return LandingReport(theta, lam, landing, d_v, d_beta, verdict, ray.truncated)
