#!/usr/bin/env python3
"""
Conformal coordinates of the escape domains.

Phi_0 = phi(v+)^2 on the Cantor locus H_0, Phi_2 with
Phi_2^(n-2) = phi(f(v+))^2 on the McMullen domain H_2, and
Phi_H = psi(f^(k-2)(v+)) on a Sierpinski hole of level k.
"""

import cmath
import math
import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from src.dynamics.boettcher import continue_branch, log_boettcher_direct, polyline, pull_to_direct, riemann_T
from src.dynamics.core import MapParams, eval_map, iterate, principal_arg
from src.render.classify import classify_fast
from src.utils.config import get_config
from src.utils.error_handling import DomainError

logger = logging.getLogger(__name__)

_KNOTS_PER_EFOLD = 8
# Phi_2 continuation starts at or below this modulus, where lambda Phi_2 ~ 2^(2n/(2-n))
_SMALL_LAMBDA = 1e-8


def radial_path(lam: complex, start_modulus: float) -> List[complex]:
    """Points on the ray through lambda from |z| = start_modulus to lambda, geometric in modulus"""
    lam = complex(lam)
    r = abs(lam)
    if r == 0:
        raise DomainError("lambda = 0 has no radial path")
    count = max(2, int(math.ceil(_KNOTS_PER_EFOLD * abs(math.log(start_modulus / r)))) + 1)
    unit = lam / r
    return [unit * m for m in np.geomspace(start_modulus, r, count)[:-1]] + [lam]


def _continuous_log(path: Sequence[complex]) -> Callable[[float], complex]:
    """log lambda along a polyline, continuous from the principal-arg branch at the start"""
    point_at, _ = polyline(path)
    arg0 = principal_arg(complex(path[0]))
    knot_args = np.unwrap(np.angle(np.asarray(path, dtype=complex)))
    knot_args += arg0 - knot_args[0]

    def log_at(s: float) -> complex:
        z = point_at(s)
        i = min(int(round(s)), len(knot_args) - 1)
        arg = math.atan2(z.imag, z.real)
        arg += 2 * math.pi * round((knot_args[i] - arg) / (2 * math.pi))
        return complex(math.log(abs(z)), arg)

    return log_at


# Phi_0

def _phi0_equation(n: int, lam: complex) -> Tuple[complex, int]:
    """(X, m) with n^m log Phi_0(lambda) = X mod 2 pi i"""
    params = MapParams(n, lam)
    w, m, _ = pull_to_direct(params, params.v_plus)
    return 2 * log_boettcher_direct(params, w), m


def log_phi0(n: int, lam: complex, reference_path: Optional[Sequence[complex]] = None) -> complex:
    """
    log Phi_0(lambda), continued along ``reference_path``

    The path must start where v+ lies in the direct domain; by default it
    is the radial segment from |lambda| = param_anchor_radius, where
    Phi_0 ~ 4 lambda.

    Raises:
        BranchError: continuation failed, e.g. the path leaves H_0
        DomainError: the path starts outside the direct domain
    """
    lam = complex(lam)
    if reference_path is None:
        anchor = get_config().system_config.param_anchor_radius
        path = radial_path(lam, max(anchor, abs(lam)))
    else:
        path = [complex(p) for p in reference_path]
        if path[-1] != lam:
            path.append(lam)

    start, m = _phi0_equation(n, path[0])
    if m != 0:
        raise DomainError(f"reference path starts at {path[0]}, where v+ is not in the direct domain")
    if len(path) == 1:
        return start
    point_at, knots = polyline(path)

    def evaluate(s: float):
        X, m_s = _phi0_equation(n, point_at(s))
        return X, m_s, n

    return continue_branch(evaluate, start, knots)


def phi0(n: int, lam: complex, reference_path: Optional[Sequence[complex]] = None) -> complex:
    """Phi_0(lambda) = phi(v+)^2 for lambda in the Cantor locus"""
    return cmath.exp(log_phi0(n, lam, reference_path))


# Phi_2

def log_phi2_ratio(n: int, lam: complex, reference_path: Optional[Sequence[complex]] = None) -> complex:
    """
    log of 2^(2n) lambda^(n-2) phi(f(v+))^2, which tends to 0 as lambda -> 0

    Continued from the small end of ``reference_path``; by default the
    radial segment from |lambda| = 1e-8 (or |lambda| itself if smaller).
    """
    lam = complex(lam)
    if reference_path is None:
        path = radial_path(lam, min(_SMALL_LAMBDA, abs(lam)))
    else:
        path = [complex(p) for p in reference_path]
        if path[-1] != lam:
            path.append(lam)
    log_at = _continuous_log(path)
    point_at, knots = polyline(path)
    shift = 2 * n * math.log(2)

    def evaluate(s: float):
        params = MapParams(n, point_at(s))
        w, m, _ = pull_to_direct(params, eval_map(params, params.v_plus))
        X = 2 * log_boettcher_direct(params, w)
        return n ** m * ((n - 2) * log_at(s) + shift) + X, m, n

    X0, m0, _ = evaluate(knots[0])
    scale = float(n) ** m0
    j = round(-X0.imag / (2 * math.pi))
    start = (X0 + 2j * math.pi * j) / scale
    if abs(start) > 0.5:
        logger.warning(f"Phi_2 continuation starts far from the normalization (|log|={abs(start):.3g})")
    if len(path) == 1:
        return start
    return continue_branch(evaluate, start, knots)


def phi2(n: int, lam: complex, reference_path: Optional[Sequence[complex]] = None) -> complex:
    """
    Phi_2(lambda) for lambda in the McMullen domain, normalized by
    lambda Phi_2(lambda) -> 2^(2n/(2-n)) as lambda -> 0
    """
    lam = complex(lam)
    ratio = log_phi2_ratio(n, lam, reference_path)
    return 2.0 ** (-2 * n / (n - 2)) / lam * cmath.exp(ratio / (n - 2))


# Phi_H

def phiH(n: int, lam: complex, level: Optional[int] = None) -> complex:
    """
    Phi_H(lambda) = psi(f^(k-2)(v+)) on a Sierpinski hole of level k

    Raises:
        DomainError: lambda is not in a hole of level >= 3
    """
    params = MapParams(n, lam)
    if level is None:
        result = classify_fast(params)
        level = result.level
        if level is None:
            raise DomainError(f"lambda={lam} has no escape level ({result.kind.value})")
    if level < 3:
        raise DomainError(f"Phi_H needs a hole of level >= 3, lambda={lam} has level {level}")
    w = iterate(params, params.v_plus, level - 2)
    return riemann_T(params, w)


def capacity_check(n: int, radii: Sequence[float], arg: float = 0.0) -> List[complex]:
    """Phi_0(lambda) / (4 lambda) at |lambda| in ``radii`` on a fixed argument"""
    ratios = []
    for radius in radii:
        lam = radius * cmath.exp(1j * arg)
        ratios.append(phi0(n, lam) / (4 * lam))
        logger.debug(f"capacity ratio at |lambda|={radius}: {ratios[-1]}")
    return ratios
