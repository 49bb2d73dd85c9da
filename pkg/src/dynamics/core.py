#!/usr/bin/env python3
"""
Arithmetic of the McMullen map f(z) = z^n + lambda z^-n.

Orbits, escape tests and Newton solvers for periodic points. Everything is
binary64; infinity is represented by ``complex(inf, 0)``.
"""

import cmath
import math
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List, Optional, Tuple

import numpy as np

from src.utils.config import get_config
from src.utils.error_handling import ConvergenceError, DomainError

logger = logging.getLogger(__name__)

INF = complex(math.inf, 0.0)


def is_infinite(z: complex) -> bool:
    return cmath.isinf(z) or cmath.isnan(z)


def principal_arg(lam: complex) -> float:
    """Argument of lambda in [0, 2pi)"""
    theta = math.atan2(lam.imag, lam.real)
    if theta < 0:
        theta += 2 * math.pi
    # atan2 of a tiny negative imaginary part can round up to 2pi
    return theta if theta < 2 * math.pi else 0.0


@dataclass(frozen=True)
class MapParams:
    """The pair (n, lambda) and its derived constants"""
    n: int
    lam: complex

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise DomainError(f"degree must be an integer >= 3, got {self.n}")
        lam = complex(self.lam)
        if lam == 0 or is_infinite(lam):
            raise DomainError(f"lambda must be finite and non-zero, got {self.lam}")
        object.__setattr__(self, 'n', int(self.n))
        object.__setattr__(self, 'lam', lam)

    @cached_property
    def arg(self) -> float:
        return principal_arg(self.lam)

    @cached_property
    def escape_radius(self) -> float:
        """R with |z| >= R  =>  |f(z)| >= 2|z|"""
        a = abs(self.lam)
        n = self.n
        return max(2.0, 2.0 * (2.0 * a) ** (1.0 / (2 * n)), 2.0 * a ** (1.0 / n))

    @cached_property
    def inner_radius(self) -> float:
        """r with |z| <= r  =>  |f(z)| >= R"""
        a = abs(self.lam)
        R = self.escape_radius
        return min((a / (2.0 * R)) ** (1.0 / self.n), (R / 2.0) ** (1.0 / self.n))

    @cached_property
    def c0(self) -> complex:
        n = self.n
        return abs(self.lam) ** (1.0 / (2 * n)) * cmath.exp(1j * self.arg / (2 * n))

    @cached_property
    def v_plus(self) -> complex:
        return 2.0 * math.sqrt(abs(self.lam)) * cmath.exp(0.5j * self.arg)


@dataclass
class Orbit:
    """Forward orbit stopped at escape or maxiter"""
    points: List[complex]
    escaped: bool
    escape_index: Optional[int] = None

    @property
    def last(self) -> complex:
        return self.points[-1]


@dataclass
class Cycle:
    """Fixed point of eps * f^period with its multiplier"""
    period: int
    sign: int
    points: List[complex]
    multiplier: complex
    residual: float = 0.0
    steps: int = 0

    @property
    def full_period(self) -> int:
        """Period as a cycle of f itself"""
        return 2 * self.period if self.sign == -1 else self.period

    @property
    def rho(self) -> complex:
        """Multiplier of the f-cycle"""
        return self.multiplier ** 2 if self.sign == -1 else self.multiplier

    def to_dict(self) -> dict:
        return {
            'period': self.period,
            'sign': self.sign,
            'full_period': self.full_period,
            'points': self.points,
            'multiplier': self.multiplier,
            'rho': self.rho,
            'residual': self.residual,
        }


def _settings():
    return get_config().system_config


def _pow(z: complex, k: int) -> complex:
    try:
        return z ** k
    except OverflowError:
        return INF
    except ZeroDivisionError:
        return INF


def eval_map(params: MapParams, z: complex) -> complex:
    """f(z) on the Riemann sphere: f(0) = f(inf) = inf"""
    if is_infinite(z) or z == 0:
        return INF
    n = params.n
    try:
        zn = z ** n
        value = zn + params.lam / zn
    except (OverflowError, ZeroDivisionError):
        return INF
    return INF if is_infinite(value) else value


def deriv(params: MapParams, z: complex) -> complex:
    """f'(z) = n z^(n-1) - n lambda z^(-n-1)"""
    if z == 0:
        raise DomainError("derivative undefined at z = 0")
    if is_infinite(z):
        raise DomainError("derivative undefined at infinity")
    n = params.n
    return n * _pow(z, n - 1) - n * params.lam / _pow(z, n + 1)


def eval_array(n: int, lam: complex, z: np.ndarray) -> np.ndarray:
    """Vectorized f; zero maps to inf without warnings"""
    z = np.asarray(z, dtype=complex)
    with np.errstate(all='ignore'):
        zn = z ** n
        out = zn + lam / zn
    out[z == 0] = np.inf
    return out


def deriv_array(n: int, lam: complex, z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    with np.errstate(all='ignore'):
        return n * z ** (n - 1) - n * lam * z ** (-n - 1)


def critical_points(params: MapParams) -> List[complex]:
    """c_k = c_0 e^(k pi i / n), k = 0..2n-1"""
    n = params.n
    return [params.c0 * cmath.exp(1j * math.pi * k / n) for k in range(2 * n)]


def critical_values(params: MapParams) -> Tuple[complex, complex]:
    """(v+, v-) with v+ = 2 sqrt(lambda)"""
    return params.v_plus, -params.v_plus


def iterate_orbit(params: MapParams, z0: complex, maxiter: int) -> Orbit:
    """Iterate until |z| > R or maxiter steps; a hit on 0 escapes through the pole"""
    if maxiter < 1:
        raise DomainError("maxiter must be at least 1")
    R = params.escape_radius
    z = complex(z0)
    points = [z]
    if is_infinite(z) or abs(z) > R:
        return Orbit(points, True, 0)

    for _ in range(maxiter):
        z = eval_map(params, z)
        points.append(z)
        if is_infinite(z) or abs(z) > R:
            return Orbit(points, True, len(points) - 1)

    return Orbit(points, False, None)


def iterate(params: MapParams, z: complex, k: int) -> complex:
    for _ in range(k):
        z = eval_map(params, z)
    return z


def orbit_multiplier(params: MapParams, z: complex, p: int, sign: int = 1) -> Tuple[complex, complex, List[complex]]:
    """Returns (eps f^p(z), (eps f^p)'(z), [z, f(z), ..., f^(p-1)(z)])"""
    points = []
    d = 1 + 0j
    for _ in range(p):
        points.append(z)
        d *= deriv(params, z)
        z = eval_map(params, z)
    return sign * z, sign * d, points


def orbit_jets(params: MapParams, z: complex, q: int) -> Tuple[complex, complex, complex, complex, complex]:
    """
    Forward-mode derivatives of f^q at (z, lambda)

    Returns (f^q(z), d/dz, d/dlambda, d2/dz2, d2/dz dlambda).
    """
    n = params.n
    lam = params.lam
    a, b, c, e = 1 + 0j, 0j, 0j, 0j
    for _ in range(q):
        if z == 0 or is_infinite(z):
            raise DomainError("orbit passes through 0 or infinity")
        zinv = 1.0 / z
        fz = n * z ** (n - 1) - n * lam * zinv ** (n + 1)
        fl = zinv ** n
        fzz = n * (n - 1) * z ** (n - 2) + n * (n + 1) * lam * zinv ** (n + 2)
        fzl = -n * zinv ** (n + 1)
        c = fzz * a * a + fz * c
        e = fzz * a * b + fzl * a + fz * e
        b = fz * b + fl
        a = fz * a
        z = eval_map(params, z)
    return z, a, b, c, e


def find_cycle(params: MapParams,
               seed: complex,
               period: int,
               sign: int = 1,
               max_steps: Optional[int] = None,
               tol: Optional[float] = None) -> Cycle:
    """
    Newton's method for eps * f^p(z) = z

    Raises:
        ConvergenceError: no convergence within the step budget, or a
            vanishing Newton derivative
    """
    if period < 1 or sign not in (1, -1):
        raise DomainError(f"invalid period/sign ({period}, {sign})")
    cfg = _settings()
    max_steps = max_steps or cfg.newton_max_steps
    tol = tol or cfg.newton_tol

    z = complex(seed)
    residual = math.inf
    for step in range(max_steps):
        try:
            g, dg, _ = orbit_multiplier(params, z, period, sign)
        except DomainError as e:
            raise ConvergenceError(f"cycle iteration left the plane: {e}") from e
        g -= z
        dg -= 1
        residual = abs(g)
        if residual <= tol * max(1.0, abs(z)):
            break
        if dg == 0 or is_infinite(g):
            raise ConvergenceError(f"singular Newton derivative at z={z}")

        delta = g / dg
        # halve the step while the residual grows
        for _ in range(30):
            trial = z - delta
            try:
                gt = orbit_multiplier(params, trial, period, sign)[0] - trial
            except DomainError:
                gt = INF
            if not is_infinite(gt) and abs(gt) < residual:
                break
            delta *= cfg.newton_damping
        z = trial
        logger.debug(f"find_cycle step {step}: z={z}, residual={residual:.3e}")
    else:
        raise ConvergenceError(
            f"find_cycle did not converge from seed {seed} (p={period}, eps={sign}, residual={residual:.3e})"
        )

    _, multiplier, points = orbit_multiplier(params, z, period, sign)
    return Cycle(period, sign, points, multiplier, residual, step)


def _close(a: complex, b: complex, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a))


def attracting_cycle_from_critical_orbit(params: MapParams,
                                         maxiter: Optional[int] = None) -> Optional[Cycle]:
    """
    Attracting cycle captured by the free critical orbit.

    Returns None when v+ escapes. Detects the symmetric case
    f^(p/2)(z) = -z and reports it as sign -1 with half the period.

    Raises:
        ConvergenceError: the orbit neither escapes nor settles on a cycle
    """
    cfg = _settings()
    maxiter = maxiter or cfg.classify_maxiter
    tol = cfg.period_tol
    max_period = cfg.max_period
    R = params.escape_radius

    z = params.v_plus
    done = 0
    chunk = 32
    while done < maxiter:
        steps = min(chunk, maxiter - done)
        for _ in range(steps):
            if is_infinite(z) or abs(z) > R:
                return None
            z = eval_map(params, z)
        done += steps
        if is_infinite(z) or abs(z) > R:
            return None

        tail = [z]
        w = z
        for _ in range(2 * max_period):
            w = eval_map(params, w)
            if is_infinite(w):
                return None
            tail.append(w)

        period = next(
            (p for p in range(1, max_period + 1)
             if _close(tail[p], tail[0], tol) and _close(tail[2 * p], tail[p], tol)),
            None,
        )
        if period is not None:
            sign, k = 1, period
            if period % 2 == 0 and _close(tail[period // 2], -tail[0], tol):
                sign, k = -1, period // 2
            cycle = find_cycle(params, tail[0], k, sign)
            logger.debug(f"critical orbit settles after {done} steps: period {k}, sign {sign}")
            return cycle
        chunk *= 2

    raise ConvergenceError(f"critical orbit undetermined after {maxiter} iterations (lambda={params.lam})")


def critical_orbit_jets(params: MapParams, q: int) -> Tuple[complex, complex]:
    """f^q(v+) and its total derivative in lambda (v+ moves with lambda)"""
    v = params.v_plus
    value, a, b, _, _ = orbit_jets(params, v, q)
    return value, b + a * v / (2 * params.lam)


def find_hole_center(n: int, seed: complex, q: int,
                     max_steps: Optional[int] = None) -> complex:
    """
    Newton in lambda for f^q(v+) = 0, the centre of a hole of level q + 2

    Raises:
        ConvergenceError: no convergence or singular derivative
    """
    max_steps = max_steps or _settings().newton_max_steps
    lam = complex(seed)
    for _ in range(max_steps):
        try:
            value, d = critical_orbit_jets(MapParams(n, lam), q)
        except DomainError as e:
            raise ConvergenceError(f"critical orbit hit the pole early at lambda={lam}") from e
        if d == 0 or is_infinite(d):
            raise ConvergenceError(f"singular centre Newton at lambda={lam}")
        step = value / d
        lam -= step
        if abs(step) <= 1e-15 * max(abs(lam), 1e-300):
            return lam
    raise ConvergenceError(f"hole centre Newton did not converge from {seed} (q={q})")
