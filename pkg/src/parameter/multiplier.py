#!/usr/bin/env python3
"""
Multiplier map of renormalizable hyperbolic components.

kappa(lambda) = (eps f^k)'(z) at the attracting cycle captured by v+,
where eps = -1 exactly in the symmetric case f^(p/2)(z) = -z (n odd).
The f-cycle multiplier is rho = kappa^2 in that case and kappa otherwise.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from src.dynamics.core import MapParams, attracting_cycle_from_critical_orbit, is_infinite, orbit_jets
from src.utils.config import get_config
from src.utils.error_handling import ConvergenceError, DomainError

logger = logging.getLogger(__name__)


@dataclass
class MultiplierResult:
    """kappa and rho at one parameter"""
    lam: complex
    kappa: complex
    rho: complex
    sign: int
    period: int
    full_period: int
    points: List[complex]

    def to_dict(self) -> dict:
        return {
            'lambda': self.lam,
            'kappa': self.kappa,
            'rho': self.rho,
            'sign': self.sign,
            'period': self.period,
            'full_period': self.full_period,
            'points': self.points,
        }


@dataclass
class MultiplierExpansion:
    """Finite-difference Taylor data of rho at a centre"""
    center: complex
    h: float
    rho: complex
    first: complex
    half_second: complex

    def to_dict(self) -> dict:
        return {
            'center': self.center,
            'h': self.h,
            'rho': self.rho,
            'first': self.first,
            'half_second': self.half_second,
        }


def multiplier_kappa(params: MapParams, maxiter: Optional[int] = None) -> MultiplierResult:
    """
    kappa, rho and the (eps, k, p) type of the attracting cycle

    Raises:
        DomainError: v+ escapes, so there is no attracting cycle
        ConvergenceError: the critical orbit never settles
    """
    cycle = attracting_cycle_from_critical_orbit(params, maxiter)
    if cycle is None:
        raise DomainError(f"critical orbit escapes for lambda={params.lam}; no multiplier")
    if abs(cycle.multiplier) >= 1:
        logger.warning(f"cycle at lambda={params.lam} is not attracting (|kappa|={abs(cycle.multiplier):.6f})")
    return MultiplierResult(
        lam=params.lam,
        kappa=cycle.multiplier,
        rho=cycle.rho,
        sign=cycle.sign,
        period=cycle.period,
        full_period=cycle.full_period,
        points=cycle.points,
    )


def multiplier_expansion(n: int, center: complex, h: float = 1e-5,
                         maxiter: Optional[int] = None) -> MultiplierExpansion:
    """Central differences rho'(center) and rho''(center)/2 with step h"""
    rho = [multiplier_kappa(MapParams(n, center + k * h), maxiter).rho for k in (-1, 0, 1)]
    first = (rho[2] - rho[0]) / (2 * h)
    half_second = (rho[2] - 2 * rho[1] + rho[0]) / (2 * h * h)
    logger.debug(f"rho expansion at {center}: rho'={first}, rho''/2={half_second}")
    return MultiplierExpansion(complex(center), h, rho[1], first, half_second)


def solve_multiplier_system(n: int,
                            lam: complex,
                            z: complex,
                            period: int,
                            sign: int,
                            target: complex = 1.0,
                            max_steps: Optional[int] = None,
                            tol: float = 1e-10) -> Tuple[complex, complex, float]:
    """
    Newton in (lambda, z) for eps f^q(z) = z and (eps f^q)'(z) = target

    The Jacobian is assembled from the orbit jets of f^q. With target 1
    the solution is a parabolic parameter.

    Returns (lambda, z, residual) with residual the larger equation error.

    Raises:
        ConvergenceError: no convergence or a singular Jacobian
    """
    cfg = get_config().system_config
    max_steps = max_steps or cfg.newton_max_steps
    target = complex(target)

    def equations(lam_: complex, z_: complex):
        value, a, b, c, e = orbit_jets(MapParams(n, lam_), z_, period)
        E = np.array([sign * value - z_, sign * a - target])
        J = np.array([[sign * a - 1, sign * b], [sign * c, sign * e]])
        return E, J

    lam, z = complex(lam), complex(z)
    try:
        E, J = equations(lam, z)
    except DomainError as e:
        raise ConvergenceError(f"multiplier seed ({lam}, {z}) is not usable: {e}") from e

    residual = float(np.max(np.abs(E)))
    for step in range(max_steps):
        if residual <= min(tol, 1e-13):
            break
        if not np.all(np.isfinite(J)):
            raise ConvergenceError(f"multiplier system overflowed at lambda={lam}")
        try:
            dz, dlam = np.linalg.solve(J, -E)
        except np.linalg.LinAlgError as e:
            raise ConvergenceError(f"singular multiplier Jacobian at lambda={lam}") from e

        for _ in range(40):
            trial_lam, trial_z = lam + dlam, z + dz
            try:
                Et, Jt = equations(trial_lam, trial_z)
                trial_residual = float(np.max(np.abs(Et)))
                if np.isfinite(trial_residual) and trial_residual < residual:
                    break
            except DomainError:
                pass
            dz *= cfg.newton_damping
            dlam *= cfg.newton_damping
        else:
            break
        moved = abs(trial_lam - lam) + abs(trial_z - z)
        lam, z, E, J, residual = trial_lam, trial_z, Et, Jt, trial_residual
        logger.debug(f"multiplier system step {step}: lambda={lam}, residual={residual:.3e}")
        if moved <= 1e-16 * (abs(lam) + abs(z)):
            break

    if residual > tol or is_infinite(lam) or is_infinite(z):
        raise ConvergenceError(
            f"multiplier system did not converge (q={period}, eps={sign}, target={target}, "
            f"residual={residual:.3e}, lambda={lam}, z={z})"
        )
    return lam, z, residual
