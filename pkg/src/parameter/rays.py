#!/usr/bin/env python3
"""
Parameter rays R_0(t) = Phi_0^-1((1, inf) e^(2 pi i t)) of the escape locus.

Phi_0(lambda) = phi(v+)^2, so lambda lies on R_0(t) at potential log r
exactly when v+ lies on the dynamical ray of angle t/2 at potential
(log r)/2. Every sample is a Newton solve in lambda against that
dynamical equation. v+ is tracked as a continuous square root so the
half angle stays attached to the same critical value when arg lambda wraps.
"""

import cmath
import math
import logging
from typing import Optional, Tuple

from src.dynamics.angles import Angle, as_angle
from src.dynamics.boettcher import (
    RayPolyline,
    aitken_limit,
    angle_fraction,
    descent_iterations,
    log_boettcher_jet,
    pull_to_direct,
    wrap_angle,
)
from src.dynamics.core import MapParams, is_infinite, iterate, orbit_jets
from src.utils.config import get_config
from src.utils.error_handling import BranchError, ConvergenceError, DomainError

logger = logging.getLogger(__name__)


def _settings():
    return get_config().system_config


def track_root(lam: complex, reference: complex) -> complex:
    """The value of 2 sqrt(lambda) closest to ``reference``"""
    v = 2 * cmath.sqrt(lam)
    return -v if abs(v + reference) < abs(v - reference) else v


def critical_ray_residual(n: int,
                          lam: complex,
                          v_ref: complex,
                          offset: int,
                          G: float,
                          angle: Angle,
                          min_iter: int = 0) -> Tuple[complex, complex, complex]:
    """
    Residual, as a function of lambda, of "f^offset(v) lies on the ray of
    ``angle`` at potential G", where v = +-2 sqrt(lambda) is the root
    nearest ``v_ref``.

    Returns (F, dF/dlambda, v).

    Raises:
        BranchError: the critical orbit hits the pole or does not escape
        DomainError: lambda = 0
    """
    params = MapParams(n, lam)
    v = track_root(params.lam, v_ref)
    start = iterate(params, v, offset)
    if start == 0 or is_infinite(start):
        raise BranchError(f"critical orbit hits the pole at lambda={lam}")
    m0 = descent_iterations(params, G, min_iter)
    w, m, _ = pull_to_direct(params, start, min_iter=m0)
    _, a, b, _, _ = orbit_jets(params, v, offset + m)
    dw = b + a * v / (2 * params.lam)

    L, dL = log_boettcher_jet(params, w)
    scale = n ** m
    F = complex(L.real - scale * G, wrap_angle(L.imag - angle_fraction(angle, scale)))
    # explicit lambda-dependence of the leading series term
    winv = (1.0 / w) ** (2 * n)
    dF = dL * dw + winv / (n * (1 + params.lam * winv))
    return F, dF, v


def solve_critical_point(n: int,
                         seed: complex,
                         v_ref: complex,
                         offset: int,
                         G: float,
                         angle: Angle,
                         min_iter: int = 0,
                         max_steps: Optional[int] = None) -> Tuple[complex, complex]:
    """
    Damped Newton in lambda for a zero of critical_ray_residual

    Returns (lambda, v) with v the tracked critical value.

    Raises:
        ConvergenceError: Newton failed from this seed
    """
    cfg = _settings()
    max_steps = max_steps or cfg.newton_max_steps
    lam = complex(seed)
    try:
        F, dF, v = critical_ray_residual(n, lam, v_ref, offset, G, angle, min_iter)
    except (BranchError, DomainError) as e:
        raise ConvergenceError(f"parameter seed {seed} is not usable: {e}") from e

    for _ in range(max_steps):
        floor = 1e-11 + 1e-15 * abs(dF) * max(1.0, abs(lam))
        if abs(F) <= floor:
            return lam, v
        if dF == 0 or is_infinite(dF):
            raise ConvergenceError(f"singular parameter derivative at lambda={lam}")
        delta = F / dF
        for _ in range(40):
            trial = lam - delta
            try:
                Ft, dFt, vt = critical_ray_residual(n, trial, v, offset, G, angle, min_iter)
                if abs(Ft) < abs(F):
                    break
            except (BranchError, DomainError):
                pass
            delta *= cfg.newton_damping
        else:
            if abs(F) <= 100 * floor:
                return lam, v
            raise ConvergenceError(f"parameter Newton stalled at lambda={lam}, |F|={abs(F):.3e}")
        lam, F, dF, v = trial, Ft, dFt, vt

    if abs(F) <= 1e-9 + 100 * floor:
        return lam, v
    raise ConvergenceError(f"parameter Newton did not converge (|F|={abs(F):.3e})")


def trace_param_ray(n: int,
                    t: Angle,
                    r_min: Optional[float] = None,
                    steps: Optional[int] = None) -> RayPolyline:
    """
    Samples of R_0(t) at geometrically decreasing potentials log r

    The first sample sits at |lambda| = param_anchor_radius where
    Phi_0 ~ 4 lambda; tracing stops once log r drops below log(r_min)
    (default param_ray_log_min). Potentials are stored as log r.
    """
    cfg = _settings()
    t = as_angle(t)
    # half angle of t taken in [0, 1), matching arg v+ = pi t
    half = as_angle((t % 1) / 2)
    anchor = cfg.param_anchor_radius
    log_r_min = math.log(r_min) if r_min is not None else cfg.param_ray_log_min
    if log_r_min <= 0:
        raise DomainError(f"r_min must exceed 1, got {r_min}")

    turn = angle_fraction(t, 1)
    lam = anchor * cmath.exp(1j * turn)
    v = 2 * math.sqrt(anchor) * cmath.exp(0.5j * turn)
    log_r = math.log(4 * anchor)
    previous_log_r = None

    ray = RayPolyline(kind='parameter', angle=t)
    count = 0
    while log_r >= log_r_min * (1 - 1e-12):
        if steps is not None and count >= steps:
            break
        # Phi_0 ~ 4 lambda far out, and the step is tiny near the boundary
        guess = lam if previous_log_r is None else lam * math.exp(log_r - previous_log_r)
        try:
            try:
                point, v_new = solve_critical_point(n, guess, v, 0, log_r / 2, half)
            except ConvergenceError:
                point, v_new = solve_critical_point(n, lam, v, 0, log_r / 2, half)
        except ConvergenceError as e:
            ray.truncated = True
            ray.message = f"stopped at log r = {log_r:.3e}: {e}"
            logger.warning(f"parameter ray {t} truncated: {ray.message}")
            break
        lam, v = point, v_new
        ray.points.append(point)
        ray.potentials.append(log_r)
        previous_log_r = log_r
        log_r *= cfg.ray_descent
        count += 1

    ray.landing_estimate = aitken_limit(ray.points)
    logger.debug(f"parameter ray {t}: {len(ray)} samples, landing estimate {ray.landing_estimate}")
    return ray
