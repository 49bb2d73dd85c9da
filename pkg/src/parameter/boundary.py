#!/usr/bin/env python3
"""
Boundaries of hyperbolic components and Sierpinski holes by continuation.

A component boundary is approached through kappa(lambda) = rho e^(2 pi i s),
a hole boundary through Phi_H(lambda) = rho e^(2 pi i s), with rho = 1 - delta
fixed. Both are conformal coordinates, so continuing once radially from the
centre and then around the circle gives a closed curve; the distance between
the first and the continued last sample is the closure defect.
"""

import cmath
import math
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from src.dynamics.boettcher import descent_iterations
from src.dynamics.core import MapParams, critical_orbit_jets
from src.parameter.multiplier import multiplier_kappa, solve_multiplier_system
from src.parameter.rays import critical_ray_residual, solve_critical_point
from src.render.classify import classify_fast
from src.utils.config import get_config
from src.utils.error_handling import ConvergenceError, DomainError, retry_with_reseed

logger = logging.getLogger(__name__)

_RADIAL_STEPS = 40
# Phi_H radius where the germ Phi_H ~ lambda_c^(-1/n) (f^(k-2)(v+))' (lambda - lambda_c) seeds the walk
_GERM_RADIUS = 0.05

State = Tuple[complex, complex]
Step = Callable[[State, float], Tuple[State, float]]


@dataclass
class ComponentBoundary:
    """Samples of a level curve close to the boundary of a component or hole"""
    kind: str
    seed: complex
    radius: float
    angles: List[float] = field(default_factory=list)
    lambdas: List[complex] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)
    gaps: List[float] = field(default_factory=list)
    closure_defect: float = math.inf
    max_step: float = 0.0

    @property
    def samples(self) -> Dict[float, complex]:
        return dict(zip(self.angles, self.lambdas))

    def to_dict(self) -> dict:
        return {
            'kind': self.kind,
            'seed': self.seed,
            'radius': self.radius,
            'angles': self.angles,
            'lambdas': self.lambdas,
            'residuals': self.residuals,
            'gaps': self.gaps,
            'closure_defect': self.closure_defect,
            'max_step': self.max_step,
        }


@retry_with_reseed(max_attempts=4)
def _advance(step: Step, state: State, s_from: float, s_to: float, pieces: int,
             attempt: int = 0) -> Tuple[State, float]:
    """Walk s_from -> s_to in pieces * 4^attempt equal substeps"""
    count = pieces * 4 ** attempt
    residual = math.inf
    for i in range(1, count + 1):
        state, residual = step(state, s_from + (s_to - s_from) * i / count)
    return state, residual


def _walk_circle(boundary: ComponentBoundary, radial: Step, angular: Step, start: State,
                 radial_pieces: int, angular_pieces: int, samples: int) -> ComponentBoundary:
    state, residual = _advance(radial, start, 0.0, 1.0, radial_pieces)
    first = state[0]
    boundary.angles.append(0.0)
    boundary.lambdas.append(first)
    boundary.residuals.append(residual)

    last_s = 0.0
    for j in range(1, samples + 1):
        s = j / samples
        try:
            state, residual = _advance(angular, state, last_s, s, angular_pieces)
        except ConvergenceError as e:
            logger.warning(f"{boundary.kind} boundary gap at s={s:.6f}: {e}")
            boundary.gaps.append(s)
            continue
        last_s = s
        if j < samples:
            boundary.angles.append(s)
            boundary.lambdas.append(state[0])
            boundary.residuals.append(residual)

    if not boundary.gaps or boundary.gaps[-1] != 1.0:
        boundary.closure_defect = abs(state[0] - first)
    ring = boundary.lambdas + [state[0]]
    boundary.max_step = max((abs(b - a) for a, b in zip(ring, ring[1:])), default=0.0)
    logger.info(f"{boundary.kind} boundary from {boundary.seed}: {len(boundary.lambdas)} samples, "
                f"closure defect {boundary.closure_defect:.3e}, {len(boundary.gaps)} gaps")
    return boundary


def component_boundary(n: int, seed: complex, samples: int = 256,
                       rho: Optional[float] = None) -> ComponentBoundary:
    """
    Level curve kappa = rho e^(2 pi i s) of the hyperbolic component
    containing ``seed``, sampled at s = j / samples

    Raises:
        DomainError: seed has no attracting cycle
        ConvergenceError: the radial continuation failed
    """
    rho = rho or get_config().system_config.boundary_rho
    result = multiplier_kappa(MapParams(n, seed))
    period, sign = result.period, result.sign
    kappa0 = result.kappa

    def solve(state: State, target: complex) -> Tuple[State, float]:
        lam, z, residual = solve_multiplier_system(n, state[0], state[1], period, sign, target)
        return (lam, z), residual

    def radial(state: State, s: float):
        return solve(state, kappa0 + (rho - kappa0) * s)

    def angular(state: State, s: float):
        return solve(state, rho * cmath.exp(2j * math.pi * s))

    boundary = ComponentBoundary(kind='component', seed=complex(seed), radius=rho)
    return _walk_circle(boundary, radial, angular, (complex(seed), result.points[0]),
                        _RADIAL_STEPS, 1, samples)


def hole_boundary(n: int, center: complex, samples: int = 256,
                  rho: Optional[float] = None, level: Optional[int] = None) -> ComponentBoundary:
    """
    Level curve Phi_H = rho e^(2 pi i s) of the Sierpinski hole with
    centre ``center``

    Phi_H(lambda) = rho e^(2 pi i s) says f^(k-1)(v+) lies on the external
    ray of angle -ns at potential -n log rho, an equation in lambda with
    an n^m-fold angular ambiguity; angular substeps stay well inside it.

    Raises:
        DomainError: center is not in a hole of level >= 3
    """
    cfg = get_config().system_config
    rho = rho or cfg.boundary_rho
    params = MapParams(n, center)
    if level is None:
        level = classify_fast(params).level
    if level is None or level < 3:
        raise DomainError(f"{center} is not in a Sierpinski hole (level {level})")
    offset = level - 2

    _, dw = critical_orbit_jets(params, offset)
    germ = abs(params.lam) ** (-1.0 / n) * cmath.exp(-1j * params.arg / n)
    slope = germ * dw
    G0 = -math.log(_GERM_RADIUS)
    G1 = -math.log(rho)

    def solve(state: State, G: float, s: float) -> Tuple[State, float]:
        angle = (-s) % 1.0
        lam, v = solve_critical_point(n, state[0], state[1], offset, G, angle, min_iter=1)
        F, _, _ = critical_ray_residual(n, lam, v, offset, G, angle, min_iter=1)
        return (lam, v), abs(F)

    def radial(state: State, s: float):
        return solve(state, G0 * (G1 / G0) ** s, 0.0)

    def angular(state: State, s: float):
        return solve(state, G1, s)

    start = (params.lam + _GERM_RADIUS / slope, params.v_plus)
    radial_pieces = max(1, math.ceil(math.log(G0 / G1) / -math.log(cfg.ray_descent)))
    m = descent_iterations(params, G1, 1)
    angular_pieces = max(1, math.ceil(4 * n ** m / samples))

    boundary = ComponentBoundary(kind='hole', seed=complex(center), radius=rho)
    return _walk_circle(boundary, radial, angular, start, radial_pieces, angular_pieces, samples)
