#!/usr/bin/env python3
"""
Census of Sierpinski hole centres, the parameters with f^(k-2)(v+) = 0.

With s_j = f^j(v+)^2 = P_j / Q_j and s_0 = 4 lambda, the recursion
P' = (P^n + lambda Q^n)^2, Q' = P^n Q^n clears every denominator, and the
centres of level k are roots of P^n + lambda Q^n at j = k - 3. That
polynomial has the form lambda^a F(lambda^(n-1)). The square-free part of
F is solved with mpmath at high working precision; each root is polished
and filtered in binary64 against the original orbit.
"""

import cmath
import math
import logging
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import List, Tuple

import mpmath
import numpy as np
import sympy
from cachetools import LRUCache, cached

from src.dynamics.core import MapParams, find_hole_center, is_infinite, iterate
from src.utils.config import get_config
from src.utils.error_handling import ConvergenceError, DomainError, retry_with_reseed

logger = logging.getLogger(__name__)

_CENTER_TOL = 1e-9
_DISTINCT = 1e-6


@dataclass
class HoleCensus:
    """Centres of the level-k holes"""
    n: int
    level: int
    centers: List[complex]
    expected_count: int
    method: str = 'symbolic'
    rejected: int = 0
    message: str = ""
    residuals: List[float] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.centers)

    @property
    def complete(self) -> bool:
        return self.count == self.expected_count

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'level': self.level,
            'count': self.count,
            'expected_count': self.expected_count,
            'complete': self.complete,
            'method': self.method,
            'rejected': self.rejected,
            'message': self.message,
            'centers': self.centers,
            'residuals': self.residuals,
        }


def expected_hole_count(n: int, k: int) -> int:
    return (2 * n) ** (k - 3) * (n - 1)


_polynomial_cache = LRUCache(maxsize=32)


@cached(_polynomial_cache, lock=threading.Lock())
def hole_polynomial(n: int, k: int) -> Tuple[int, int, Tuple[int, ...]]:
    """
    (a, stride, F) with the centre equation equal to lambda^a F(lambda^stride)

    F is square-free with integer coefficients, highest degree first.
    """
    lam = sympy.Symbol('lam')
    L = sympy.Poly(lam, lam)
    P = sympy.Poly(4 * lam, lam)
    Q = sympy.Poly(1, lam)
    for _ in range(k - 3):
        P, Q = (P ** n + L * Q ** n) ** 2, P ** n * Q ** n
    E = P ** n + L * Q ** n

    degree = E.degree()
    terms = {degree - i: int(c) for i, c in enumerate(E.all_coeffs()) if c != 0}
    a = min(terms)
    stride = n - 1 if all((d - a) % (n - 1) == 0 for d in terms) else 1
    top = (max(terms) - a) // stride

    mu = sympy.Symbol('mu')
    F = sympy.Poly([terms.get(a + stride * i, 0) for i in range(top, -1, -1)], mu)
    F = F.sqf_part()
    coefficients = tuple(int(c) for c in F.all_coeffs())
    logger.debug(f"hole polynomial n={n}, k={k}: degree {E.degree()}, reduced square-free degree {len(coefficients) - 1}")
    return a, stride, coefficients


def _polynomial_roots(coefficients: Tuple[int, ...]) -> List[complex]:
    """Roots of an integer polynomial via mpmath at extra precision"""
    cfg = get_config().system_config
    if len(coefficients) < 2:
        return []
    maxsteps = 50 + 4 * len(coefficients)
    with mpmath.workdps(30):
        for _ in range(3):
            try:
                roots = mpmath.polyroots(list(coefficients), maxsteps=maxsteps,
                                         extraprec=cfg.hole_root_extraprec)
                return [complex(r) for r in roots]
            except mpmath.mp.NoConvergence:
                maxsteps *= 4
                logger.info(f"polyroots did not converge, retrying with maxsteps={maxsteps}")
    raise ConvergenceError(f"polyroots failed on a degree-{len(coefficients) - 1} hole polynomial")


@retry_with_reseed(max_attempts=3)
def _polish(n: int, seed: complex, q: int, attempt: int = 0) -> complex:
    # later attempts nudge the seed off a stalled iterate
    return find_hole_center(n, seed * (1 + 1e-9 * attempt), q)


def _center_residual(n: int, lam: complex, q: int) -> float:
    value = iterate(MapParams(n, lam), MapParams(n, lam).v_plus, q)
    return math.inf if is_infinite(value) else abs(value)


def _collect(n: int, k: int, candidates: List[complex], tol: float) -> Tuple[List[complex], List[float], int]:
    """Polish candidates in parallel and keep distinct genuine centres"""
    q = k - 2
    polished = []
    rejected = 0
    workers = get_config().system_config.max_workers
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = {executor.submit(_polish, n, seed, q): seed for seed in candidates}
        for future in as_completed(futures):
            try:
                lam = future.result()
            except (ConvergenceError, DomainError) as e:
                logger.debug(f"candidate {futures[future]} rejected: {e}")
                rejected += 1
                continue
            residual = _center_residual(n, lam, q)
            if residual < tol:
                polished.append((lam, residual))
            else:
                rejected += 1

    centers, residuals = [], []
    for lam, residual in sorted(polished, key=lambda item: (round(item[0].real, 12), round(item[0].imag, 12))):
        if all(abs(lam - c) > _DISTINCT for c in centers):
            centers.append(lam)
            residuals.append(residual)
    return centers, residuals, rejected


def _multistart_candidates(n: int, k: int) -> List[complex]:
    """Polar grid of seeds covering the region where holes live"""
    expected = expected_hole_count(n, k)
    radii = np.geomspace(0.01, 0.6, 24)
    count = max(16, 8 * expected // len(radii))
    angles = 2 * np.pi * (np.arange(count) + 0.5) / count
    return [complex(r * cmath.exp(1j * t)) for r in radii for t in angles]


def sierpinski_hole_centers(n: int, k: int, tol: float = _CENTER_TOL) -> HoleCensus:
    """
    All lambda != 0 with f^(k-2)(v+) = 0

    Levels up to hole_symbolic_max_level use the exact polynomial; deeper
    levels fall back to multi-start Newton. Polished centres with
    |f^(k-2)(v+)| >= tol are rejected. A census whose size differs
    from (2n)^(k-3)(n-1) is returned with complete == False.
    """
    if k < 3:
        raise DomainError(f"hole levels start at 3, got {k}")
    if n < 3:
        raise DomainError(f"degree must be at least 3, got {n}")
    cfg = get_config().system_config
    expected = expected_hole_count(n, k)
    method = 'symbolic'
    message = ""

    candidates: List[complex] = []
    if k <= cfg.hole_symbolic_max_level:
        a, stride, coefficients = hole_polynomial(n, k)
        try:
            for mu in _polynomial_roots(coefficients):
                if mu == 0:
                    continue
                base = mu ** (1.0 / stride) if stride > 1 else mu
                candidates.extend(base * cmath.exp(2j * math.pi * j / stride) for j in range(stride))
        except ConvergenceError as e:
            message = str(e)
            logger.warning(f"symbolic census n={n}, k={k} failed: {e}; using multi-start Newton")
            candidates = []
    if not candidates:
        method = 'newton'
        candidates = _multistart_candidates(n, k)

    centers, residuals, rejected = _collect(n, k, candidates, tol)
    census = HoleCensus(n, k, centers, expected, method, rejected, message, residuals)
    if not census.complete:
        census.message = (census.message + "; " if census.message else "") + \
            f"found {census.count} of {expected} centres"
        logger.warning(f"partial hole census n={n}, k={k}: {census.message}")
    logger.info(f"hole census n={n}, k={k}: {census.count} centres via {method}")
    return census
