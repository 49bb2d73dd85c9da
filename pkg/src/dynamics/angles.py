#!/usr/bin/env python3
"""
Symbolic dynamics of tau(theta) = n theta mod 1 on the circle (0, 1].

Exact angles are ``fractions.Fraction``; a ``float`` is treated as an
inexact angle and only ever yields finite prefixes.
"""

import math
import logging
import threading
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import product
from typing import Callable, List, Optional, Sequence, Tuple, Union

from cachetools import LRUCache, cached

from src.utils.error_handling import AngleError

logger = logging.getLogger(__name__)

Angle = Union[Fraction, float]


class ThetaMembership(Enum):
    YES = "yes"
    NO = "no"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class Itinerary:
    """Symbols of an angle under the partition, with detected preperiod/period"""
    n: int
    symbols: Tuple[int, ...]
    preperiod: Optional[int] = None
    period: Optional[int] = None

    @property
    def block(self) -> Tuple[int, ...]:
        """Repeating block of an eventually periodic itinerary"""
        if self.period is None:
            raise AngleError("itinerary of an inexact angle has no periodic block")
        start = self.preperiod or 0
        return self.symbols[start:start + self.period]

    @property
    def prefix(self) -> Tuple[int, ...]:
        return self.symbols[:self.preperiod or 0]

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'symbols': list(self.symbols),
            'preperiod': self.preperiod,
            'period': self.period,
        }


def as_angle(value) -> Angle:
    """Normalize into (0, 1]; integers, strings and Fractions stay exact"""
    if isinstance(value, float):
        x = value % 1.0
        return x if x != 0.0 else 1.0
    angle = Fraction(value) % 1
    return angle if angle != 0 else Fraction(1)


def is_exact(theta: Angle) -> bool:
    return isinstance(theta, Fraction)


def tau(n: int, theta: Angle) -> Angle:
    """n theta mod 1, with 0 identified with 1"""
    return as_angle(n * theta)


def partition_index(n: int, theta: Angle) -> int:
    """Symbol j with theta in the half-open interval (k/2n, (k+1)/2n]"""
    theta = as_angle(theta)
    j = math.ceil(2 * n * theta) - 1
    return j if j <= n else -(j - n)


def _digit(n: int, s: int) -> int:
    return abs(s) % n


def _chi(n: int, s: int) -> int:
    return s if s >= 0 else n - s


def itinerary(n: int, theta: Angle, depth: int) -> Itinerary:
    """First ``depth`` symbols; exact angles also get preperiod and period"""
    theta = as_angle(theta)
    if not is_exact(theta):
        symbols = []
        for _ in range(depth):
            symbols.append(partition_index(n, theta))
            theta = tau(n, theta)
        return Itinerary(n, tuple(symbols))

    seen = {}
    orbit = []
    current = theta
    while current not in seen:
        seen[current] = len(orbit)
        orbit.append(current)
        current = tau(n, current)
    preperiod = seen[current]
    period = len(orbit) - preperiod

    length = max(depth, len(orbit))
    symbols = []
    for k in range(length):
        index = k if k < len(orbit) else preperiod + (k - preperiod) % period
        symbols.append(partition_index(n, orbit[index]))
    return Itinerary(n, tuple(symbols), preperiod, period)


def in_theta(n: int, theta: Angle, depth: int = 64) -> ThetaMembership:
    """Whether the tau-orbit avoids the intervals of symbols 0 and n"""
    theta = as_angle(theta)
    if is_exact(theta):
        seen = set()
        while theta not in seen:
            if partition_index(n, theta) in (0, n):
                return ThetaMembership.NO
            seen.add(theta)
            theta = tau(n, theta)
        return ThetaMembership.YES

    for _ in range(depth + 1):
        if partition_index(n, theta) in (0, n):
            return ThetaMembership.NO
        theta = tau(n, theta)
    return ThetaMembership.UNDETERMINED


def _validate_symbols(n: int, symbols: Sequence[int], full: bool) -> None:
    low = -(n - 1)
    high = n if full else n - 1
    for s in symbols:
        if int(s) != s or not low <= s <= high or (not full and s == 0):
            raise AngleError(f"symbol {s} outside the alphabet for n={n}")


def angle_from_itinerary(n: int,
                         block: Sequence[int],
                         prefix: Sequence[int] = ()) -> Fraction:
    """
    Exact angle whose itinerary is ``prefix`` followed by ``block`` repeated.

    Twice the angle has base-n digits |s_1|, |s_2|, ... after a leading
    part fixed by the first symbol, so the sum is a geometric series.

    Raises:
        AngleError: empty block or symbols outside the alphabet
    """
    block = tuple(block)
    prefix = tuple(prefix)
    if not block:
        raise AngleError("periodic block must be non-empty")
    _validate_symbols(n, block, full=False)
    _validate_symbols(n, prefix, full=True)

    p = len(block)
    block_value = sum(Fraction(_digit(n, s), n ** (j + 1)) for j, s in enumerate(block))
    block_total = block_value / (1 - Fraction(1, n ** p))

    L = len(prefix)
    prefix_value = sum(Fraction(_digit(n, s), n ** (j + 1)) for j, s in enumerate(prefix))
    total = prefix_value + block_total / n ** L

    s0 = prefix[0] if prefix else block[0]
    theta = (Fraction(_chi(n, s0), n) + total - Fraction(_digit(n, s0), n)) / 2
    return as_angle(theta)


def is_tau_periodic(n: int, theta: Fraction) -> Optional[int]:
    """Smallest p with n^p theta = theta mod 1, or None if strictly preperiodic"""
    if not is_exact(as_angle(theta)):
        raise AngleError("periodicity is only decided for exact angles")
    start = as_angle(theta)
    seen = {start}
    current = tau(n, start)
    p = 1
    while current != start:
        if current in seen:
            return None
        seen.add(current)
        current = tau(n, current)
        p += 1
    return p


_theta_cache = LRUCache(maxsize=64)


@cached(_theta_cache, lock=threading.Lock())
def enumerate_theta_per(n: int, max_period: int) -> List[Fraction]:
    """
    Periodic angles of period <= max_period whose orbit stays in the
    partition intervals with symbols +-1..+-(n-1), excluding 1 and 1/2.
    """
    if max_period < 1:
        raise AngleError("max_period must be at least 1")
    alphabet = [s for k in range(1, n) for s in (k, -k)]
    found = set()
    for p in range(1, max_period + 1):
        for block in product(alphabet, repeat=p):
            theta = angle_from_itinerary(n, block)
            if theta in found or theta in (Fraction(1), Fraction(1, 2)):
                continue
            period = is_tau_periodic(n, theta)
            if period is None or period > max_period:
                continue
            if in_theta(n, theta) is ThetaMembership.YES:
                found.add(theta)
    logger.debug(f"enumerate_theta_per(n={n}, max_period={max_period}): {len(found)} angles")
    return sorted(found)


def _shorter_arc(t1: Fraction, t2: Fraction) -> Tuple[Fraction, Fraction]:
    """(start, length) of the shorter arc between two angles"""
    d = (t2 - t1) % 1
    if d <= Fraction(1, 2):
        return t1 % 1, d
    return t2 % 1, 1 - d


def separating_angle(n: int,
                     t1: Angle,
                     t2: Angle,
                     forbidden: Optional[Callable[[Fraction], bool]] = None,
                     max_depth: int = 12,
                     max_period: int = 4) -> Fraction:
    """
    Angle in the shorter open arc between t1 and t2 that maps under some
    tau^k onto a periodic angle of the Cantor set.

    Args:
        forbidden: predicate rejecting base periodic angles
        max_depth: largest preimage depth k searched
        max_period: period bound of the base angles

    Raises:
        AngleError: no such angle within the search bounds
    """
    a, b = Fraction(t1), Fraction(t2)
    if a % 1 == b % 1:
        raise AngleError("separating_angle needs two distinct angles")
    start, length = _shorter_arc(a, b)

    bases = [t for t in enumerate_theta_per(n, max_period)
             if forbidden is None or not forbidden(t)]
    if not bases:
        raise AngleError("every periodic base angle is forbidden")

    for k in range(max_depth + 1):
        scale = n ** k
        best = None
        for base in bases:
            j = math.floor(start * scale - base) + 1
            alpha = (base + j) / scale
            if alpha < start + length and (best is None or alpha < best):
                best = alpha
        if best is not None:
            logger.debug(f"separating angle {best} found at depth {k}")
            return as_angle(best)

    raise AngleError(f"no separating angle between {t1} and {t2} up to depth {max_depth}")
