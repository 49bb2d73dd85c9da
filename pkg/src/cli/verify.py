#!/usr/bin/env python3
"""
Acceptance suite behind ``verify``: closed-form constants and property
checks, one table row per criterion.

Every row runs through safe_compute so that a numerical failure marks the
row and the suite moves on.
"""

import cmath
import math
import time
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.dynamics.boettcher import boettcher, boettcher_offset, trace_external_ray
from src.dynamics.core import MapParams, eval_map, iterate
from src.dynamics.cutrays import cut_ray, hausdorff_distance, in_cut_region, preimages, theta_symbols
from src.parameter.boundary import component_boundary
from src.parameter.coordinates import capacity_check, phi2
from src.parameter.cusps import find_cusp, zero_ray_cusp
from src.parameter.holes import expected_hole_count, sierpinski_hole_centers
from src.parameter.landing import half_angle_relation, nu, refine_postcritically_finite
from src.parameter.multiplier import multiplier_expansion, solve_multiplier_system
from src.parameter.plane import symmetry_agreement
from src.parameter.rays import trace_param_ray
from src.render.classify import UNDETERMINED_CODE, classify_fast_array, classify_oracle, julia_area_estimate
from src.render.images import BBox
from src.utils.config import get_config
from src.utils.error_handling import ConvergenceError, ErrorHandler, safe_compute

logger = logging.getLogger(__name__)

F = Fraction
Outcome = Tuple[str, bool]


@dataclass
class Criterion:
    """One acceptance row"""
    key: str
    description: str
    check: Callable[[], Outcome]
    degrees: Optional[Tuple[int, ...]] = None

    def applies_to(self, n: int) -> bool:
        return self.degrees is None or n in self.degrees


def _fmt(x: float) -> str:
    return f"{x:.3e}"


def _wrapped(delta: float) -> float:
    return (delta + math.pi) % (2 * math.pi) - math.pi


class AcceptanceSuite:
    """Runs the acceptance rows for one degree"""

    def __init__(self, n: int = 3, quick: bool = False):
        self.n = n
        self.quick = quick
        self.error_handler = ErrorHandler()

    # Rows

    def check_zero_cusp(self) -> Outcome:
        expected = zero_ray_cusp(self.n)
        found = find_cusp(self.n, F(0))
        error = max(abs(found.lam - expected.lam), abs(found.parabolic_point - expected.parabolic_point))
        return f"lambda={found.lam.real:.12f} err={_fmt(error)}", error < 1e-9

    def check_multiplier_expansions(self) -> Outcome:
        outer = multiplier_expansion(3, 0.125)
        star = multiplier_expansion(3, -0.125)
        ok = (abs(outer.first - 24) / 24 < 1e-3
              and abs(star.first) < 1e-2
              and abs(star.half_second - 576) / 576 < 1e-2
              and abs(outer.half_second - 192) / 192 < 1e-2)
        value = (f"rho'(1/8)={outer.first.real:.6f} rho''(1/8)/2={outer.half_second.real:.3f} "
                 f"|rho'(-1/8)|={_fmt(abs(star.first))} rho''(-1/8)/2={star.half_second.real:.3f}")
        return value, ok

    def check_hole_census(self) -> Outcome:
        n = self.n
        pairs = [(n, 3), (n, 4)]
        if not self.quick:
            pairs.append((n, 5))
        if n == 3:
            pairs.append((4, 3))

        counts, ok = [], True
        for degree, level in pairs:
            census = sierpinski_hole_centers(degree, level)
            counts.append(f"({degree},{level})={census.count}")
            ok &= census.count == expected_hole_count(degree, level)
            if level == 3:
                # closed form lambda^(n-1) = -4^(-n)
                base = (4.0 ** -degree) ** (1 / (degree - 1)) * cmath.exp(1j * math.pi / (degree - 1))
                roots = [base * cmath.exp(2j * math.pi * j / (degree - 1)) for j in range(degree - 1)]
                error = max((min(abs(c - r) for r in roots) for c in census.centers), default=math.inf)
                ok &= error < 1e-10
        return " ".join(counts), ok

    def check_capacity(self) -> Outcome:
        worst_low = worst_high = 0.0
        for arg in (0.0, math.pi / 3):
            low, high = capacity_check(self.n, [1e3, 1e4], arg)
            worst_low = max(worst_low, abs(low - 1))
            worst_high = max(worst_high, abs(high - 1))
        return f"1e3: {_fmt(worst_low)} 1e4: {_fmt(worst_high)}", worst_low < 1e-3 and worst_high < 1e-5

    def check_phi2_normalization(self) -> Outcome:
        lam = 1e-4
        target = 2.0 ** (2 * self.n / (2 - self.n))
        error = abs(lam * phi2(self.n, lam) - target) / target
        return f"rel err {_fmt(error)}", error < 1e-3

    def check_boettcher(self) -> Outcome:
        n = self.n
        params = MapParams(n, 0.3 + 0.1j)
        radius = 2 * params.escape_radius
        functional = 0.0
        for k in range(100):
            z = radius * cmath.exp(2j * math.pi * (k + 0.5) / 100)
            rhs = boettcher(params, z) ** n
            functional = max(functional, abs(boettcher(params, eval_map(params, z)) - rhs) / abs(rhs))

        z = 1e6 * cmath.exp(0.3j)
        a1 = boettcher_offset(params, z) * z ** (2 * n - 1)
        coefficient = abs(a1 - params.lam / n) / abs(params.lam / n)

        omega = cmath.exp(1j * math.pi / n)
        rotation = 0.0
        for k in range(30):
            z = 1.5 * params.escape_radius * cmath.exp(2j * math.pi * (k + 0.25) / 30)
            rotation = max(rotation, abs(boettcher(params, omega * z) - omega * boettcher(params, z)) / abs(z))

        ok = functional < 1e-9 and coefficient < 1e-4 and rotation < 1e-9
        return f"fe={_fmt(functional)} a1={_fmt(coefficient)} rot={_fmt(rotation)}", ok

    def check_cut_rays(self) -> Outcome:
        params = MapParams(3, 0.2 + 0.2j)
        depth = 6 if self.quick else 12
        symmetry = 0.0
        contained = True
        approx = {}
        for theta in (F(1, 2), F(1, 4)):
            approx[theta] = cut_ray(params, theta, depth)
            points = approx[theta].points()
            points = points[np.abs(points) <= 10]
            symmetry = max(symmetry, hausdorff_distance(points, -points))
            contained &= all(in_cut_region(params, complex(z), approx[theta].symbols)
                             for z in approx[theta].julia_samples)

        half_turn = hausdorff_distance(approx[F(1, 4)].julia_samples,
                                       cut_ray(params, F(3, 4), depth).julia_samples)

        rays_inside = True
        for theta in (F(1, 2), F(1, 4)):
            rays = [trace_external_ray(params, t, steps=30) for t in (theta, theta + F(1, 2))]
            for d in range(1, depth + 1):
                symbols = theta_symbols(3, theta, d)
                rays_inside &= all(in_cut_region(params, z, symbols) for ray in rays for z in ray.points)

        image = cut_ray(params, F(3, 4), depth)
        symbols = theta_symbols(3, F(1, 4), depth + 1)
        two_to_one = all(
            sum(in_cut_region(params, complex(z), symbols) for z in preimages(params, complex(w))) == 2
            for w in image.julia_samples[:50]
        )

        ok = symmetry < 1e-9 and contained and half_turn < 1e-6 and rays_inside and two_to_one
        value = (f"sym={_fmt(symmetry)} itinerary={contained} hausdorff={_fmt(half_turn)} "
                 f"rays={rays_inside} two_to_one={two_to_one}")
        return value, ok

    def _parabolic_near(self, lam: complex, radius: float, max_period: int) -> Optional[complex]:
        """A parabolic parameter within ``radius`` of lam found from a seed grid, if any"""
        n = self.n
        params = MapParams(n, lam)
        lam_seeds = [lam] + [lam + 0.5 * radius * cmath.exp(2j * math.pi * k / 6) for k in range(6)]
        z_seeds = [iterate(params, params.v_plus, j) for j in range(1, 5)]
        for q in range(1, max_period + 1):
            for sign in (1, -1):
                for lam0 in lam_seeds:
                    for z0 in z_seeds:
                        try:
                            found, _, _ = solve_multiplier_system(n, lam0, z0, q, sign, 1.0, max_steps=30)
                        except ConvergenceError:
                            continue
                        if abs(found - lam) < radius:
                            return found
        return None

    def check_cusp_periodic(self) -> Outcome:
        n = self.n
        residual = max(find_cusp(n, theta).residual for theta in (F(0), F(1, 4)))

        theta = F(1, 12)
        seed = trace_param_ray(n, theta).landing_estimate
        pcf = refine_postcritically_finite(n, theta, seed, tol=1e-6)
        parabolic = self._parabolic_near(pcf.lam, 1e-3, 4)

        l, q, sign = half_angle_relation(n, theta)
        ok = residual < 1e-9 and pcf.residual < 1e-6 and pcf.repelling and parabolic is None
        value = (f"cusp res={_fmt(residual)} pcf(l={l},q={q},eps={sign}) res={_fmt(pcf.residual)} "
                 f"|mult|={abs(pcf.cycle_multiplier):.4f} parabolic_nearby={parabolic is not None}")
        return value, ok

    def check_classifier(self) -> Outcome:
        n = self.n
        side = 16 if self.quick else 64
        cfg = get_config().system_config
        oracle_res = cfg.oracle_res // 2 if self.quick else cfg.oracle_res
        lams = BBox.square(0, 0.3).centers((side, side)).ravel()
        fast = classify_fast_array(n, lams)

        oracle = np.empty(lams.size, dtype=fast.dtype)
        with ThreadPoolExecutor(max_workers=cfg.max_workers) as executor:
            futures = {executor.submit(classify_oracle, MapParams(n, complex(lam)), oracle_res): i
                       for i, lam in enumerate(lams)}
            for future in as_completed(futures):
                oracle[futures[future]] = future.result().code

        determined = (fast != UNDETERMINED_CODE) & (oracle != UNDETERMINED_CODE)
        agreement = float(np.mean(fast[determined] == oracle[determined])) if determined.any() else 0.0
        symmetry = symmetry_agreement(n, lams)
        ok = agreement >= 0.95 and min(symmetry.values()) >= 0.99
        value = (f"agree={agreement:.4f} ({int(determined.sum())} px) "
                 f"conj={symmetry['conjugation']:.4f} rot={symmetry['rotation']:.4f}")
        return value, ok

    def check_jordan_boundary(self) -> Outcome:
        n = self.n
        count = 16 if self.quick else 64
        samples = 64 if self.quick else 256
        points = [nu(n, F(j, count)) for j in range(count)]

        separation = min(abs(a - b) for i, a in enumerate(points) for b in points[i + 1:])
        steps = [_wrapped(cmath.phase(b) - cmath.phase(a)) for a, b in zip(points, points[1:] + points[:1])]
        winding = round(sum(steps) / (2 * math.pi))
        ordered = winding == 1 and all(s > 0 for s in steps)

        center = 2.0 ** (-2 / (n - 1)) / 4
        boundary = component_boundary(n, center, samples)
        cusp = zero_ray_cusp(n).lam
        touch = min(abs(lam - cusp) for lam in boundary.lambdas)

        ok = separation > 1e-5 and ordered and boundary.closure_defect < 1e-3 and touch < 1e-3
        value = (f"sep={_fmt(separation)} ordered={ordered} closure={_fmt(boundary.closure_defect)} "
                 f"cusp dist={_fmt(touch)}")
        return value, ok

    def check_area_trend(self) -> Outcome:
        n = self.n
        resolutions = [128, 256] if self.quick else [256, 512, 1024]
        ok = True
        parts = []
        for lam in (100.0, nu(n, F(1, 12))):
            areas = julia_area_estimate(MapParams(n, complex(lam)), resolutions)
            ok &= all(b < a for a, b in zip(areas, areas[1:]))
            parts.append("/".join(f"{a:.4g}" for a in areas))
        return " ; ".join(parts), ok

    def criteria(self) -> List[Criterion]:
        return [
            Criterion('zero_cusp', 'cusp of R_0(0) at the closed-form lambda_*, z_*', self.check_zero_cusp),
            Criterion('multiplier', "rho'(1/8) = 24, rho''(-1/8)/2 = 576", self.check_multiplier_expansions, (3,)),
            Criterion('hole_census', 'hole counts (2n)^(k-3)(n-1), level-3 closed form', self.check_hole_census),
            Criterion('capacity', 'Phi_0 / 4 lambda -> 1', self.check_capacity),
            Criterion('phi2', 'lambda Phi_2 -> 2^(2n/(2-n))', self.check_phi2_normalization),
            Criterion('boettcher', 'functional equation, a_1 = lambda/n, rotation', self.check_boettcher),
            Criterion('cut_rays', 'cut-ray symmetry, itinerary, nesting of rays, two-to-one', self.check_cut_rays, (3,)),
            Criterion('cusp_periodic', 'cusps at periodic angles, repelling cycle at 1/12', self.check_cusp_periodic, (3,)),
            Criterion('classifier', 'fast vs oracle agreement, symmetry invariants', self.check_classifier),
            Criterion('jordan', 'landing points ordered, component boundary closes', self.check_jordan_boundary),
            Criterion('area', 'Julia area estimate decreases with resolution', self.check_area_trend),
        ]

    def run(self) -> pd.DataFrame:
        """Run every row; a failure marks its row and the suite continues"""
        rows = []
        for criterion in self.criteria():
            if not criterion.applies_to(self.n):
                rows.append({'criterion': criterion.key, 'description': criterion.description,
                             'value': f"only for n in {criterion.degrees}", 'status': 'skip', 'seconds': 0.0})
                continue
            logger.info(f"Running acceptance row {criterion.key} (n={self.n})")
            errors_before = len(self.error_handler.error_history)
            start = time.perf_counter()
            outcome = safe_compute(criterion.check, fallback_value=None,
                                   handler=self.error_handler, operation=criterion.key)
            seconds = time.perf_counter() - start
            if outcome is None:
                message = "failed"
                if len(self.error_handler.error_history) > errors_before:
                    record = self.error_handler.error_history[-1]
                    message = f"{record['error_type']}: {record['error_message']}"
                rows.append({'criterion': criterion.key, 'description': criterion.description,
                             'value': message, 'status': 'error', 'seconds': seconds})
                continue
            value, passed = outcome
            rows.append({'criterion': criterion.key, 'description': criterion.description,
                         'value': value, 'status': 'pass' if passed else 'fail', 'seconds': seconds})
            logger.info(f"{criterion.key}: {'pass' if passed else 'FAIL'} ({seconds:.1f}s) {value}")
        return pd.DataFrame(rows, columns=['criterion', 'description', 'value', 'status', 'seconds'])

    @staticmethod
    def all_passed(table: pd.DataFrame) -> bool:
        return bool(table['status'].isin(['pass', 'skip']).all())
