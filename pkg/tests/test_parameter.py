"""
Tests for the parameter plane: conformal coordinates, parameter rays and
their landing points, cusps, hole centres, multipliers and boundaries.
"""

import cmath
import math
import sys
import os
from fractions import Fraction
from types import SimpleNamespace
from unittest.mock import patch

import numpy as np
import pytest

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.dynamics.boettcher import RayPolyline, green
from src.dynamics.core import MapParams, eval_map, iterate, orbit_multiplier
from src.parameter.boundary import component_boundary, hole_boundary
from src.parameter.coordinates import capacity_check, phi0, phi2, phiH
from src.parameter.cusps import cusp_type, find_cusp, zero_ray_cusp
from src.parameter.holes import expected_hole_count, hole_polynomial, sierpinski_hole_centers
from src.parameter.landing import (
    half_angle_relation,
    nu,
    ray_landing_report,
    refine_postcritically_finite,
)
from src.parameter.multiplier import multiplier_expansion, multiplier_kappa, solve_multiplier_system
from src.parameter.plane import param_plane, render_param_plane, symmetry_agreement
from src.parameter.rays import track_root, trace_param_ray
from src.render.classify import classify_fast
from src.render.images import BBox
from src.utils.error_handling import DomainError

F = Fraction
LAMBDA_STAR = 4 / 27


def _winding(values):
    turns = 0.0
    for a, b in zip(values, values[1:] + values[:1]):
        turns += cmath.phase(b / a)
    return turns / (2 * math.pi)


class TestPhi0:
    """Test the Cantor-locus coordinate"""

    @pytest.mark.parametrize("arg", [0.0, math.pi / 3])
    def test_capacity(self, arg):
        """Phi_0(lambda) = 4 lambda + O(lambda^(2-n))"""
        low, high = capacity_check(3, [1e3, 1e4], arg)
        assert abs(low - 1) < 1e-3
        assert abs(high - 1) < 1e-5

    def test_capacity_improves_outward(self):
        errors = [abs(r - 1) for r in capacity_check(3, [1e2, 1e3, 1e4])]
        assert errors[0] > errors[1] > errors[2]

    @pytest.mark.parametrize("lam", [1.0, 10.0, 2 + 3j])
    def test_modulus_is_green(self, lam):
        """|Phi_0| = exp(2 G(v+)) > 1"""
        params = MapParams(3, lam)
        value = phi0(3, lam)
        assert abs(value) == pytest.approx(math.exp(2 * green(params, params.v_plus)), rel=1e-8)
        assert abs(value) > 1

    def test_conjugation(self):
        assert phi0(3, 5 - 5j) == pytest.approx(phi0(3, 5 + 5j).conjugate(), rel=1e-9)

    def test_rotation(self):
        """n = 3: lambda -> -lambda rotates Phi_0 by the same half-turn"""
        assert phi0(3, -10.0) == pytest.approx(-phi0(3, 10.0), rel=1e-9)

    def test_start_outside_direct_domain(self):
        with pytest.raises(DomainError):
            phi0(3, 0.5, reference_path=[0.4, 0.5])


class TestPhi2:
    """Test the McMullen-domain coordinate"""

    def test_normalization(self):
        """lambda Phi_2(lambda) -> 2^(2n/(2-n)) = 1/64 for n = 3"""
        lam = 1e-4
        assert abs(lam * phi2(3, lam) - 1 / 64) * 64 < 1e-3

    @pytest.mark.parametrize("lam", [1e-3, 1e-3j, -2e-3 + 1e-3j])
    def test_modulus_is_green(self, lam):
        """|Phi_2|^(n-2) = exp(2 G(f(v+)))"""
        params = MapParams(3, lam)
        value = phi2(3, lam)
        expected = math.exp(2 * green(params, eval_map(params, params.v_plus)))
        assert abs(value) == pytest.approx(expected, rel=1e-8)
        assert abs(value) > 1

    def test_conjugation(self):
        assert phi2(3, 1e-3 - 2e-3j) == pytest.approx(phi2(3, 1e-3 + 2e-3j).conjugate(), rel=1e-9)

    def test_rotation_reverses(self):
        """n = 4: Phi_2(w lambda) = conj(w) Phi_2(lambda) with w = e^(2 pi i/3)"""
        omega = cmath.exp(2j * math.pi / 3)
        lam = 1e-3
        assert phi2(4, omega * lam) == pytest.approx(phi2(4, lam) / omega, rel=1e-8)


class TestPhiH:
    """Test the Sierpinski-hole coordinate"""

    def test_center(self):
        assert abs(phiH(3, 1j / 8)) < 1e-9

    def test_inside_unit_disk(self):
        assert abs(phiH(3, 1j / 8 + 1e-4, level=3)) < 1

    def test_winding(self):
        """Phi_H is one-to-one near the centre"""
        loop = [1j / 8 + 1e-4 * cmath.exp(2j * math.pi * k / 32) for k in range(32)]
        values = [phiH(3, lam, level=3) for lam in loop]
        assert round(_winding(values)) == 1

    def test_not_a_hole(self):
        with pytest.raises(DomainError):
            phiH(3, 100.0)


class TestParameterRays:
    """Test parameter ray tracing"""

    def test_track_root(self):
        assert track_root(4.0, 1.0) == pytest.approx(4.0)
        assert track_root(4.0, -3.0) == pytest.approx(-4.0)

    def test_zero_ray_is_real(self):
        """R_0(0) runs down the real axis to lambda_*"""
        ray = trace_param_ray(3, 0, steps=30)
        assert ray.kind == 'parameter'
        assert len(ray) == 30
        assert ray.points[0] == pytest.approx(1e6, rel=1e-6)
        reals = [p.real for p in ray.points]
        assert all(abs(p.imag) < 1e-12 for p in ray.points)
        assert all(x > LAMBDA_STAR for x in reals)
        assert all(a > b for a, b in zip(reals, reals[1:]))
        assert all(a > b for a, b in zip(ray.potentials, ray.potentials[1:]))

    def test_rotation(self):
        """n = 3: R_0(t + 1/2) = -R_0(t)"""
        a = trace_param_ray(3, F(1, 3), steps=10)
        b = trace_param_ray(3, F(5, 6), steps=10)
        for p, q in zip(a.points, b.points):
            assert q == pytest.approx(-p, rel=1e-8)

    def test_samples_solve_phi0(self):
        """Phi_0 = r e^(2 pi i t) along the ray"""
        ray = trace_param_ray(3, F(1, 3), steps=12)
        lam, log_r = ray.points[-1], ray.potentials[-1]
        expected = math.exp(log_r) * cmath.exp(2j * math.pi / 3)
        assert phi0(3, lam) == pytest.approx(expected, rel=1e-7)

    def test_bad_r_min(self):
        with pytest.raises(DomainError):
            trace_param_ray(3, 0, r_min=0.5)


class TestCusps:
    """Test parabolic parameters"""

    def test_zero_ray_cusp_formula(self):
        cusp = zero_ray_cusp(3)
        assert cusp.lam == pytest.approx(LAMBDA_STAR, abs=1e-15)
        assert cusp.parabolic_point == pytest.approx(math.sqrt(2 / 3), abs=1e-15)
        assert cusp.residual < 1e-12

    def test_cusp_type(self):
        assert cusp_type(3, 0) == (1, [1])
        assert cusp_type(3, F(1, 2)) == (1, [-1])
        assert cusp_type(3, F(1, 4))[0] == 2
        assert cusp_type(4, 0) == (1, [1, -1])

    def test_cusp_type_rejects_preperiodic(self):
        with pytest.raises(DomainError):
            cusp_type(3, F(1, 12))

    def test_zero_angle(self):
        cusp = find_cusp(3, 0)
        assert abs(cusp.lam - LAMBDA_STAR) < 1e-9
        assert abs(cusp.parabolic_point - math.sqrt(2 / 3)) < 1e-9
        assert cusp.period == 1
        assert cusp.sign == 1
        assert cusp.residual < 1e-9

    def test_half_angle_is_star_case(self):
        """theta = 1/2: eps = -1 and lambda = -4/27"""
        cusp = find_cusp(3, F(1, 2))
        assert cusp.sign == -1
        assert abs(cusp.lam + LAMBDA_STAR) < 1e-9
        assert abs(cusp.multiplier - 1) < 1e-6

    def test_even_degree(self):
        cusp = find_cusp(4, 0)
        assert abs(cusp.lam - zero_ray_cusp(4).lam) < 1e-9

    @pytest.mark.slow
    def test_quarter_angle(self):
        cusp = find_cusp(3, F(1, 4))
        assert cusp.period == 2
        assert cusp.residual < 1e-9
        assert abs(cusp.multiplier - 1) < 1e-6
        value, d, _ = orbit_multiplier(MapParams(3, cusp.lam), cusp.parabolic_point, cusp.period, cusp.sign)
        assert abs(value - cusp.parabolic_point) < 1e-9
        assert abs(d - 1) < 1e-9


class TestLanding:
    """Test landing points of parameter rays"""

    def test_half_angle_relation(self):
        assert half_angle_relation(3, F(1, 12)) == (1, 2, 1)
        assert half_angle_relation(3, F(1, 2)) == (0, 1, -1)

    def test_zero_ray_lands_at_cusp(self):
        assert abs(nu(3, 0) - LAMBDA_STAR) < 1e-6

    def test_distant_refinement_rejected(self):
        ray = RayPolyline("parameter", F(1, 6), points=[0.31, 0.301], landing_estimate=0.3)
        with patch("src.parameter.landing.trace_param_ray", return_value=ray), \
                patch("src.parameter.landing.is_tau_periodic", return_value=True), \
                patch("src.parameter.landing.find_cusp", return_value=SimpleNamespace(lam=-0.2)):
            assert nu.__wrapped__(7, F(1, 6)) == 0.3

    def test_nearby_refinement_kept(self):
        ray = RayPolyline("parameter", F(1, 6), points=[0.31, 0.301], landing_estimate=0.3)
        with patch("src.parameter.landing.trace_param_ray", return_value=ray), \
                patch("src.parameter.landing.is_tau_periodic", return_value=True), \
                patch("src.parameter.landing.find_cusp", return_value=SimpleNamespace(lam=0.3005)):
            assert nu.__wrapped__(7, F(1, 6)) == 0.3005

    def test_rotation(self):
        """nu(theta + 1/(n-1)) = e^(2 pi i/(n-1)) nu(theta)"""
        assert abs(nu(3, F(1, 2)) + nu(3, 0)) < 1e-6

    @pytest.mark.slow
    def test_conjugation(self):
        """nu(1 - theta) = conj(nu(theta))"""
        assert abs(nu(3, F(3, 4)) - nu(3, F(1, 4)).conjugate()) < 1e-6

    @pytest.mark.slow
    def test_postcritically_finite(self):
        """theta = 1/12 lands where v+ is preperiodic onto a repelling cycle"""
        ray = trace_param_ray(3, F(1, 12))
        result = refine_postcritically_finite(3, F(1, 12), ray.landing_estimate)
        assert result.residual < 1e-9
        assert result.repelling
        params = MapParams(3, result.lam)
        v = params.v_plus
        assert abs(iterate(params, v, 3) - iterate(params, v, 1)) < 1e-6

    @pytest.mark.slow
    def test_landing_report_at_critical_value(self):
        report = ray_landing_report(3, F(1, 12))
        assert report.distance_to_parabolic is None
        assert report.verdict == 'critical-value'


class TestHoleCensus:
    """Test Sierpinski hole centres"""

    def test_expected_counts(self):
        assert expected_hole_count(3, 3) == 2
        assert expected_hole_count(3, 4) == 12
        assert expected_hole_count(3, 5) == 72
        assert expected_hole_count(4, 3) == 3

    def test_level_three_polynomial(self):
        """64 lambda^3 + lambda = lambda (64 mu + 1), mu = lambda^2"""
        assert hole_polynomial(3, 3) == (1, 2, (64, 1))

    def test_level_three(self):
        census = sierpinski_hole_centers(3, 3)
        assert census.complete
        for expected in (1j / 8, -1j / 8):
            assert min(abs(c - expected) for c in census.centers) < 1e-10

    def test_residual_tolerance(self):
        with patch("src.parameter.holes._center_residual", return_value=1e-7):
            assert sierpinski_hole_centers(3, 3).count == 0
            loose = sierpinski_hole_centers(3, 3, tol=1e-6)
        assert loose.complete
        assert loose.residuals == [1e-7, 1e-7]

    def test_degree_four(self):
        """lambda^3 = -4^-4"""
        census = sierpinski_hole_centers(4, 3)
        assert census.count == 3
        for c in census.centers:
            assert abs(c ** 3 + 4.0 ** -4) < 1e-12

    def test_level_four(self):
        census = sierpinski_hole_centers(3, 4)
        assert census.count == 12
        assert all(r < 1e-9 for r in census.residuals)
        for i, a in enumerate(census.centers):
            for b in census.centers[i + 1:]:
                assert abs(a - b) > 1e-6

    @pytest.mark.slow
    def test_level_five(self):
        census = sierpinski_hole_centers(3, 5)
        assert census.count == 72
        assert census.method == 'symbolic'

    def test_centers_classify(self):
        for c in sierpinski_hole_centers(3, 4).centers:
            assert classify_fast(MapParams(3, c)).level == 4

    def test_level_too_low(self):
        with pytest.raises(DomainError):
            sierpinski_hole_centers(3, 2)


class TestMultiplier:
    """Test kappa and rho on renormalizable components"""

    def test_superattracting(self):
        result = multiplier_kappa(MapParams(3, 1 / 8))
        assert abs(result.kappa) < 1e-8
        assert result.sign == 1
        assert result.period == 1

    def test_star_case(self):
        result = multiplier_kappa(MapParams(3, -1 / 8))
        assert result.sign == -1
        assert result.full_period == 2
        assert abs(result.kappa) < 1e-8
        assert result.rho == pytest.approx(result.kappa ** 2, abs=1e-15)

    def test_attracting(self):
        result = multiplier_kappa(MapParams(3, 0.13))
        assert abs(result.kappa) < 1

    def test_escaping_parameter(self):
        with pytest.raises(DomainError):
            multiplier_kappa(MapParams(3, 10.0))

    def test_first_derivative_at_one_eighth(self):
        expansion = multiplier_expansion(3, 1 / 8)
        assert abs(expansion.first - 24) / 24 < 1e-3

    def test_second_derivative_at_one_eighth(self):
        """rho = 24 d + 192 d^2 + O(d^3), d = lambda - 1/8"""
        expansion = multiplier_expansion(3, 1 / 8)
        assert abs(expansion.half_second - 192) / 192 < 1e-2

    def test_double_zero_at_minus_one_eighth(self):
        """rho = 576 (lambda + 1/8)^2 + ..."""
        expansion = multiplier_expansion(3, -1 / 8)
        assert abs(expansion.first) < 1e-2
        assert abs(expansion.half_second - 576) / 576 < 1e-2

    def test_solve_for_multiplier(self):
        """kappa = 1/2 on the real fixed-point branch: u = 7/12, lambda = u^2 - u^3"""
        lam, z, residual = solve_multiplier_system(3, 1 / 8, 1 / math.sqrt(2), 1, 1, target=0.5)
        assert residual < 1e-10
        assert lam == pytest.approx(245 / 1728, abs=1e-10)
        assert z * z == pytest.approx(7 / 12, abs=1e-10)


class TestBoundaries:
    """Test boundary continuation"""

    def test_component_boundary(self):
        boundary = component_boundary(3, 1 / 8, samples=256, rho=0.999)
        assert not boundary.gaps
        assert len(boundary.lambdas) == 256
        assert boundary.closure_defect < 1e-3
        assert abs(boundary.lambdas[0] - LAMBDA_STAR) < 1e-3
        assert max(boundary.residuals) < 1e-8

    def test_component_boundary_multipliers(self):
        boundary = component_boundary(3, 1 / 8, samples=16, rho=0.5)
        for s, lam in boundary.samples.items():
            assert multiplier_kappa(MapParams(3, lam)).kappa == pytest.approx(
                0.5 * cmath.exp(2j * math.pi * s), abs=1e-8)

    def test_star_component(self):
        boundary = component_boundary(3, -1 / 8, samples=64, rho=0.9)
        assert boundary.closure_defect < 1e-3
        assert not boundary.gaps

    def test_component_needs_attracting_cycle(self):
        with pytest.raises(DomainError):
            component_boundary(3, 10.0)

    def test_hole_boundary(self):
        boundary = hole_boundary(3, 1j / 8, samples=32, rho=0.5)
        assert not boundary.gaps
        assert boundary.closure_defect < 1e-6
        for s, lam in list(boundary.samples.items())[::8]:
            assert phiH(3, lam, level=3) == pytest.approx(0.5 * cmath.exp(2j * math.pi * s), abs=1e-6)

    def test_hole_boundary_needs_hole(self):
        with pytest.raises(DomainError):
            hole_boundary(3, 100.0)


class TestParamPlane:
    """Test parameter-plane pictures"""

    def test_image(self):
        image = render_param_plane(3, BBox.square(0, 0.5), (64, 48), 200)
        assert image.shape == (48, 64, 3)
        assert image.dtype == np.uint8

    def test_histogram(self):
        plane = param_plane(3, BBox.square(0, 0.5), (64, 64), 300)
        df = plane.histogram()
        assert df['fraction'].sum() == pytest.approx(1.0)
        assert 'H2' in set(df['label'])
        assert plane.to_dict()['n'] == 3

    def test_symmetries(self):
        lams = BBox.square(0, 0.5).centers((64, 64))
        agreement = symmetry_agreement(3, lams, 500)
        assert agreement['conjugation'] >= 0.99
        assert agreement['rotation'] >= 0.98
