"""
Tests for the map arithmetic, orbits and periodic-point solvers.
"""

import cmath
import math
import sys
import os

import numpy as np
import pytest

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.dynamics.core import (
    INF,
    MapParams,
    attracting_cycle_from_critical_orbit,
    critical_points,
    critical_values,
    deriv,
    eval_array,
    eval_map,
    find_cycle,
    is_infinite,
    iterate_orbit,
    orbit_jets,
    orbit_multiplier,
)
from src.utils.error_handling import ConvergenceError, DomainError


SQRT_HALF = 1 / math.sqrt(2)


class TestMapParams:
    """Test parameter validation and derived radii"""

    def test_rejects_small_degree(self):
        """n must be at least 3"""
        with pytest.raises(DomainError):
            MapParams(2, 0.1)

    def test_rejects_zero_lambda(self):
        """lambda must be non-zero"""
        with pytest.raises(DomainError):
            MapParams(3, 0)

    @pytest.mark.parametrize("lam", [1e-6, 0.2 + 0.1j, 1.0, -3j, 100.0, 1e5])
    def test_escape_radius_sound(self, lam):
        """|z| = R implies |f(z)| >= 2|z| on 1000 samples"""
        params = MapParams(3, lam)
        R = params.escape_radius
        angles = np.linspace(0, 2 * np.pi, 1000, endpoint=False)
        z = R * np.exp(1j * angles)
        assert np.all(np.abs(eval_array(3, params.lam, z)) >= 2 * R * (1 - 1e-12))

    @pytest.mark.parametrize("lam", [1e-6, 0.01j, 0.125, 0.2 + 0.2j])
    def test_inner_radius_sound(self, lam):
        """|z| = r maps outside the escape radius"""
        params = MapParams(4, lam)
        r = params.inner_radius
        z = r * np.exp(1j * np.linspace(0, 2 * np.pi, 500, endpoint=False))
        assert np.all(np.abs(eval_array(4, params.lam, z)) >= params.escape_radius * (1 - 1e-12))


class TestEval:
    """Test evaluation of the map and its derivative"""

    def test_fixed_critical_point(self):
        """1/sqrt(2) is fixed for n=3, lambda=1/8"""
        params = MapParams(3, 1 / 8)
        assert eval_map(params, SQRT_HALF) == pytest.approx(SQRT_HALF, rel=1e-14)

    def test_poles(self):
        """0 and infinity both map to infinity"""
        params = MapParams(3, 0.3)
        assert is_infinite(eval_map(params, 0j))
        assert is_infinite(eval_map(params, INF))

    def test_odd_degree_is_odd(self):
        """f(-z) = -f(z) for odd n"""
        params = MapParams(3, 0.2 + 0.1j)
        rng = np.random.default_rng(1)
        for z in rng.normal(size=20) + 1j * rng.normal(size=20):
            assert eval_map(params, -z) == pytest.approx(-eval_map(params, z), rel=1e-13)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_rotation_preserves_modulus(self, n):
        """|f(e^(pi i/n) z)| = |f(z)|"""
        params = MapParams(n, 0.05 - 0.2j)
        rng = np.random.default_rng(n)
        omega = cmath.exp(1j * math.pi / n)
        for z in rng.normal(size=20) + 1j * rng.normal(size=20):
            assert abs(eval_map(params, omega * z)) == pytest.approx(abs(eval_map(params, z)), rel=1e-12)

    def test_deriv_vanishes_at_critical_point(self):
        """c^(2n) = lambda is critical"""
        params = MapParams(3, 1 / 64)
        assert abs(deriv(params, (1 / 64) ** (1 / 6))) < 1e-14

    def test_deriv_by_hand(self):
        """n=4, lambda=i, z=1 gives 4 - 4i"""
        assert deriv(MapParams(4, 1j), 1 + 0j) == pytest.approx(4 - 4j)

    def test_deriv_matches_central_difference(self):
        """Analytic derivative agrees with a central difference"""
        params = MapParams(3, 1.0)
        rng = np.random.default_rng(7)
        zs = list(rng.normal(size=30) + 1j * rng.normal(size=30)) + [2 + 0j]
        for z in zs:
            if abs(z) < 0.3:
                continue
            h = 1e-6 * abs(z)
            fd = (eval_map(params, z + h) - eval_map(params, z - h)) / (2 * h)
            assert abs(deriv(params, z) - fd) <= 1e-7 * max(1.0, abs(fd))

    def test_deriv_at_zero_raises(self):
        """z = 0 is outside the domain"""
        with pytest.raises(DomainError):
            deriv(MapParams(3, 1.0), 0j)


class TestCriticalSet:
    """Test critical points and values"""

    def test_critical_points_real_case(self):
        """lambda = 1/8 puts six critical points on |z| = 2^(-1/2)"""
        points = critical_points(MapParams(3, 1 / 8))
        assert len(points) == 6
        assert points[0] == pytest.approx(SQRT_HALF)
        assert all(abs(abs(c) - SQRT_HALF) < 1e-14 for c in points)

    @pytest.mark.parametrize("lam", [0.3, -0.2 + 0.7j, 1e-5j, -4.0])
    def test_defining_equation(self, lam):
        """c^(2n) = lambda"""
        params = MapParams(4, lam)
        for c in critical_points(params):
            assert abs(c ** 8 - params.lam) <= 1e-12 * abs(params.lam)
            assert abs(deriv(params, c)) <= 1e-10 * max(1.0, abs(c) ** 3)

    @pytest.mark.parametrize("lam", [0.125, -0.125, 0.3 + 0.4j, -1e-3j])
    def test_critical_values(self, lam):
        """f maps every critical point to v+ or v-"""
        params = MapParams(3, lam)
        v_plus, v_minus = critical_values(params)
        assert v_minus == -v_plus
        for c in critical_points(params):
            image = eval_map(params, c)
            assert min(abs(image - v_plus), abs(image - v_minus)) < 1e-12

    def test_v_plus_examples(self):
        """v+ = 1/sqrt(2) at 1/8 and i/sqrt(2) at -1/8"""
        assert critical_values(MapParams(3, 1 / 8))[0] == pytest.approx(SQRT_HALF)
        assert critical_values(MapParams(3, -1 / 8))[0] == pytest.approx(1j * SQRT_HALF)


class TestOrbits:
    """Test orbit iteration and escape detection"""

    def test_immediate_escape(self):
        """v+ = 20 is already outside R for lambda = 100"""
        params = MapParams(3, 100.0)
        orbit = iterate_orbit(params, params.v_plus, 50)
        assert orbit.escaped
        assert orbit.escape_index == 0

    def test_fixed_critical_orbit(self):
        """v+ is fixed for lambda = 1/8"""
        params = MapParams(3, 1 / 8)
        orbit = iterate_orbit(params, params.v_plus, 200)
        assert not orbit.escaped
        assert orbit.escape_index is None
        assert len(orbit.points) == 201

    def test_orbit_through_pole(self):
        """lambda = i/8 sends v+ to 0 and then out"""
        params = MapParams(3, 1j / 8)
        orbit = iterate_orbit(params, params.v_plus, 50)
        assert abs(orbit.points[1]) < 1e-15
        assert orbit.escaped
        assert orbit.escape_index == 2

    def test_escape_invariant(self):
        """Points before the escape index stay inside R"""
        params = MapParams(3, 0.4 + 0.3j)
        R = params.escape_radius
        for z0 in (0.5 + 0.5j, 1.2, -0.9j):
            orbit = iterate_orbit(params, z0, 100)
            if orbit.escaped:
                m = orbit.escape_index
                assert is_infinite(orbit.points[m]) or abs(orbit.points[m]) > R
                assert all(abs(z) <= R for z in orbit.points[:m])

    def test_maxiter_validated(self):
        """maxiter must be positive"""
        with pytest.raises(DomainError):
            iterate_orbit(MapParams(3, 1.0), 1.0, 0)


class TestCycles:
    """Test Newton solvers for periodic points"""

    def test_superattracting_fixed_point(self):
        """1/sqrt(2) with multiplier 0"""
        cycle = find_cycle(MapParams(3, 1 / 8), 0.7, 1, 1)
        assert cycle.points[0] == pytest.approx(SQRT_HALF, abs=1e-12)
        assert abs(cycle.multiplier) < 1e-10

    def test_parabolic_fixed_point(self):
        """lambda = 4/27 has the double fixed point sqrt(2/3)"""
        cycle = find_cycle(MapParams(3, 4 / 27), 0.81, 1, 1)
        assert abs(cycle.points[0] - math.sqrt(2 / 3)) < 1e-5
        assert abs(cycle.multiplier - 1) < 1e-4

    def test_attracting_window(self):
        """lambda = 0.13 lies between the centre and the cusp"""
        params = MapParams(3, 0.13)
        cycle = attracting_cycle_from_critical_orbit(params)
        assert cycle is not None
        assert cycle.period == 1 and cycle.sign == 1
        assert abs(cycle.multiplier) < 1

    def test_cycle_residual_and_chain_rule(self):
        """Residual and multiplier agree with the composed map"""
        params = MapParams(3, 0.13)
        cycle = attracting_cycle_from_critical_orbit(params)
        z = cycle.points[0]
        assert abs(eval_map(params, z) - z) < 1e-10
        h = 1e-6
        fd = (eval_map(params, z + h) - eval_map(params, z - h)) / (2 * h)
        assert abs(cycle.multiplier - fd) < 1e-8

    def test_symmetric_cycle_detected(self):
        """lambda = -1/8 gives f(v+) = -v+ with kappa = 0"""
        cycle = attracting_cycle_from_critical_orbit(MapParams(3, -1 / 8))
        assert cycle.sign == -1
        assert cycle.period == 1
        assert cycle.full_period == 2
        assert abs(cycle.multiplier) < 1e-10
        assert abs(cycle.rho) < 1e-18

    def test_superattracting_center(self):
        """lambda = 1/8 gives period 1 and multiplier 0"""
        cycle = attracting_cycle_from_critical_orbit(MapParams(3, 1 / 8))
        assert (cycle.period, cycle.sign) == (1, 1)
        assert abs(cycle.multiplier) < 1e-10

    def test_escaping_parameter(self):
        """Cantor-locus parameters have no attracting cycle"""
        assert attracting_cycle_from_critical_orbit(MapParams(3, 100.0)) is None

    def test_non_convergence_raises(self):
        """A one-step budget cannot converge from a poor seed"""
        with pytest.raises(ConvergenceError):
            find_cycle(MapParams(3, 0.13), 1.5, 1, 1, max_steps=1)


class TestOrbitJets:
    """Test forward-mode orbit derivatives"""

    def test_matches_multiplier(self):
        """d/dz of f^q equals the chain-rule product"""
        params = MapParams(3, 0.1 + 0.05j)
        z = 0.6 + 0.2j
        value, a, _, _, _ = orbit_jets(params, z, 3)
        g, d, _ = orbit_multiplier(params, z, 3)
        assert value == pytest.approx(g)
        assert a == pytest.approx(d)

    def test_lambda_derivative(self):
        """d/dlambda agrees with a central difference"""
        lam, z, h = 0.1 + 0.05j, 0.6 + 0.2j, 1e-7
        _, _, b, _, e = orbit_jets(MapParams(3, lam), z, 2)
        plus = orbit_jets(MapParams(3, lam + h), z, 2)
        minus = orbit_jets(MapParams(3, lam - h), z, 2)
        assert abs(b - (plus[0] - minus[0]) / (2 * h)) < 1e-5 * max(1, abs(b))
        assert abs(e - (plus[1] - minus[1]) / (2 * h)) < 1e-5 * max(1, abs(e))
