"""
Tests for escape grids, basin labels, level classification and images.
"""

import cmath
import math
import sys
import os

import numpy as np
import pytest
from PIL import Image

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src.dynamics.core import MapParams
from src.render.classify import (
    ClassificationResult,
    Label,
    ResultKind,
    UNDETERMINED_CODE,
    basin_components,
    classify_fast,
    classify_fast_array,
    classify_oracle,
    escape_time_grid,
    julia_area_estimate,
    render_julia,
)
from src.render.images import BBox, level_palette, read_ppm, save_image, write_ppm
from src.utils.error_handling import ResolutionError


def _random_lambdas(count, seed, scale=0.6):
    rng = np.random.default_rng(seed)
    return scale * (rng.random(count) - 0.5) * 2 + 1j * scale * (rng.random(count) - 0.5) * 2


class TestEscapeTimeGrid:
    """Test escape-time grids"""

    def test_cantor_regime_escapes(self):
        """Almost nothing survives for lambda = 100"""
        grid = escape_time_grid(MapParams(3, 100.0), BBox(-2, 2, -2, 2), (512, 512), 500)
        assert grid.survivor_fraction < 0.01

    def test_outside_escape_radius(self):
        """Pixels beyond R escape at step 0"""
        bbox = BBox(9, 11, -1, 1)
        grid = escape_time_grid(MapParams(3, 0.1), bbox, (4, 4), 50)
        row, col = bbox.pixel_of(10 + 0j, (4, 4))
        assert grid.escape_time[row, col] == 0
        assert np.all(grid.escape_time == 0)

    def test_quarter_turn_symmetry(self):
        """n = 4: rotation by i = e^(2 pi i/n) maps the grid to itself"""
        grid = escape_time_grid(MapParams(4, 0.05 + 0.1j), BBox.square(0, 2.5), (200, 200), 200)
        rotated = np.rot90(grid.escape_time)
        assert np.mean(rotated == grid.escape_time) >= 0.99

    def test_half_turn_symmetry(self):
        """n = 3: z -> -z = e^(3 pi i/3) z preserves escape times"""
        grid = escape_time_grid(MapParams(3, 0.2 + 0.2j), BBox.square(0, 2.5), (200, 200), 200)
        rotated = np.rot90(grid.escape_time, 2)
        assert np.mean(rotated == grid.escape_time) >= 0.99

    def test_resolution_too_small(self):
        with pytest.raises(ResolutionError):
            escape_time_grid(MapParams(3, 0.1), BBox.square(0, 1), (1, 5))


class TestBasinComponents:
    """Test B / T flood fills"""

    def test_merge_in_cantor_regime(self):
        """B = T for lambda = 100"""
        params = MapParams(3, 100.0)
        grid = escape_time_grid(params, BBox.square(0, 1.5 * params.escape_radius), (256, 256), 200)
        labeled = basin_components(grid, params)
        assert labeled.merged
        assert labeled.pixel_label(0j)[0] == Label.B

    def test_outside_radius_is_basin(self):
        """|center| > R pixels are labeled B with escape time 0"""
        params = MapParams(3, 1j / 8)
        grid = basin_components(escape_time_grid(params, BBox.square(0, 3), (128, 128), 200), params)
        outside = np.abs(grid.centers()) > params.escape_radius
        assert outside.any()
        assert np.all(grid.label[outside] == Label.B)
        assert np.all(grid.escape_time[outside] == 0)

    @pytest.mark.slow
    def test_trap_separated_from_basin(self):
        """Small lambda: T and B are distinct, with non-escaping pixels between them"""
        params = MapParams(3, 1e-4)
        grid = escape_time_grid(params, BBox.square(0, 2.5), (1024, 1024), 300)
        labeled = basin_components(grid, params)
        assert not labeled.merged
        assert labeled.pixel_label(0j)[0] == Label.T
        assert labeled.pixel_label(2.4 + 0j)[0] == Label.B
        row, _ = labeled.bbox.pixel_of(0.5 + 0j, labeled.resolution)
        centers = labeled.centers()[row]
        band = (centers.real > 0.05) & (centers.real < 1.0)
        assert np.any(labeled.label[row][band] == Label.NON_ESCAPING)

    def test_coarse_grid_rejected(self):
        """The seed disk must contain a pixel centre"""
        params = MapParams(3, 1e-6)
        grid = escape_time_grid(params, BBox.square(0, 3), (64, 64), 100)
        with pytest.raises(ResolutionError):
            basin_components(grid, params)


class TestClassifyOracle:
    """Test the grid-based classifier"""

    def test_cantor_regime(self):
        result = classify_oracle(MapParams(3, 100.0))
        assert result.kind == ResultKind.ESCAPE
        assert result.level == 0

    def test_mcmullen_regime(self):
        result = classify_oracle(MapParams(3, 1e-6))
        assert result.kind == ResultKind.ESCAPE
        assert result.level == 2

    def test_sierpinski_hole_center(self):
        """f(v+) = 0 for lambda = i/8"""
        result = classify_oracle(MapParams(3, 1j / 8))
        assert result.kind == ResultKind.ESCAPE
        assert result.level == 3

    def test_bounded_orbit(self):
        result = classify_oracle(MapParams(3, 1 / 8), maxiter=2000)
        assert result.kind == ResultKind.NON_ESCAPE


class TestClassifyFast:
    """Test the orbit-only heuristic"""

    @pytest.mark.parametrize("lam,level", [(100.0, 0), (1e-6, 2), (1j / 8, 3)])
    def test_examples(self, lam, level):
        result = classify_fast(MapParams(3, lam))
        assert result.kind == ResultKind.ESCAPE
        assert result.level == level

    def test_bounded_orbit(self):
        assert classify_fast(MapParams(3, 1 / 8), maxiter=2000).kind == ResultKind.NON_ESCAPE

    @pytest.mark.parametrize("lam", [100.0, 1e-6, 1j / 8])
    def test_agrees_with_oracle(self, lam):
        params = MapParams(3, lam)
        assert classify_fast(params).level == classify_oracle(params).level

    def test_level_one_rejected(self):
        """H_1 is empty"""
        with pytest.raises(ValueError):
            ClassificationResult(ResultKind.ESCAPE, level=1)

    def test_level_one_never_reported(self):
        codes = classify_fast_array(3, _random_lambdas(2000, 1), maxiter=500)
        assert not np.any(codes == 1)

    def test_conjugation_symmetry(self):
        lams = _random_lambdas(500, 2)
        np.testing.assert_array_equal(
            classify_fast_array(3, lams, maxiter=500),
            classify_fast_array(3, np.conj(lams), maxiter=500),
        )

    @pytest.mark.parametrize("n", [3, 4])
    def test_rotation_symmetry(self, n):
        """lambda -> e^(2 pi i/(n-1)) lambda"""
        lams = _random_lambdas(500, 3 + n)
        rotated = lams * cmath.exp(2j * math.pi / (n - 1))
        a = classify_fast_array(n, lams, maxiter=500)
        b = classify_fast_array(n, rotated, maxiter=500)
        assert np.mean(a == b) >= 0.98

    def test_array_matches_scalar(self):
        lams = _random_lambdas(200, 4)
        codes = classify_fast_array(3, lams, maxiter=500)
        scalar = [classify_fast(MapParams(3, complex(lam)), maxiter=500).code for lam in lams]
        assert np.mean(codes == np.array(scalar)) >= 0.98

    def test_undetermined_rate(self):
        """Escaping parameters near 0 are rarely undetermined"""
        xs = np.linspace(-0.3, 0.3, 64)
        lams = xs[None, :] + 1j * xs[:, None]
        lams = lams[lams != 0]
        codes = classify_fast_array(3, lams, maxiter=1000)
        escaping = codes != -1
        assert np.mean(codes[escaping] == UNDETERMINED_CODE) < 0.05


class TestJuliaArea:
    """Test the pixel measure diagnostic"""

    def test_cantor_area_shrinks(self):
        """Each doubling at least halves the area for lambda = 100"""
        areas = julia_area_estimate(MapParams(3, 100.0), [128, 256, 512], maxiter=200)
        assert len(areas) == 3
        for coarse, fine in zip(areas, areas[1:]):
            assert fine <= coarse / 2


class TestRenderJulia:
    """Test Julia rendering"""

    def test_image_shape(self):
        image = render_julia(MapParams(3, 1j / 8), BBox.square(0, 3), (64, 48), 100)
        assert image.shape == (48, 64, 3)
        assert image.dtype == np.uint8

    def test_coarse_grid_renders_without_labels(self):
        image = render_julia(MapParams(3, 1e-6), BBox.square(0, 3), (16, 16), 50)
        assert image.shape == (16, 16, 3)


class TestImages:
    """Test pixel geometry and image files"""

    def test_pixel_geometry(self):
        bbox = BBox(-1, 1, -1, 1)
        centers = bbox.centers((4, 2))
        assert centers.shape == (2, 4)
        assert centers[0, 0] == pytest.approx(-0.75 + 0.5j)
        assert bbox.pixel_of(-0.75 + 0.5j, (4, 2)) == (0, 0)
        assert bbox.pixel_of(2 + 0j, (4, 2)) is None

    def test_empty_box(self):
        with pytest.raises(ResolutionError):
            BBox(1, 1, 0, 1)

    def test_ppm_header(self, tmp_path):
        image = np.zeros((3, 4, 3), dtype=np.uint8)
        image[1, 2] = (10, 20, 30)
        path = write_ppm(str(tmp_path / "out.ppm"), image)
        data = open(path, 'rb').read()
        assert data.startswith(b"P6\n4 3\n255\n")
        assert len(data) == len(b"P6\n4 3\n255\n") + 36
        np.testing.assert_array_equal(read_ppm(path), image)

    def test_png_written_on_request(self, tmp_path):
        image = np.full((5, 7, 3), 200, dtype=np.uint8)
        paths = save_image(str(tmp_path / "plane"), image, png=True)
        assert [os.path.splitext(p)[1] for p in paths] == ['.ppm', '.png']
        with Image.open(paths[1]) as png:
            assert png.size == (7, 5)

    def test_level_palette(self):
        image = level_palette(np.array([[0, 2], [-1, -2]]))
        assert image.shape == (2, 2, 3)
        assert tuple(image[1, 0]) == (0, 0, 0)
        assert tuple(image[1, 1]) == (128, 128, 128)
