import numpy as np
import pytest

from oculometry.core import EyeSide, Point, RasterMask
from oculometry.maskgeom import (
    BBox,
    bbox,
    canthi,
    dice,
    fit_iris,
    fit_margins,
    largest_component,
    mask_union,
    mirror_mask,
)
from oculometry.synth import EyeParams, _FissureGeom, render_eye_masks

from conftest import disc_mask, mask_from_coords, rect_mask


def dice_oracle(x: RasterMask, y: RasterMask) -> float:
    """Brute-force reference: count coordinate sets."""
    xs = {(i, j) for i, j in zip(*np.nonzero(x.pixels))}
    ys = {(i, j) for i, j in zip(*np.nonzero(y.pixels))}
    if not xs and not ys:
        return 1.0
    return 2.0 * len(xs & ys) / (len(xs) + len(ys))


class TestDice:
    def test_identical_masks(self):
        m = rect_mask(20, 20, 3, 4, 10, 12)
        assert dice(m, m) == 1.0

    def test_disjoint_masks(self):
        a = rect_mask(20, 20, 0, 0, 4, 4)
        b = rect_mask(20, 20, 10, 10, 14, 14)
        assert dice(a, b) == 0.0

    def test_shifted_block(self):
        # 2x2 blocks offset by one column: overlap 2 px, sizes 4 and 4
        a = rect_mask(10, 10, 2, 2, 3, 3)
        b = rect_mask(10, 10, 3, 2, 4, 3)
        assert dice(a, b) == 0.5

    def test_both_empty(self):
        a = RasterMask.blank(5, 5)
        assert dice(a, a) == 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            dice(RasterMask.blank(5, 5), RasterMask.blank(6, 5))

    def test_matches_oracle_on_random_pairs(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            a = RasterMask(rng.random((15, 18)) > 0.6)
            b = RasterMask(rng.random((15, 18)) > 0.6)
            assert dice(a, b) == dice_oracle(a, b)
            assert dice(a, b) == dice(b, a)
            if not a.empty:
                assert dice(a, a) == 1.0


class TestBBox:
    def test_single_pixel(self):
        m = mask_from_coords(10, 10, [(3, 7)])
        assert bbox(m) == BBox(3, 7, 3, 7)

    def test_full_mask(self):
        m = RasterMask(np.ones((6, 9), dtype=bool))
        assert bbox(m) == BBox(0, 0, 8, 5)

    def test_two_pixels(self):
        m = mask_from_coords(10, 12, [(1, 2), (5, 9)])
        assert bbox(m) == BBox(1, 2, 5, 9)

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            bbox(RasterMask.blank(4, 4))


class TestLargestComponent:
    def test_single_component_unchanged(self):
        m = rect_mask(12, 12, 2, 2, 6, 6)
        out = largest_component(m)
        assert np.array_equal(out.pixels, m.pixels)

    def test_keeps_big_blob(self):
        px = rect_mask(20, 20, 2, 2, 6, 3).pixels.copy()  # 10 px blob
        px[15, 15] = True  # 1 px speck
        out = largest_component(RasterMask(px))
        assert out.area == 10
        assert not out.pixels[15, 15]

    def test_tie_break_prefers_higher_blob(self):
        px = np.zeros((20, 20), dtype=bool)
        px[2:4, 5:7] = True  # 4 px, min_y = 2
        px[10:12, 3:5] = True  # 4 px, min_y = 10
        out = largest_component(RasterMask(px))
        assert out.pixels[2, 5] and not out.pixels[10, 3]

    def test_tie_break_min_x(self):
        px = np.zeros((20, 20), dtype=bool)
        px[5:7, 10:12] = True
        px[5:7, 2:4] = True
        out = largest_component(RasterMask(px))
        assert out.pixels[5, 2] and not out.pixels[5, 10]

    def test_bbox_containment_property(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            m = RasterMask(rng.random((20, 25)) > 0.7)
            if m.empty:
                continue
            assert bbox(m).contains(bbox(largest_component(m)))

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            largest_component(RasterMask.blank(3, 3))


class TestFitIris:
    def test_filled_circle(self):
        m = disc_mask(101, 101, 50, 50, 20)
        fit = fit_iris(m)
        assert fit.center == Point(50.0, 50.0)
        assert abs(fit.diameter_px - 41) <= 1

    def test_single_pixel(self):
        m = mask_from_coords(10, 10, [(4, 5)])
        fit = fit_iris(m)
        assert fit.diameter_px == 1.0
        assert fit.center == Point(4.0, 5.0)

    def test_half_moon_keeps_width(self):
        px = disc_mask(101, 101, 50, 50, 20).pixels.copy()
        px[:50, :] = False  # occlude the upper half
        fit = fit_iris(RasterMask(px))
        full = fit_iris(disc_mask(101, 101, 50, 50, 20))
        assert fit.diameter_px == full.diameter_px
        assert fit.center.x == 50.0

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            fit_iris(RasterMask.blank(4, 4))


class TestCanthi:
    def test_horizontal_bar_right_eye(self):
        m = rect_mask(64, 32, 5, 10, 40, 10)
        medial, lateral = canthi(m, EyeSide.RIGHT)
        assert (medial, lateral) == (Point(40.0, 10.0), Point(5.0, 10.0))

    def test_horizontal_bar_left_eye(self):
        m = rect_mask(64, 32, 5, 10, 40, 10)
        medial, lateral = canthi(m, EyeSide.LEFT)
        assert (medial, lateral) == (Point(5.0, 10.0), Point(40.0, 10.0))

    def test_median_row_rule(self):
        coords = [(5, 10), (6, 10), (40, 8), (40, 9), (40, 10)]
        # connect so the mask is one blob (canthi does not require it, but be tidy)
        coords += [(x, 10) for x in range(7, 40)]
        m = mask_from_coords(64, 32, coords)
        medial, _ = canthi(m, EyeSide.RIGHT)
        assert medial == Point(40.0, 9.0)

    def test_mirror_symmetry(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            m = RasterMask(rng.random((12, 30)) > 0.8)
            if m.empty:
                continue
            med, lat = canthi(m, EyeSide.RIGHT)
            med2, lat2 = canthi(mirror_mask(m), EyeSide.LEFT)
            assert med2.x == m.width - 1 - med.x and med2.y == med.y
            assert lat2.x == m.width - 1 - lat.x and lat2.y == lat.y

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            canthi(RasterMask.blank(4, 4), EyeSide.LEFT)


class TestFitMargins:
    def test_exact_quartic_recovery(self):
        # one pixel per column on y = x^2: least squares must recover it exactly
        coords = [(x, x * x) for x in range(21)]
        m = mask_from_coords(21, 401, coords)
        sup, inf = fit_margins(m)
        np.testing.assert_allclose(sup.coefficients, [0, 0, 1, 0, 0], atol=1e-6)
        for x in range(21):
            assert abs(sup(x) - x * x) < 1e-6
            assert abs(inf(x) - x * x) < 1e-6

    def test_rectangle_margins_are_flat(self):
        m = rect_mask(60, 40, 5, 12, 50, 25)
        sup, inf = fit_margins(m)
        for x in (5, 20, 37, 50):
            assert abs(sup(x) - 12) < 1e-6
            assert abs(inf(x) - 25) < 1e-6

    def test_ellipse_boundary_recovery(self):
        # rasterized ellipse fissure: fitted margin vs the continuous boundary
        ep = EyeParams(center=Point(100.0, 100.0), fissure_a=50.0, fissure_b=20.0, iris_radius=15.0)
        sclera, iris, _ = render_eye_masks(ep, EyeSide.RIGHT, (220, 200))
        fissure = mask_union(sclera, iris)
        sup, inf = fit_margins(fissure)
        geom = _FissureGeom(Point(100.0, 100.0), 50.0, 20.0, 0.0)
        assert abs(sup(100.0) - geom.top(100.0)) <= 0.5
        assert abs(inf(100.0) - geom.bot(100.0)) <= 0.5

    def test_symmetric_mask_margins_reflect(self):
        # band symmetric about row 30: superior and inferior mirror each other
        coords = []
        for x in range(40):
            half = 3 + (x % 5)
            for y in range(30 - half, 30 + half + 1):
                coords.append((x, y))
        m = mask_from_coords(40, 64, coords)
        sup, inf = fit_margins(m)
        for x in range(0, 40, 3):
            assert abs((sup(x) + inf(x)) / 2.0 - 30.0) < 1e-6

    def test_too_few_columns(self):
        m = mask_from_coords(10, 10, [(0, 1), (1, 2), (2, 3), (3, 4)])
        with pytest.raises(ValueError):
            fit_margins(m)

    def test_domain_enforced(self):
        m = rect_mask(30, 20, 5, 5, 25, 10)
        sup, _ = fit_margins(m)
        with pytest.raises(ValueError):
            sup(4.0)
        with pytest.raises(ValueError):
            sup(26.0)

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            fit_margins(RasterMask.blank(5, 5))
