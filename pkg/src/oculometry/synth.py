"""Parametric synthetic faces with analytically known measurements.

The eye model is an elliptical palpebral fissure (optionally tilted), an
iris disc clipped to it, and a parabolic brow band.  Every measurement the
package produces has a continuous closed-form (or finely enumerated)
counterpart here, which makes rendered faces a ground-truth oracle for the
whole measurement pipeline.

Rasterization conventions, chosen so that mask-derived measurements are
unbiased estimates of the continuous geometry:

* fissure and brow: a pixel is set when its unit square touches the shape
  (half-pixel dilation), which centers row/column quantization error on the
  true boundary;
* iris: a pixel is set when its integer lattice point lies inside the disc,
  intersected with the fissure pixels.  Populations draw integer-valued
  iris centers and half-integer radii so the fitted iris center and
  diameter are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    EyeRecord,
    EyeSide,
    FaceRecord,
    MeasurementSet,
    PER_SIDE_FEATURES,
    Point,
    RasterMask,
    feature_registry,
)

_IRIS_SCAN_POINTS = 4097


@dataclass(frozen=True)
class EyeParams:
    """Continuous description of one synthetic eye, in the upright face frame."""

    center: Point  # fissure center
    fissure_a: float  # horizontal semi-axis before tilt
    fissure_b: float  # vertical semi-axis before tilt
    iris_radius: float
    iris_offset: tuple[float, float] = (0.0, 0.0)  # iris center relative to fissure center
    tilt_deg: float = 0.0  # anatomical tilt; positive lifts the lateral canthus
    brow_offset: float = 38.0  # eye center to the brow's inferior edge at the vertex
    brow_height: float = 10.0  # vertical thickness of the brow band
    brow_bow: float = 6.0  # how far the band sags toward the canthi
    brow_half_width: Optional[float] = None  # defaults to the canthal half-width

    def __post_init__(self) -> None:
        if self.fissure_a <= 0 or self.fissure_b <= 0 or self.iris_radius <= 0:
            raise ValueError("fissure axes and iris radius must be positive")
        if self.brow_height <= 0:
            raise ValueError("brow band must have positive height")


@dataclass(frozen=True)
class FaceParams:
    left: EyeParams
    right: EyeParams
    nasion: Point
    hairline_mid: Point
    rotation_deg: float = 0.0
    image_size: tuple[int, int] = (480, 320)
    face_id: str = ""

    def __post_init__(self) -> None:
        if (
            abs(self.nasion.x - self.hairline_mid.x) < 1e-12
            and abs(self.nasion.y - self.hairline_mid.y) < 1e-12
        ):
            raise ValueError("landmarks coincide")


def _geometric_angle(ep: EyeParams, side: EyeSide) -> float:
    """Image-frame ellipse rotation realizing the anatomical tilt for a side."""
    return math.radians(ep.tilt_deg if side is EyeSide.RIGHT else -ep.tilt_deg)


class _FissureGeom:
    """Column geometry of a rotated ellipse: boundary rows, extent, canthi."""

    def __init__(self, center: Point, a: float, b: float, phi: float):
        self.center = center
        self.a = a
        self.b = b
        s, c = math.sin(phi), math.cos(phi)
        self._A = s * s / (a * a) + c * c / (b * b)
        self._Bfac = 2.0 * s * c * (1.0 / (a * a) - 1.0 / (b * b))
        self._Cfac = c * c / (a * a) + s * s / (b * b)
        self.half_width = math.sqrt(a * a * c * c + b * b * s * s)
        self.half_height = math.sqrt(a * a * s * s + b * b * c * c)
        # y offset of the x-extreme (canthus) points, relative to the center
        self._canthus_dy = s * c * (a * a - b * b) / self.half_width
        # x offset of the y-extreme (apex) points, relative to the center
        self._apex_dx = s * c * (a * a - b * b) / self.half_height
        self.area = math.pi * a * b

    def interval(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(top, bot) boundary rows per column; NaN outside the ellipse."""
        dx = np.asarray(x, dtype=float) - self.center.x
        B = self._Bfac * dx
        C = self._Cfac * dx * dx - 1.0
        disc = B * B - 4.0 * self._A * C
        inside = np.abs(dx) <= self.half_width + 1e-12
        sq = np.sqrt(np.clip(disc, 0.0, None))
        top = np.where(inside, self.center.y + (-B - sq) / (2.0 * self._A), np.nan)
        bot = np.where(inside, self.center.y + (-B + sq) / (2.0 * self._A), np.nan)
        return top, bot

    def top(self, x: float) -> float:
        t, _ = self.interval(np.array([x]))
        return float(t[0])

    def bot(self, x: float) -> float:
        _, b = self.interval(np.array([x]))
        return float(b[0])

    @property
    def x_top_apex(self) -> float:
        return self.center.x - self._apex_dx

    @property
    def x_bot_apex(self) -> float:
        return self.center.x + self._apex_dx

    def extreme_points(self) -> tuple[Point, Point]:
        """Boundary points at minimum and maximum x (the canthus locations)."""
        lo = Point(self.center.x - self.half_width, self.center.y - self._canthus_dy)
        hi = Point(self.center.x + self.half_width, self.center.y + self._canthus_dy)
        return lo, hi

    def canthus_points(self, side: EyeSide) -> tuple[Point, Point]:
        """(medial, lateral) canthus points for the given anatomical side."""
        lo, hi = self.extreme_points()
        return (hi, lo) if side.medial_sign > 0 else (lo, hi)


class _BrowGeom:
    """Parabolic brow band: inferior edge y = base + bow * ((x-cx)/hw)^2.

    The parabola is scaled by the fissure's canthal half-width so the edges
    take predictable values above the canthi; the band itself may extend
    further laterally (``brow_half_width``).
    """

    def __init__(self, ep: EyeParams, fissure_half_width: float):
        self.cx = ep.center.x
        self.base = ep.center.y - ep.brow_offset
        self.bow = ep.brow_bow
        self.height = ep.brow_height
        self.hw = fissure_half_width
        self.domain_hw = (
            ep.brow_half_width if ep.brow_half_width is not None else fissure_half_width
        )

    def edge_inferior(self, x: np.ndarray) -> np.ndarray:
        xi = (np.asarray(x, dtype=float) - self.cx) / self.hw
        return self.base + self.bow * xi * xi

    def edge_superior(self, x: np.ndarray) -> np.ndarray:
        return self.edge_inferior(x) - self.height

    @property
    def x_range(self) -> tuple[float, float]:
        return (self.cx - self.domain_hw, self.cx + self.domain_hw)


def _raster_vconvex(
    top_fn: Callable[[np.ndarray], np.ndarray],
    bot_fn: Callable[[np.ndarray], np.ndarray],
    x_lo: float,
    x_hi: float,
    shape_hw: tuple[int, int],
    x_top_min: Optional[float] = None,
    x_bot_max: Optional[float] = None,
) -> np.ndarray:
    """Rasterize a column-convex region with the square-touch rule.

    For each pixel column the shape's rows are the union over the half-pixel
    strip around the column; a pixel is set when its square meets those rows.
    ``x_top_min`` / ``x_bot_max`` give interior extrema of the boundary
    functions so strip minima/maxima are exact, not just endpoint-sampled.
    """
    h, w = shape_hw
    lo_col = max(0, math.ceil(x_lo - 0.5))
    hi_col = min(w - 1, math.floor(x_hi + 0.5))
    out = np.zeros((h, w), dtype=bool)
    if lo_col > hi_col:
        return out
    cols = np.arange(lo_col, hi_col + 1)
    u_a = np.clip(cols - 0.5, x_lo, x_hi)
    u_b = np.clip(cols + 0.5, x_lo, x_hi)

    tops = [top_fn(u_a), top_fn(u_b)]
    bots = [bot_fn(u_a), bot_fn(u_b)]
    if x_top_min is not None:
        inside = (u_a <= x_top_min) & (x_top_min <= u_b)
        t = np.where(inside, top_fn(np.full_like(u_a, x_top_min)), np.inf)
        tops.append(t)
    if x_bot_max is not None:
        inside = (u_a <= x_bot_max) & (x_bot_max <= u_b)
        b = np.where(inside, bot_fn(np.full_like(u_a, x_bot_max)), -np.inf)
        bots.append(b)
    strip_top = np.nanmin(np.vstack(tops), axis=0)
    strip_bot = np.nanmax(np.vstack(bots), axis=0)

    row_lo = np.ceil(strip_top - 0.5).astype(int)
    row_hi = np.floor(strip_bot + 0.5).astype(int)
    row_lo = np.clip(row_lo, 0, h - 1)
    row_hi = np.clip(row_hi, -1, h - 1)
    rows = np.arange(h)[:, None]
    out[:, cols] = (rows >= row_lo[None, :]) & (rows <= row_hi[None, :])
    return out


def _raster_disc_lattice(
    cx: float, cy: float, r: float, shape_hw: tuple[int, int]
) -> np.ndarray:
    """Rasterize a disc with the lattice-point rule."""
    h, w = shape_hw
    out = np.zeros((h, w), dtype=bool)
    lo_col = max(0, math.ceil(cx - r))
    hi_col = min(w - 1, math.floor(cx + r))
    if lo_col > hi_col:
        return out
    cols = np.arange(lo_col, hi_col + 1)
    g = np.sqrt(np.clip(r * r - (cols - cx) ** 2, 0.0, None))
    row_lo = np.clip(np.ceil(cy - g).astype(int), 0, h - 1)
    row_hi = np.clip(np.floor(cy + g).astype(int), -1, h - 1)
    rows = np.arange(h)[:, None]
    out[:, cols] = (rows >= row_lo[None, :]) & (rows <= row_hi[None, :])
    return out


def _raster_band_rotated(
    brow: _BrowGeom,
    rotation_deg: float,
    rotation_center: Point,
    shape_hw: tuple[int, int],
) -> np.ndarray:
    """Rasterize a rotated brow band by subsampling each pixel square."""
    h, w = shape_hw
    th = math.radians(rotation_deg)
    c, s = math.cos(th), math.sin(th)
    x0, x1 = brow.x_range
    bow_at_ends = brow.bow * (brow.domain_hw / brow.hw) ** 2
    corners_face = [
        (x0, brow.base - brow.height),
        (x1, brow.base - brow.height),
        (x0, brow.base + bow_at_ends),
        (x1, brow.base + bow_at_ends),
    ]
    xs_img = [
        rotation_center.x + c * (x - rotation_center.x) - s * (y - rotation_center.y)
        for x, y in corners_face
    ]
    ys_img = [
        rotation_center.y + s * (x - rotation_center.x) + c * (y - rotation_center.y)
        for x, y in corners_face
    ]
    pad = 2
    cx0 = max(0, math.floor(min(xs_img)) - pad)
    cx1 = min(w - 1, math.ceil(max(xs_img)) + pad)
    cy0 = max(0, math.floor(min(ys_img)) - pad)
    cy1 = min(h - 1, math.ceil(max(ys_img)) + pad)
    out = np.zeros((h, w), dtype=bool)
    if cx0 > cx1 or cy0 > cy1:
        return out
    ys, xs = np.mgrid[cy0 : cy1 + 1, cx0 : cx1 + 1]
    hit = np.zeros(xs.shape, dtype=bool)
    for dx in (-0.5, 0.0, 0.5):
        for dy in (-0.5, 0.0, 0.5):
            px = xs + dx - rotation_center.x
            py = ys + dy - rotation_center.y
            fx = rotation_center.x + c * px + s * py
            fy = rotation_center.y - s * px + c * py
            xi = (fx - brow.cx) / brow.hw
            edge = brow.base + brow.bow * xi * xi
            inside = (
                (np.abs(fx - brow.cx) <= brow.domain_hw)
                & (fy >= edge - brow.height)
                & (fy <= edge)
            )
            hit |= inside
    out[cy0 : cy1 + 1, cx0 : cx1 + 1] = hit
    return out


def _rotate_point(p: Point, deg: float, center: Point) -> Point:
    th = math.radians(deg)
    c, s = math.cos(th), math.sin(th)
    dx, dy = p.x - center.x, p.y - center.y
    return Point(center.x + c * dx - s * dy, center.y + s * dx + c * dy)


def _iris_region_scan(
    geom: _FissureGeom, iris_center: Point, r: float
) -> tuple[Point, float, float, float, float]:
    """Continuous bounding box and area of the visible iris (disc ∩ ellipse).

    Returns (bbox center, horizontal diameter, top row, bottom row, area).
    The scan enumerates columns finely; resolution error is far below raster
    quantization.
    """
    lo = max(iris_center.x - r, geom.center.x - geom.half_width)
    hi = min(iris_center.x + r, geom.center.x + geom.half_width)
    if lo >= hi:
        raise ValueError("iris lies outside the fissure")
    xs = np.linspace(lo, hi, _IRIS_SCAN_POINTS)
    g = np.sqrt(np.clip(r * r - (xs - iris_center.x) ** 2, 0.0, None))
    disc_top = iris_center.y - g
    disc_bot = iris_center.y + g
    ell_top, ell_bot = geom.interval(xs)
    top = np.maximum(disc_top, ell_top)
    bot = np.minimum(disc_bot, ell_bot)
    keep = top <= bot
    if not keep.any():
        raise ValueError("iris and fissure do not intersect")
    x_min, x_max = float(xs[keep].min()), float(xs[keep].max())
    y_min = float(top[keep].min())
    y_max = float(bot[keep].max())
    center = Point((x_min + x_max) / 2.0, (y_min + y_max) / 2.0)
    widths = np.where(keep, bot - top, 0.0)
    area = float(np.trapezoid(widths, xs))
    return center, x_max - x_min, y_min, y_max, area


def _signed_height_above_line(p: Point, a: Point, b: Point) -> float:
    """Perpendicular distance from p to line ab, positive on the superior side."""
    dx, dy = b.x - a.x, b.y - a.y
    norm = math.hypot(dx, dy)
    if norm < 1e-12:
        raise ValueError("degenerate line")
    nx, ny = dy / norm, -dx / norm
    if ny > 0:
        nx, ny = -nx, -ny
    return (p.x - a.x) * nx + (p.y - a.y) * ny


def _eye_truth(ep: EyeParams, side: EyeSide) -> dict[str, float]:
    """Continuous per-eye measurements plus the points face-level features need."""
    phi = _geometric_angle(ep, side)
    geom = _FissureGeom(ep.center, ep.fissure_a, ep.fissure_b, phi)
    brow = _BrowGeom(ep, geom.half_width)
    medial, lateral = geom.canthus_points(side)
    iris_center = Point(ep.center.x + ep.iris_offset[0], ep.center.y + ep.iris_offset[1])
    center, diameter, _, _, iris_area = _iris_region_scan(geom, iris_center, ep.iris_radius)

    top_c = geom.top(center.x)
    bot_c = geom.bot(center.x)
    mrd1 = center.y - top_c
    mrd2 = bot_c - center.y
    iss = max(0.0, bot_c - (center.y + diameter / 2.0))
    sss = max(0.0, (center.y - diameter / 2.0) - top_c)

    v = (lateral.x - medial.x, lateral.y - medial.y)
    tilt = math.degrees(math.atan2(-v[1], abs(v[0])))

    def brow_pair(x: float, ref_y: float) -> tuple[float, float]:
        sup = float(brow.edge_superior(np.array([x]))[0])
        inf = float(brow.edge_inferior(np.array([x]))[0])
        return ref_y - sup, ref_y - inf

    sup_med, inf_med = brow_pair(medial.x, medial.y)
    sup_cen, inf_cen = brow_pair(center.x, center.y)
    sup_lat, inf_lat = brow_pair(lateral.x, lateral.y)

    sclera_area = geom.area - iris_area
    return {
        "mrd1": mrd1,
        "mrd2": mrd2,
        "iss": iss,
        "sss": sss,
        "vpf": mrd1 + mrd2,
        "hpf": 2.0 * geom.half_width,
        "canthal_tilt_deg": tilt,
        "scleral_area_ratio": sclera_area / iris_area,
        "brow_sup_medial": sup_med,
        "brow_sup_central": sup_cen,
        "brow_sup_lateral": sup_lat,
        "brow_inf_medial": inf_med,
        "brow_inf_central": inf_cen,
        "brow_inf_lateral": inf_lat,
        "_medial_x": medial.x,
        "_medial_y": medial.y,
        "_lateral_x": lateral.x,
        "_lateral_y": lateral.y,
        "_iris_x": center.x,
        "_iris_y": center.y,
        "_iris_diameter": diameter,
    }


def analytic_measurements(params: FaceParams) -> MeasurementSet:
    """Ground-truth measurement set of a parametric face, in pixels.

    Values describe the upright (unrotated) face frame; a rendered rotated
    face reproduces them after orientation normalization.
    """
    truths = {
        EyeSide.RIGHT: _eye_truth(params.right, EyeSide.RIGHT),
        EyeSide.LEFT: _eye_truth(params.left, EyeSide.LEFT),
    }
    values = {n: 0.0 for n in feature_registry()}
    valid = {n: True for n in feature_registry()}
    for side, truth in truths.items():
        for f in PER_SIDE_FEATURES:
            if f in ("medial_canthal_height", "lateral_canthal_height"):
                continue  # face-level: needs both iris centers
            values[f"{side.prefix}_{f}"] = float(truth[f])

    r, l = truths[EyeSide.RIGHT], truths[EyeSide.LEFT]
    values["icd"] = abs(l["_medial_x"] - r["_medial_x"])
    values["ocd"] = abs(l["_lateral_x"] - r["_lateral_x"])
    values["ipd"] = abs(l["_iris_x"] - r["_iris_x"])
    values["vertical_dystopia"] = abs(l["_medial_y"] - r["_medial_y"])

    line_a = Point(r["_iris_x"], r["_iris_y"])
    line_b = Point(l["_iris_x"], l["_iris_y"])
    for side, truth in truths.items():
        med = Point(truth["_medial_x"], truth["_medial_y"])
        lat = Point(truth["_lateral_x"], truth["_lateral_y"])
        values[f"{side.prefix}_medial_canthal_height"] = _signed_height_above_line(
            med, line_a, line_b
        )
        values[f"{side.prefix}_lateral_canthal_height"] = _signed_height_above_line(
            lat, line_a, line_b
        )
    return MeasurementSet(units="px", values=values, valid=valid, face_id=params.face_id)


def iris_truth_diameter(ep: EyeParams, side: EyeSide) -> float:
    """Continuous horizontal diameter of the visible iris."""
    return _eye_truth(ep, side)["_iris_diameter"]


def render_eye_masks(
    ep: EyeParams,
    side: EyeSide,
    image_size: tuple[int, int],
    rotation_deg: float = 0.0,
    rotation_center: Optional[Point] = None,
) -> tuple[RasterMask, RasterMask, RasterMask]:
    """Rasterize (sclera, iris, brow) masks for one eye.

    ``rotation_deg`` rotates the whole scene about ``rotation_center`` in
    continuous space before rasterization, so rotated renders carry no
    resampling artifacts.
    """
    w, h = image_size
    phi = _geometric_angle(ep, side)
    # the brow band is defined against the upright fissure's canthal half-width
    upright_hw = _FissureGeom(ep.center, ep.fissure_a, ep.fissure_b, phi).half_width
    center_img = ep.center
    if rotation_deg != 0.0:
        if rotation_center is None:
            raise ValueError("rotation requires a center")
        center_img = _rotate_point(ep.center, rotation_deg, rotation_center)
        phi += math.radians(rotation_deg)
    geom = _FissureGeom(center_img, ep.fissure_a, ep.fissure_b, phi)

    lo_pt, hi_pt = geom.extreme_points()
    y_lo = geom.top(geom.x_top_apex)
    y_hi = geom.bot(geom.x_bot_apex)
    if lo_pt.x < 1 or hi_pt.x > w - 2 or y_lo < 1 or y_hi > h - 2:
        raise ValueError(f"fissure out of image bounds for eye at {ep.center}")

    fissure = _raster_vconvex(
        lambda x: geom.interval(x)[0],
        lambda x: geom.interval(x)[1],
        geom.center.x - geom.half_width,
        geom.center.x + geom.half_width,
        (h, w),
        x_top_min=geom.x_top_apex,
        x_bot_max=geom.x_bot_apex,
    )

    iris_center = Point(ep.center.x + ep.iris_offset[0], ep.center.y + ep.iris_offset[1])
    if rotation_deg != 0.0:
        iris_center = _rotate_point(iris_center, rotation_deg, rotation_center)
    iris = _raster_disc_lattice(iris_center.x, iris_center.y, ep.iris_radius, (h, w))
    iris &= fissure
    sclera = fissure & ~iris

    brow = _BrowGeom(ep, upright_hw)
    bx0, bx1 = brow.x_range
    if rotation_deg == 0.0:
        if bx0 < 1 or bx1 > w - 2 or brow.base - brow.height < 1:
            raise ValueError(f"brow out of image bounds for eye at {ep.center}")
        brow_px = _raster_vconvex(
            brow.edge_superior,
            brow.edge_inferior,
            bx0,
            bx1,
            (h, w),
            x_top_min=brow.cx,
            x_bot_max=None,
        )
    else:
        brow_px = _raster_band_rotated(brow, rotation_deg, rotation_center, (h, w))

    return (
        RasterMask(sclera, "sclera"),
        RasterMask(iris, "iris"),
        RasterMask(brow_px, "brow"),
    )


def render_face(params: FaceParams) -> tuple[FaceRecord, MeasurementSet]:
    """Rasterize a parametric face and return it with its analytic truth."""
    w, h = params.image_size
    rot = params.rotation_deg
    eyes = {}
    for side, ep in ((EyeSide.RIGHT, params.right), (EyeSide.LEFT, params.left)):
        sclera, iris, brow = render_eye_masks(
            ep, side, params.image_size, rotation_deg=rot, rotation_center=params.nasion
        )
        eyes[side] = EyeRecord(
            side=side,
            sclera=sclera,
            iris=iris,
            brow=brow,
            record_id=f"{params.face_id}/{side.prefix}",
        )
    nasion = params.nasion
    hairline = params.hairline_mid
    if rot != 0.0:
        hairline = _rotate_point(hairline, rot, nasion)
    face = FaceRecord(
        left=eyes[EyeSide.LEFT],
        right=eyes[EyeSide.RIGHT],
        nasion=nasion,
        hairline_mid=hairline,
        image_size=params.image_size,
        face_id=params.face_id,
    )
    return face, analytic_measurements(params)


# ---------------------------------------------------------------------------
# Population generator
# ---------------------------------------------------------------------------

IMAGE_SIZE = (480, 320)
_FACE_CX = 240
_EYE_LINE_Y = 150

HEALTHY_LABEL = "healthy"
DISEASE_LABEL = "disease"


def _draw_eye(rng: np.random.Generator, diseased: bool, eye_x: int, eye_y: int) -> EyeParams:
    # Integer canthal half-width and integer-aligned iris keep the raster
    # estimates of hpf/icd/ocd/ipd and the iris fit exact.
    half_width = int(rng.integers(47, 57))
    b = float(rng.uniform(15.5, 18.0))
    if diseased:
        b *= 1.25  # lid retraction widens the fissure vertically
        tilt = float(np.clip(rng.normal(-0.5, 1.8), -5.0, 4.0))
        iris_k = int(rng.integers(19, 21))  # radius 19.5 or 20.5
        dy = int(rng.integers(-8, -3))  # iris rides high: inferior scleral show
    else:
        tilt = float(np.clip(rng.normal(2.5, 1.2), -1.0, 5.5))
        iris_k = int(rng.integers(20, 23))  # radius 20.5 .. 22.5
        dy = 0
    r = iris_k + 0.5
    phi = math.radians(tilt)
    a = math.sqrt((half_width**2 - (b * math.sin(phi)) ** 2)) / abs(math.cos(phi))
    return EyeParams(
        center=Point(float(eye_x), float(eye_y)),
        fissure_a=a,
        fissure_b=b,
        iris_radius=r,
        iris_offset=(0.0, float(dy)),
        tilt_deg=tilt,
        brow_offset=float(rng.integers(38, 46)),
        brow_height=float(rng.integers(9, 14)),
        brow_bow=float(rng.integers(4, 10)),
        brow_half_width=float(half_width + 6),
    )


def draw_face_params(rng: np.random.Generator, label: str, face_id: str = "") -> FaceParams:
    """Draw one face's parameters from the documented baseline ranges."""
    if label not in (HEALTHY_LABEL, DISEASE_LABEL):
        raise ValueError(f"unknown class {label!r}")
    diseased = label == DISEASE_LABEL
    sep_r = int(rng.integers(112, 126))
    sep_l = int(rng.integers(112, 126))
    y_r = _EYE_LINE_Y + int(rng.integers(-2, 3))
    y_l = _EYE_LINE_Y + int(rng.integers(-2, 3))
    right = _draw_eye(rng, diseased, _FACE_CX - sep_r, y_r)
    left = _draw_eye(rng, diseased, _FACE_CX + sep_l, y_l)
    nasion_x = float(_FACE_CX + int(rng.integers(-2, 3)))
    nasion = Point(nasion_x, float(_EYE_LINE_Y + int(rng.integers(-2, 4))))
    hairline = Point(nasion_x, float(16 + int(rng.integers(0, 5))))
    return FaceParams(
        left=left,
        right=right,
        nasion=nasion,
        hairline_mid=hairline,
        image_size=IMAGE_SIZE,
        face_id=face_id,
    )


def gen_face_params_list(n: int, label: str, seed: int) -> list[FaceParams]:
    """Parameter draws for ``n`` faces of one class, deterministic under the seed."""
    if n < 1:
        raise ValueError("population size must be at least 1")
    streams = np.random.SeedSequence(seed).spawn(n)
    return [
        draw_face_params(np.random.default_rng(ss), label, face_id=f"{label}_{i:04d}")
        for i, ss in enumerate(streams)
    ]


def analytic_scales(params: FaceParams) -> tuple["Scale", "Scale"]:
    """(left, right) pixel-to-mm scales from the continuous iris diameters."""
    from .core import Scale

    return (
        Scale.from_iris_diameter(iris_truth_diameter(params.left, EyeSide.LEFT)),
        Scale.from_iris_diameter(iris_truth_diameter(params.right, EyeSide.RIGHT)),
    )


def gen_population(
    n: int, label: str, seed: int
) -> list[tuple[FaceRecord, MeasurementSet, str]]:
    """Generate ``n`` rendered faces of one class with their analytic truths.

    Deterministic under the seed; each face draws from an independent child
    RNG stream, so generation parallelizes without changing results.
    """
    out = []
    for params in gen_face_params_list(n, label, seed):
        face, truth = render_face(params)
        out.append((face, truth, label))
    return out
