"""Deterministic geometric primitives over binary masks.

Bounding boxes, connected components, overlap scoring, iris fitting,
canthus extraction, and the degree-4 eyelid-margin fits that every
higher-level measurement builds on.  All functions are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import EyeSide, Point, RasterMask

_CONNECT8 = np.ones((3, 3), dtype=int)

MARGIN_DEGREE = 4
_MIN_MARGIN_COLUMNS = MARGIN_DEGREE + 1


@dataclass(frozen=True)
class BBox:
    """Tight inclusive pixel bounds of a non-empty mask."""

    min_x: int
    min_y: int
    max_x: int
    max_y: int

    def __post_init__(self) -> None:
        if self.min_x > self.max_x or self.min_y > self.max_y:
            raise ValueError("degenerate bounding box")

    @property
    def width(self) -> int:
        return self.max_x - self.min_x + 1

    @property
    def height(self) -> int:
        return self.max_y - self.min_y + 1

    @property
    def center(self) -> Point:
        return Point((self.min_x + self.max_x) / 2.0, (self.min_y + self.max_y) / 2.0)

    def contains(self, other: "BBox") -> bool:
        return (
            self.min_x <= other.min_x
            and self.min_y <= other.min_y
            and other.max_x <= self.max_x
            and other.max_y <= self.max_y
        )


@dataclass(frozen=True)
class IrisFit:
    """Iris located by its visible extent.

    The center is the bounding-box center of the largest iris component and
    the diameter is the horizontal box width: the lids frequently occlude the
    iris vertically, so the horizontal extent is the reliable diameter proxy.
    """

    center: Point
    diameter_px: float


@dataclass(frozen=True)
class MarginPoly:
    """Degree-4 polynomial model of one eyelid margin, y = p(x).

    Coefficients are in ascending power order.  Evaluation is only defined
    over the fitted column range.
    """

    coefficients: np.ndarray
    domain: tuple[float, float]
    which: str  # "superior" or "inferior"

    def __post_init__(self) -> None:
        coefs = np.asarray(self.coefficients, dtype=float)
        if coefs.shape != (MARGIN_DEGREE + 1,):
            raise ValueError("margin polynomial must have 5 coefficients")
        if not np.all(np.isfinite(coefs)):
            raise ValueError("non-finite margin coefficients")
        coefs = coefs.copy()
        coefs.setflags(write=False)
        object.__setattr__(self, "coefficients", coefs)
        if self.which not in ("superior", "inferior"):
            raise ValueError(f"unknown margin kind {self.which!r}")

    def __call__(self, x: float) -> float:
        lo, hi = self.domain
        if not (lo - 1e-9 <= x <= hi + 1e-9):
            raise ValueError(f"x={x} outside margin domain [{lo}, {hi}]")
        return float(np.polynomial.polynomial.polyval(x, self.coefficients))


def dice(x: RasterMask, y: RasterMask) -> float:
    """Overlap score 2|X∩Y| / (|X|+|Y|) between two same-sized masks.

    Two empty masks agree perfectly and score 1.0.
    """
    if not x.same_shape(y):
        raise ValueError(f"mask dimensions differ: {x.pixels.shape} vs {y.pixels.shape}")
    sx = x.area
    sy = y.area
    if sx == 0 and sy == 0:
        return 1.0
    inter = int(np.logical_and(x.pixels, y.pixels).sum())
    return 2.0 * inter / (sx + sy)


def bbox(mask: RasterMask) -> BBox:
    if mask.empty:
        raise ValueError("bounding box of an empty mask")
    rows, cols = np.nonzero(mask.pixels)
    return BBox(int(cols.min()), int(rows.min()), int(cols.max()), int(rows.max()))


def largest_component(mask: RasterMask) -> RasterMask:
    """Keep only the largest 8-connected component.

    Size ties go to the component whose bounding box starts at the smallest
    row, then the smallest column.
    """
    if mask.empty:
        raise ValueError("largest component of an empty mask")
    labels, n = ndimage.label(mask.pixels, structure=_CONNECT8)
    if n == 1:
        return mask
    sizes = np.bincount(labels.ravel())
    sizes[0] = 0
    best_size = sizes.max()
    tied = np.flatnonzero(sizes == best_size)
    if len(tied) == 1:
        keep = tied[0]
    else:
        def corner(lab: int) -> tuple[int, int]:
            rows, cols = np.nonzero(labels == lab)
            return (int(rows.min()), int(cols.min()))

        keep = min(tied, key=corner)
    return RasterMask(labels == keep, mask.class_label)


def mask_union(a: RasterMask, b: RasterMask, class_label: str = "fissure") -> RasterMask:
    if not a.same_shape(b):
        raise ValueError("mask dimensions differ")
    return RasterMask(np.logical_or(a.pixels, b.pixels), class_label)


def mask_intersection(a: RasterMask, b: RasterMask, class_label: str = "") -> RasterMask:
    if not a.same_shape(b):
        raise ValueError("mask dimensions differ")
    return RasterMask(np.logical_and(a.pixels, b.pixels), class_label or a.class_label)


def fit_iris(iris: RasterMask) -> IrisFit:
    """Locate the iris center and horizontal diameter from its mask."""
    if iris.empty:
        raise ValueError("cannot fit an empty iris mask")
    box = bbox(largest_component(iris))
    return IrisFit(center=box.center, diameter_px=float(box.width))


def canthi(sclera: RasterMask, side: EyeSide) -> tuple[Point, Point]:
    """Locate the (medial, lateral) canthus points of an eye.

    The canthi are the extreme occupied columns of the sclera; which extreme
    is medial depends on the anatomical side.  The row of each canthus is the
    median row of the pixels in its extreme column, which tolerates single
    pixels of annotation noise.
    """
    if sclera.empty:
        raise ValueError("cannot locate canthi on an empty sclera mask")
    cols = np.flatnonzero(sclera.pixels.any(axis=0))
    lo, hi = int(cols[0]), int(cols[-1])
    if side.medial_sign > 0:
        medial_x, lateral_x = hi, lo
    else:
        medial_x, lateral_x = lo, hi

    def column_point(x: int) -> Point:
        ys = np.flatnonzero(sclera.pixels[:, x])
        return Point(float(x), float(np.median(ys)))

    return column_point(medial_x), column_point(lateral_x)


def fit_margins(fissure: RasterMask) -> tuple[MarginPoly, MarginPoly]:
    """Fit the superior and inferior eyelid margins of a palpebral fissure.

    For every occupied column the smallest row samples the superior margin
    and the largest row the inferior margin; each sample set is fit with a
    degree-4 least-squares polynomial over the occupied column range.  The
    fit is performed on a rescaled domain and converted back to plain power
    coefficients, which keeps the normal equations well conditioned at image
    scale.
    """
    if fissure.empty:
        raise ValueError("cannot fit margins of an empty fissure mask")
    occupied = fissure.pixels.any(axis=0)
    cols = np.flatnonzero(occupied)
    if len(cols) < _MIN_MARGIN_COLUMNS:
        raise ValueError(
            f"need at least {_MIN_MARGIN_COLUMNS} occupied columns, got {len(cols)}"
        )
    rows = np.arange(fissure.height)[:, None]
    filled = np.where(fissure.pixels[:, cols], rows, np.nan)
    sup = np.nanmin(filled, axis=0)
    inf = np.nanmax(filled, axis=0)
    domain = (float(cols[0]), float(cols[-1]))

    def fit(samples: np.ndarray, which: str) -> MarginPoly:
        poly = np.polynomial.Polynomial.fit(cols, samples, MARGIN_DEGREE)
        coefs = poly.convert().coef
        if len(coefs) < MARGIN_DEGREE + 1:
            coefs = np.pad(coefs, (0, MARGIN_DEGREE + 1 - len(coefs)))
        return MarginPoly(coefficients=coefs, domain=domain, which=which)

    return fit(sup, "superior"), fit(inf, "inferior")


def mirror_mask(mask: RasterMask) -> RasterMask:
    """Flip a mask about the vertical image axis."""
    return RasterMask(mask.pixels[:, ::-1], mask.class_label)


def mirror_point(p: Point, width: int) -> Point:
    return Point(width - 1 - p.x, p.y)
