"""Orientation normalization and midline splitting.

Measurement geometry assumes an upright face: the line from the soft-tissue
nasion to the hairline midpoint must run vertically.  This module estimates
that facial axis from the landmark sidecar, rotates masks and landmarks into
the canonical frame, and splits a face into per-eye halves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EyeRecord, EyeSide, FaceRecord, Point, RasterMask
from .maskgeom import fit_iris, largest_component


@dataclass(frozen=True)
class FacialAxis:
    """Facial vertical axis: origin at the nasion, unit direction toward the hairline."""

    origin: Point
    direction: tuple[float, float]

    def __post_init__(self) -> None:
        ux, uy = self.direction
        norm = math.hypot(ux, uy)
        if not math.isclose(norm, 1.0, rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"axis direction must be a unit vector, |u|={norm}")


@dataclass(frozen=True)
class RigidTransform:
    """Rotation about a fixed center followed by a translation (no scale or shear)."""

    rotation_deg: float
    center: Point
    translation: tuple[float, float] = (0.0, 0.0)

    def apply(self, p: Point) -> Point:
        th = math.radians(self.rotation_deg)
        c, s = math.cos(th), math.sin(th)
        dx, dy = p.x - self.center.x, p.y - self.center.y
        return Point(
            self.center.x + c * dx - s * dy + self.translation[0],
            self.center.y + s * dx + c * dy + self.translation[1],
        )

    def apply_inverse(self, p: Point) -> Point:
        th = math.radians(self.rotation_deg)
        c, s = math.cos(th), math.sin(th)
        dx = p.x - self.translation[0] - self.center.x
        dy = p.y - self.translation[1] - self.center.y
        return Point(
            self.center.x + c * dx + s * dy,
            self.center.y - s * dx + c * dy,
        )

    @property
    def is_identity(self) -> bool:
        return (
            abs(self.rotation_deg) < 1e-12
            and self.translation[0] == 0.0
            and self.translation[1] == 0.0
        )


def axis_from_landmarks(nasion: Point, hairline_mid: Point) -> FacialAxis:
    """Unit facial axis from the nasion toward the hairline midpoint."""
    dx = hairline_mid.x - nasion.x
    dy = hairline_mid.y - nasion.y
    norm = math.hypot(dx, dy)
    if norm < 1e-12:
        raise ValueError("nasion and hairline midpoint coincide; axis undefined")
    return FacialAxis(origin=nasion, direction=(dx / norm, dy / norm))


def rotate_mask_nn(mask: RasterMask, rotation_deg: float, center: Point) -> RasterMask:
    """Rotate a binary mask about a center with nearest-neighbor resampling.

    Nearest-neighbor keeps the mask strictly binary; smoother interpolation
    would invent fractional labels.  Pixels mapping outside the source frame
    become background.
    """
    if abs(rotation_deg) < 1e-12:
        return mask
    h, w = mask.pixels.shape
    ys, xs = np.mgrid[0:h, 0:w]
    th = math.radians(rotation_deg)
    c, s = math.cos(th), math.sin(th)
    # inverse mapping: where did each output pixel come from
    dx = xs - center.x
    dy = ys - center.y
    src_x = np.rint(center.x + c * dx + s * dy).astype(int)
    src_y = np.rint(center.y - s * dx + c * dy).astype(int)
    inside = (src_x >= 0) & (src_x < w) & (src_y >= 0) & (src_y < h)
    out = np.zeros((h, w), dtype=bool)
    out[inside] = mask.pixels[src_y[inside], src_x[inside]]
    return RasterMask(out, mask.class_label)


def _rotation_to_vertical(face: FaceRecord) -> float:
    axis = axis_from_landmarks(face.nasion, face.hairline_mid)
    ux, uy = axis.direction
    # angle that rotates (ux, uy) onto the upward image vertical (0, -1)
    return math.degrees(math.atan2(-ux, -uy))


def normalize_orientation(face: FaceRecord) -> tuple[FaceRecord, RigidTransform]:
    """Rotate a face about its nasion so the facial axis is image-vertical.

    Returns the normalized record and the transform mapping original
    coordinates to normalized ones.  An already-vertical face is returned
    unchanged with an identity transform.
    """
    angle = _rotation_to_vertical(face)
    transform = RigidTransform(rotation_deg=angle, center=face.nasion)
    if abs(angle) < 1e-9:
        return face, RigidTransform(rotation_deg=0.0, center=face.nasion)

    def rotate_eye(eye: EyeRecord) -> EyeRecord:
        return EyeRecord(
            side=eye.side,
            sclera=rotate_mask_nn(eye.sclera, angle, face.nasion),
            iris=rotate_mask_nn(eye.iris, angle, face.nasion),
            brow=rotate_mask_nn(eye.brow, angle, face.nasion),
            record_id=eye.record_id,
        )

    normalized = FaceRecord(
        left=rotate_eye(face.left),
        right=rotate_eye(face.right),
        nasion=transform.apply(face.nasion),
        hairline_mid=transform.apply(face.hairline_mid),
        image_size=face.image_size,
        face_id=face.face_id,
    )
    return normalized, transform


@dataclass(frozen=True)
class HalfFace:
    """One half of a midline-split face, with the crop offset back to the face frame."""

    side: EyeSide
    sclera: RasterMask
    iris: RasterMask
    brow: RasterMask
    x_offset: int
    midline_x: float


def split_midline(face: FaceRecord) -> tuple[HalfFace, HalfFace]:
    """Split a normalized face at the midline between the two irises.

    The midline is the mean of the iris-center columns; if either iris is
    missing the image center is used instead.  Returns (left, right) halves,
    each carrying the column offset that maps half-frame x back to face
    frame.
    """
    width, _ = face.image_size
    centers = []
    for eye in (face.right, face.left):
        if not eye.iris.empty:
            centers.append(fit_iris(largest_component(eye.iris)).center.x)
    if len(centers) == 2:
        midline = (centers[0] + centers[1]) / 2.0
    else:
        midline = width / 2.0
    split_col = int(round(midline))
    split_col = min(max(split_col, 1), width - 1)

    def crop(eye: EyeRecord, lo: int, hi: int) -> tuple[RasterMask, RasterMask, RasterMask]:
        return (
            RasterMask(eye.sclera.pixels[:, lo:hi], eye.sclera.class_label),
            RasterMask(eye.iris.pixels[:, lo:hi], eye.iris.class_label),
            RasterMask(eye.brow.pixels[:, lo:hi], eye.brow.class_label),
        )

    r_sclera, r_iris, r_brow = crop(face.right, 0, split_col)
    l_sclera, l_iris, l_brow = crop(face.left, split_col, width)
    right = HalfFace(EyeSide.RIGHT, r_sclera, r_iris, r_brow, 0, midline)
    left = HalfFace(EyeSide.LEFT, l_sclera, l_iris, l_brow, split_col, midline)
    return left, right
