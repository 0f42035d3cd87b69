"""The periorbital measurement engine.

Turns a :class:`~oculometry.core.FaceRecord` into the 36-feature
measurement vector.  All distances are computed in the image frame, which
is expected to be orientation-normalized (see :mod:`oculometry.prep`);
the facial axis from the landmarks resolves every "superior"/"vertical"
reference.

Definitions, with y growing downward and the superior direction along the
facial axis:

* MRD1 / MRD2: vertical distance from the iris center to the superior /
  inferior lid margin, read off the fitted margin polynomials at the iris
  center column.  A lid crossing the iris center would make the raw value
  negative; such values are clamped to zero and flagged invalid so they
  cannot masquerade as real measurements downstream.
* ISS / SSS: exposed sclera height between the iris boundary (center
  offset by half the horizontal iris diameter) and the same-side lid
  margin, zero when the lid overlaps the iris.
* VPF = MRD1 + MRD2; HPF = horizontal canthus-to-canthus distance.
* Canthal tilt: angle at the medial canthus between the horizontal
  (perpendicular to the facial axis) and the medial-to-lateral canthal
  line; positive when the lateral canthus sits superior.
* Canthal heights: perpendicular distance from each canthus to the line
  through the two iris centers, positive on the superior side.
* ICD / OCD / IPD: horizontal separation of the medial canthi, lateral
  canthi, and iris centers.
* Vertical dystopia: distance between the projections of the two medial
  canthi onto the facial axis.
* Brow heights: vertical distance from the medial canthus, iris center,
  and lateral canthus to the brow's superior and inferior edges in the
  reference point's own column.
* Scleral area ratio: sclera area over iris area.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    EyeRecord,
    EyeSide,
    FaceRecord,
    MeasurementSet,
    PER_SIDE_FEATURES,
    Point,
    RasterMask,
    Scale,
    feature_registry,
    to_mm,
)
from .maskgeom import (
    IrisFit,
    MarginPoly,
    canthi,
    fit_iris,
    fit_margins,
    largest_component,
    mask_intersection,
    mask_union,
)
from .prep import FacialAxis, axis_from_landmarks


@dataclass
class _EyeGeometry:
    """Cleaned masks and fitted primitives for one eye; None where unavailable."""

    side: EyeSide
    sclera: Optional[RasterMask]
    iris: Optional[RasterMask]
    brow: Optional[RasterMask]
    iris_fit: Optional[IrisFit]
    margin_sup: Optional[MarginPoly]
    margin_inf: Optional[MarginPoly]
    canthus_medial: Optional[Point]
    canthus_lateral: Optional[Point]


def _prepare_eye(eye: EyeRecord) -> _EyeGeometry:
    """Clean masks and fit the per-eye primitives.

    Stray components are removed through the palpebral fissure (the union of
    sclera and iris): the sclera of an open eye is frequently split into a
    medial and a lateral lobe by the iris, so cleaning it directly would drop
    half of it.  Membership in the largest fissure component keeps both
    lobes while still discarding disconnected speckle.
    """
    sclera = iris = brow = None
    iris_fit = margin_sup = margin_inf = None
    medial = lateral = None

    fissure_raw = mask_union(eye.sclera, eye.iris)
    if not fissure_raw.empty:
        fissure = largest_component(fissure_raw)
        sclera_c = mask_intersection(eye.sclera, fissure, "sclera")
        iris_c = mask_intersection(eye.iris, fissure, "iris")
        sclera = None if sclera_c.empty else sclera_c
        if not iris_c.empty:
            iris = largest_component(iris_c)
        try:
            margin_sup, margin_inf = fit_margins(fissure)
        except ValueError:
            pass
        if iris is not None:
            iris_fit = fit_iris(iris)
        if sclera is not None:
            medial, lateral = canthi(sclera, eye.side)
    if not eye.brow.empty:
        brow = largest_component(eye.brow)

    return _EyeGeometry(
        side=eye.side,
        sclera=sclera,
        iris=iris,
        brow=brow,
        iris_fit=iris_fit,
        margin_sup=margin_sup,
        margin_inf=margin_inf,
        canthus_medial=medial,
        canthus_lateral=lateral,
    )


def _margin_at_iris(geom: _EyeGeometry, which: str) -> float:
    margin = geom.margin_sup if which == "superior" else geom.margin_inf
    if geom.iris_fit is None or margin is None:
        raise ValueError(f"{which} margin or iris unavailable")
    return margin(geom.iris_fit.center.x)


def _mrd_raw(geom: _EyeGeometry, which: int) -> float:
    if geom.iris_fit is None:
        raise ValueError("iris unavailable")
    if which == 1:
        return geom.iris_fit.center.y - _margin_at_iris(geom, "superior")
    if which == 2:
        return _margin_at_iris(geom, "inferior") - geom.iris_fit.center.y
    raise ValueError(f"MRD index must be 1 or 2, got {which}")


def mrd(eye: EyeRecord, which: int) -> float:
    """Margin-to-reflex distance 1 (superior) or 2 (inferior), in pixels.

    Negative raw values (a lid past the iris center) are clamped to zero;
    measure_face additionally flags them invalid.
    """
    return max(0.0, _mrd_raw(_prepare_eye(eye), which))


def _scleral_show_value(geom: _EyeGeometry, which: str) -> float:
    if geom.iris_fit is None:
        raise ValueError("iris unavailable")
    half = geom.iris_fit.diameter_px / 2.0
    if which == "inferior":
        return max(0.0, _margin_at_iris(geom, "inferior") - (geom.iris_fit.center.y + half))
    if which == "superior":
        return max(0.0, (geom.iris_fit.center.y - half) - _margin_at_iris(geom, "superior"))
    raise ValueError(f"unknown scleral show kind {which!r}")


def scleral_show(eye: EyeRecord, which: str) -> float:
    """Inferior or superior scleral show in pixels; zero when the lid overlaps the iris."""
    return _scleral_show_value(_prepare_eye(eye), which)


def palpebral_fissure(eye: EyeRecord) -> tuple[float, float]:
    """(vertical, horizontal) palpebral fissure in pixels."""
    geom = _prepare_eye(eye)
    vpf = max(0.0, _mrd_raw(geom, 1)) + max(0.0, _mrd_raw(geom, 2))
    if geom.canthus_medial is None or geom.canthus_lateral is None:
        raise ValueError("canthi unavailable")
    hpf = abs(geom.canthus_medial.x - geom.canthus_lateral.x)
    return vpf, hpf


def _tilt_from_canthi(medial: Point, lateral: Point, axis: FacialAxis) -> float:
    vx, vy = lateral.x - medial.x, lateral.y - medial.y
    if math.hypot(vx, vy) < 1e-12:
        raise ValueError("coincident canthi")
    ux, uy = axis.direction
    superior = vx * ux + vy * uy  # component along the axis (toward the hairline)
    horizontal = math.hypot(vx - superior * ux, vy - superior * uy)
    return math.degrees(math.atan2(superior, horizontal))


def canthal_tilt(eye: EyeRecord, axis: FacialAxis) -> float:
    """Canthal tilt in degrees; positive when the lateral canthus is superior."""
    geom = _prepare_eye(eye)
    if geom.canthus_medial is None or geom.canthus_lateral is None:
        raise ValueError("canthi unavailable")
    return _tilt_from_canthi(geom.canthus_medial, geom.canthus_lateral, axis)


def intercanthal(face: FaceRecord) -> tuple[float, float, float]:
    """(icd, ocd, ipd): horizontal inner-canthal, outer-canthal, and interpupillary distances."""
    right = _prepare_eye(face.right)
    left = _prepare_eye(face.left)
    for geom in (right, left):
        if geom.canthus_medial is None or geom.canthus_lateral is None or geom.iris_fit is None:
            raise ValueError("both eyes must have canthi and an iris")
    icd = abs(left.canthus_medial.x - right.canthus_medial.x)
    ocd = abs(left.canthus_lateral.x - right.canthus_lateral.x)
    ipd = abs(left.iris_fit.center.x - right.iris_fit.center.x)
    return icd, ocd, ipd


def vertical_dystopia(face: FaceRecord, axis: FacialAxis) -> float:
    """Distance between the projections of the medial canthi onto the facial axis."""
    right = _prepare_eye(face.right)
    left = _prepare_eye(face.left)
    if right.canthus_medial is None or left.canthus_medial is None:
        raise ValueError("medial canthi unavailable")
    return _dystopia_from_points(right.canthus_medial, left.canthus_medial, axis)


def _dystopia_from_points(right_medial: Point, left_medial: Point, axis: FacialAxis) -> float:
    ux, uy = axis.direction
    dx = left_medial.x - right_medial.x
    dy = left_medial.y - right_medial.y
    return abs(dx * ux + dy * uy)


def _signed_height_above_line(p: Point, a: Point, b: Point) -> float:
    dx, dy = b.x - a.x, b.y - a.y
    norm = math.hypot(dx, dy)
    if norm < 1e-12:
        raise ValueError("coincident iris centers")
    nx, ny = dy / norm, -dx / norm
    if ny > 0:
        nx, ny = -nx, -ny
    return (p.x - a.x) * nx + (p.y - a.y) * ny


def canthal_heights(face: FaceRecord) -> dict[str, float]:
    """Signed heights of all four canthi above the inter-iris line.

    Keys are ``{side}_medial`` / ``{side}_lateral``; positive values are
    superior to the line.
    """
    right = _prepare_eye(face.right)
    left = _prepare_eye(face.left)
    if right.iris_fit is None or left.iris_fit is None:
        raise ValueError("both iris centers required")
    out: dict[str, float] = {}
    for geom in (right, left):
        if geom.canthus_medial is None or geom.canthus_lateral is None:
            raise ValueError("canthi unavailable")
        out[f"{geom.side.prefix}_medial"] = _signed_height_above_line(
            geom.canthus_medial, right.iris_fit.center, left.iris_fit.center
        )
        out[f"{geom.side.prefix}_lateral"] = _signed_height_above_line(
            geom.canthus_lateral, right.iris_fit.center, left.iris_fit.center
        )
    return out


def _brow_heights_at(geom: _EyeGeometry, ref: Point) -> tuple[float, float]:
    """(superior, inferior) brow heights at the reference point's column, NaN if uncovered."""
    if geom.brow is None:
        return math.nan, math.nan
    col = int(round(ref.x))
    if col < 0 or col >= geom.brow.width:
        return math.nan, math.nan
    rows = np.flatnonzero(geom.brow.pixels[:, col])
    if len(rows) == 0:
        return math.nan, math.nan
    return ref.y - float(rows.min()), ref.y - float(rows.max())


def brow_heights(eye: EyeRecord) -> dict[str, float]:
    """Six brow heights keyed sup/inf x medial/central/lateral; NaN where the brow is absent."""
    geom = _prepare_eye(eye)
    refs = {
        "medial": geom.canthus_medial,
        "central": geom.iris_fit.center if geom.iris_fit else None,
        "lateral": geom.canthus_lateral,
    }
    out: dict[str, float] = {}
    for name, ref in refs.items():
        if ref is None:
            sup = inf = math.nan
        else:
            sup, inf = _brow_heights_at(geom, ref)
        out[f"sup_{name}"] = sup
        out[f"inf_{name}"] = inf
    return out


def scleral_area_ratio(eye: EyeRecord) -> float:
    """Sclera area divided by iris area, from the cleaned masks."""
    geom = _prepare_eye(eye)
    if geom.iris is None or geom.iris.area == 0:
        raise ValueError("iris required for the area ratio")
    if geom.sclera is None:
        raise ValueError("sclera required for the area ratio")
    return geom.sclera.area / geom.iris.area


def _measure_eye(geom: _EyeGeometry, axis: Optional[FacialAxis]) -> dict[str, tuple[float, bool]]:
    """All per-eye features as (value, valid) pairs; never raises."""
    out: dict[str, tuple[float, bool]] = {f: (0.0, False) for f in PER_SIDE_FEATURES}

    mrd_vals: dict[int, float] = {}
    for which in (1, 2):
        try:
            raw = _mrd_raw(geom, which)
        except ValueError:
            continue
        if raw >= 0.0:
            mrd_vals[which] = raw
            out[f"mrd{which}"] = (raw, True)
        else:
            out[f"mrd{which}"] = (0.0, False)  # lid crosses the iris center

    if 1 in mrd_vals and 2 in mrd_vals:
        out["vpf"] = (mrd_vals[1] + mrd_vals[2], True)

    for key, which in (("iss", "inferior"), ("sss", "superior")):
        try:
            out[key] = (_scleral_show_value(geom, which), True)
        except ValueError:
            pass

    if geom.canthus_medial is not None and geom.canthus_lateral is not None:
        out["hpf"] = (abs(geom.canthus_medial.x - geom.canthus_lateral.x), True)
        if axis is not None:
            try:
                out["canthal_tilt_deg"] = (
                    _tilt_from_canthi(geom.canthus_medial, geom.canthus_lateral, axis),
                    True,
                )
            except ValueError:
                pass

    if geom.iris is not None and geom.sclera is not None and geom.iris.area > 0:
        out["scleral_area_ratio"] = (geom.sclera.area / geom.iris.area, True)

    refs = {
        "medial": geom.canthus_medial,
        "central": geom.iris_fit.center if geom.iris_fit else None,
        "lateral": geom.canthus_lateral,
    }
    for name, ref in refs.items():
        sup = inf = math.nan
        if ref is not None:
            sup, inf = _brow_heights_at(geom, ref)
        out[f"brow_sup_{name}"] = (sup, True) if not math.isnan(sup) else (0.0, False)
        out[f"brow_inf_{name}"] = (inf, True) if not math.isnan(inf) else (0.0, False)
    return out


def measure_face(face: FaceRecord) -> tuple[MeasurementSet, MeasurementSet]:
    """Measure all 36 features of a face, in pixels and in millimetres.

    Partial anatomy never raises: features that cannot be measured are
    flagged invalid and carry a zero value.  The millimetre set uses each
    eye's own iris scale for its features and the mean scale for the
    whole-face features.
    """
    try:
        axis: Optional[FacialAxis] = axis_from_landmarks(face.nasion, face.hairline_mid)
    except ValueError:
        axis = None

    geoms = {EyeSide.RIGHT: _prepare_eye(face.right), EyeSide.LEFT: _prepare_eye(face.left)}
    values = {n: 0.0 for n in feature_registry()}
    valid = {n: False for n in feature_registry()}

    for side, geom in geoms.items():
        for feature, (v, ok) in _measure_eye(geom, axis).items():
            values[f"{side.prefix}_{feature}"] = v if ok else 0.0
            valid[f"{side.prefix}_{feature}"] = ok

    right, left = geoms[EyeSide.RIGHT], geoms[EyeSide.LEFT]
    if right.canthus_medial is not None and left.canthus_medial is not None:
        values["icd"] = abs(left.canthus_medial.x - right.canthus_medial.x)
        valid["icd"] = True
        if axis is not None:
            values["vertical_dystopia"] = _dystopia_from_points(
                right.canthus_medial, left.canthus_medial, axis
            )
            valid["vertical_dystopia"] = True
    if right.canthus_lateral is not None and left.canthus_lateral is not None:
        values["ocd"] = abs(left.canthus_lateral.x - right.canthus_lateral.x)
        valid["ocd"] = True
    if right.iris_fit is not None and left.iris_fit is not None:
        values["ipd"] = abs(left.iris_fit.center.x - right.iris_fit.center.x)
        valid["ipd"] = True
        for geom in (right, left):
            for kind, canthus in (
                ("medial", geom.canthus_medial),
                ("lateral", geom.canthus_lateral),
            ):
                name = f"{geom.side.prefix}_{kind}_canthal_height"
                if canthus is None:
                    continue
                try:
                    values[name] = _signed_height_above_line(
                        canthus, right.iris_fit.center, left.iris_fit.center
                    )
                    valid[name] = True
                except ValueError:
                    pass

    px = MeasurementSet(units="px", values=values, valid=valid, face_id=face.face_id)
    scale_r = (
        Scale.from_iris_diameter(right.iris_fit.diameter_px) if right.iris_fit else None
    )
    scale_l = (
        Scale.from_iris_diameter(left.iris_fit.diameter_px) if left.iris_fit else None
    )
    mm = to_mm(px, scale_l, scale_r)
    return px, mm
