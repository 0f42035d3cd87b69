"""Shared domain types, units, and the measurement-name registry.

Coordinate conventions used throughout the package:

* Raster coordinates: ``x`` is the column index and increases rightward,
  ``y`` is the row index and increases downward.  "Superior" (toward the
  top of the head) therefore means smaller ``y``.
* Frontal photographs: the subject's RIGHT eye appears on the LEFT half
  of the image.  "Medial" means toward the image midline, "lateral" away
  from it.
* Pixel distances convert to millimetres through the iris-diameter scale:
  the visible iris is taken to be 11.71 mm across.

All types here are immutable value objects; they can be shared freely
between threads.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, TextIO

import numpy as np

IRIS_DIAMETER_MM = 11.71

MASK_CLASSES = ("sclera", "iris", "brow")

# Per-eye features, in registry order.  The brow heights are measured at the
# columns of the medial canthus, iris center, and lateral canthus.
PER_SIDE_FEATURES = (
    "mrd1",
    "mrd2",
    "iss",
    "sss",
    "vpf",
    "hpf",
    "medial_canthal_height",
    "lateral_canthal_height",
    "canthal_tilt_deg",
    "scleral_area_ratio",
    "brow_sup_medial",
    "brow_sup_central",
    "brow_sup_lateral",
    "brow_inf_medial",
    "brow_inf_central",
    "brow_inf_lateral",
)

# Whole-face features measured across both eyes.
GLOBAL_FEATURES = ("icd", "ipd", "ocd", "vertical_dystopia")

# Features that are not lengths and therefore never convert to mm.
DIMENSIONLESS_FEATURES = frozenset({"canthal_tilt_deg", "scleral_area_ratio"})


class EyeSide(Enum):
    """Anatomical side of the subject."""

    LEFT = "left"
    RIGHT = "right"

    @property
    def medial_sign(self) -> int:
        """Direction of increasing x toward the image midline.

        The subject's right eye sits on the image-left half, so its medial
        canthus is its maximum-x extreme; mirrored for the left eye.
        """
        return 1 if self is EyeSide.RIGHT else -1

    @property
    def prefix(self) -> str:
        return self.value


@dataclass(frozen=True)
class Point:
    """A 2D image point (x = column, y = row); sub-pixel values allowed."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")


@dataclass(frozen=True, eq=False)
class RasterMask:
    """Binary occupancy grid for one anatomical class of one eye."""

    pixels: np.ndarray
    class_label: str = ""

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=bool)
        if px.ndim != 2 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError(f"mask must be a non-empty 2D grid, got shape {px.shape}")
        px = px.copy()
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def area(self) -> int:
        return int(self.pixels.sum())

    @property
    def empty(self) -> bool:
        return not self.pixels.any()

    def same_shape(self, other: "RasterMask") -> bool:
        return self.pixels.shape == other.pixels.shape

    @classmethod
    def blank(cls, width: int, height: int, class_label: str = "") -> "RasterMask":
        return cls(np.zeros((height, width), dtype=bool), class_label)


@dataclass(frozen=True)
class EyeRecord:
    """All masks of one eye, sharing the face coordinate frame."""

    side: EyeSide
    sclera: RasterMask
    iris: RasterMask
    brow: RasterMask
    record_id: str = ""

    def __post_init__(self) -> None:
        if not (self.sclera.same_shape(self.iris) and self.sclera.same_shape(self.brow)):
            raise ValueError(f"eye {self.record_id!r}: mask dimensions differ")

    @property
    def shape(self) -> tuple[int, int]:
        return self.sclera.pixels.shape


@dataclass(frozen=True)
class FaceRecord:
    """Both eyes plus the facial-axis landmarks of one photograph."""

    left: EyeRecord
    right: EyeRecord
    nasion: Point
    hairline_mid: Point
    image_size: tuple[int, int]
    face_id: str = ""

    def __post_init__(self) -> None:
        if self.left.side is not EyeSide.LEFT or self.right.side is not EyeSide.RIGHT:
            raise ValueError("eye records attached to the wrong side")
        w, h = self.image_size
        if self.left.shape != (h, w) or self.right.shape != (h, w):
            raise ValueError("eye masks do not match the face frame")
        if not self.nasion.y > self.hairline_mid.y:
            raise ValueError("nasion must lie below the hairline midpoint in image coordinates")

    @property
    def eyes(self) -> tuple[EyeRecord, EyeRecord]:
        return (self.right, self.left)


@dataclass(frozen=True)
class Scale:
    """Pixel-to-millimetre conversion derived from the iris diameter."""

    mm_per_px: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mm_per_px) and self.mm_per_px > 0):
            raise ValueError(f"invalid scale {self.mm_per_px}")

    @classmethod
    def from_iris_diameter(cls, diameter_px: float) -> "Scale":
        if not (math.isfinite(diameter_px) and diameter_px > 0):
            raise ValueError(f"invalid iris diameter {diameter_px}")
        return cls(IRIS_DIAMETER_MM / diameter_px)


def feature_registry() -> list[str]:
    """Ordered names of the 36 measurement features.

    The order is a fixed public contract shared by the CSV schema and the
    classifier feature vectors: 16 right-eye features, 16 left-eye
    features, then the 4 whole-face features.
    """
    names = [f"right_{f}" for f in PER_SIDE_FEATURES]
    names += [f"left_{f}" for f in PER_SIDE_FEATURES]
    names += list(GLOBAL_FEATURES)
    return names


_REGISTRY = tuple(feature_registry())
_REGISTRY_INDEX = {name: i for i, name in enumerate(_REGISTRY)}


def swap_sides_name(name: str) -> str:
    """Map a feature name to its opposite-side counterpart (globals unchanged)."""
    if name.startswith("right_"):
        return "left_" + name[len("right_"):]
    if name.startswith("left_"):
        return "right_" + name[len("left_"):]
    return name


@dataclass(frozen=True)
class MeasurementSet:
    """The 36 named measurements of one face, in px or mm.

    Features that could not be measured carry ``valid=False`` and a zero
    value; they are never silently folded into downstream statistics.
    """

    units: str
    values: dict[str, float]
    valid: dict[str, bool]
    face_id: str = ""

    def __post_init__(self) -> None:
        if self.units not in ("px", "mm"):
            raise ValueError(f"unknown units {self.units!r}")
        if set(self.values) != set(_REGISTRY) or set(self.valid) != set(_REGISTRY):
            raise ValueError("measurement set must carry exactly the registry features")
        for name, v in self.values.items():
            if self.valid[name] and not math.isfinite(v):
                raise ValueError(f"feature {name} marked valid but non-finite")

    @classmethod
    def empty(cls, units: str = "px", face_id: str = "") -> "MeasurementSet":
        return cls(
            units=units,
            values={n: 0.0 for n in _REGISTRY},
            valid={n: False for n in _REGISTRY},
            face_id=face_id,
        )

    def get(self, name: str) -> Optional[float]:
        """Value of a feature, or None when it is flagged invalid."""
        return self.values[name] if self.valid[name] else None

    def as_optional_dict(self) -> dict[str, Optional[float]]:
        return {n: (self.values[n] if self.valid[n] else None) for n in _REGISTRY}

    def as_vector(self) -> np.ndarray:
        """Registry-ordered vector with NaN in invalid slots."""
        return np.array(
            [self.values[n] if self.valid[n] else np.nan for n in _REGISTRY], dtype=float
        )

    def n_valid(self) -> int:
        return sum(self.valid.values())

    def valid_bitmask(self) -> int:
        mask = 0
        for i, name in enumerate(_REGISTRY):
            if self.valid[name]:
                mask |= 1 << i
        return mask


def to_mm(
    measurements: MeasurementSet,
    scale_left: Optional[Scale],
    scale_right: Optional[Scale],
) -> MeasurementSet:
    """Convert a pixel measurement set to millimetres.

    Each per-side length is scaled by its own eye's factor; whole-face
    lengths use the mean of the two factors.  Angles and area ratios are
    dimensionless and pass through unchanged.  Features whose scale is
    unavailable (a missing iris) are flagged invalid rather than converted.
    """
    if measurements.units != "px":
        raise ValueError("to_mm expects a pixel measurement set")
    scales = {"left": scale_left, "right": scale_right}
    mean_scale: Optional[float] = None
    if scale_left is not None and scale_right is not None:
        mean_scale = (scale_left.mm_per_px + scale_right.mm_per_px) / 2.0

    values: dict[str, float] = {}
    valid: dict[str, bool] = {}
    for name in _REGISTRY:
        v = measurements.values[name]
        ok = measurements.valid[name]
        side = name.split("_", 1)[0] if name.split("_", 1)[0] in ("left", "right") else None
        base = name[len(side) + 1:] if side else name
        if base in DIMENSIONLESS_FEATURES:
            values[name], valid[name] = v, ok
        elif side is not None:
            s = scales[side]
            if s is None:
                values[name], valid[name] = 0.0, False
            else:
                values[name], valid[name] = v * s.mm_per_px, ok
        else:
            if mean_scale is None:
                values[name], valid[name] = 0.0, False
            else:
                values[name], valid[name] = v * mean_scale, ok
    # invalid slots always carry 0.0 so serialization is stable
    for name in _REGISTRY:
        if not valid[name]:
            values[name] = 0.0
    return MeasurementSet(
        units="mm", values=values, valid=valid, face_id=measurements.face_id
    )


# ---------------------------------------------------------------------------
# Measurement CSV schema
# ---------------------------------------------------------------------------

CSV_FLOAT_FORMAT = "{:.6f}"


def measurement_csv_header() -> list[str]:
    return ["id", "units"] + list(_REGISTRY) + ["valid_bitmask"]


def measurement_csv_row(ms: MeasurementSet) -> list[str]:
    row = [ms.face_id, ms.units]
    for name in _REGISTRY:
        v = ms.values[name] if ms.valid[name] else 0.0
        row.append(CSV_FLOAT_FORMAT.format(v))
    row.append(str(ms.valid_bitmask()))
    return row


def write_measurements_csv(fp: TextIO, sets: Iterable[MeasurementSet]) -> None:
    writer = csv.writer(fp, lineterminator="\n")
    writer.writerow(measurement_csv_header())
    for ms in sets:
        writer.writerow(measurement_csv_row(ms))


def read_measurements_csv(fp: TextIO) -> list[MeasurementSet]:
    reader = csv.reader(fp)
    header = next(reader, None)
    if header != measurement_csv_header():
        raise ValueError("unrecognized measurement CSV header")
    out = []
    for row in reader:
        if not row:
            continue
        if len(row) != len(_REGISTRY) + 3:
            raise ValueError(f"malformed measurement CSV row for id {row[0]!r}")
        face_id, units = row[0], row[1]
        bitmask = int(row[-1])
        values: dict[str, float] = {}
        valid: dict[str, bool] = {}
        for i, name in enumerate(_REGISTRY):
            ok = bool(bitmask & (1 << i))
            values[name] = float(row[2 + i]) if ok else 0.0
            valid[name] = ok
        out.append(MeasurementSet(units=units, values=values, valid=valid, face_id=face_id))
    return out


def measurements_to_string(sets: Iterable[MeasurementSet]) -> str:
    buf = io.StringIO()
    write_measurements_csv(buf, sets)
    return buf.getvalue()


def measurements_from_string(text: str) -> list[MeasurementSet]:
    return read_measurements_csv(io.StringIO(text))
