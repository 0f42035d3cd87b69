"""On-disk formats: mask images, landmark sidecars, manifests, label tables.

Masks are single-channel 8-bit images with 0 background and 255 foreground,
one file per anatomical class per side.  Landmarks travel in a small
versioned key/value text sidecar.  A manifest (JSON) ties a dataset
together; all paths inside it are resolved relative to its own directory so
trees stay portable.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .core import (
    EyeRecord,
    EyeSide,
    FaceRecord,
    MASK_CLASSES,
    MeasurementSet,
    Point,
    RasterMask,
    read_measurements_csv,
    write_measurements_csv,
)

LANDMARK_SCHEMA = "oculometry.landmarks/v1"
MANIFEST_SCHEMA = "oculometry.manifest/v1"


def write_mask_png(path: Path, mask: RasterMask) -> None:
    img = Image.fromarray(mask.pixels.astype(np.uint8) * 255, mode="L")
    img.save(path, format="PNG")


def read_mask_png(path: Path, class_label: str = "") -> RasterMask:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("L"))
    return RasterMask(arr > 127, class_label)


def write_landmarks(path: Path, nasion: Point, hairline_mid: Point) -> None:
    text = (
        f"schema: {LANDMARK_SCHEMA}\n"
        f"nasion: {nasion.x:.6f} {nasion.y:.6f}\n"
        f"hairline_mid: {hairline_mid.x:.6f} {hairline_mid.y:.6f}\n"
    )
    path.write_text(text)


def read_landmarks(path: Path) -> tuple[Point, Point]:
    fields: dict[str, str] = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or ":" not in line:
            continue
        key, value = line.split(":", 1)
        fields[key.strip()] = value.strip()
    if fields.get("schema") != LANDMARK_SCHEMA:
        raise ValueError(f"{path}: unsupported landmark schema {fields.get('schema')!r}")
    try:
        nx, ny = fields["nasion"].split()
        hx, hy = fields["hairline_mid"].split()
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: malformed landmark sidecar") from exc
    return Point(float(nx), float(ny)), Point(float(hx), float(hy))


@dataclass
class ManifestEntry:
    """One face: its id, mask paths per side and class, and sidecar paths."""

    face_id: str
    masks: dict[str, dict[str, Path]]  # side -> class -> path
    landmarks: Path
    dataset: str = ""
    truth_csv: Optional[Path] = None

    def mask_path(self, side: EyeSide, class_label: str) -> Path:
        return self.masks[side.value][class_label]


@dataclass
class Manifest:
    entries: list[ManifestEntry] = field(default_factory=list)

    def ids(self) -> list[str]:
        return [e.face_id for e in self.entries]


def write_manifest(path: Path, manifest: Manifest) -> None:
    base = path.parent

    def rel(p: Path) -> str:
        try:
            return p.relative_to(base).as_posix()
        except ValueError:
            return str(p)

    doc = {
        "schema": MANIFEST_SCHEMA,
        "entries": [
            {
                "id": e.face_id,
                "dataset": e.dataset,
                "masks": {
                    side: {cls: rel(p) for cls, p in classes.items()}
                    for side, classes in e.masks.items()
                },
                "landmarks": rel(e.landmarks),
                **({"truth_csv": rel(e.truth_csv)} if e.truth_csv else {}),
            }
            for e in manifest.entries
        ],
    }
    path.write_text(json.dumps(doc, indent=1) + "\n")


def read_manifest(path: Path) -> Manifest:
    doc = json.loads(path.read_text())
    if doc.get("schema") != MANIFEST_SCHEMA:
        raise ValueError(f"{path}: unsupported manifest schema {doc.get('schema')!r}")
    base = path.parent
    entries = []
    seen: set[str] = set()
    for raw in doc.get("entries", []):
        face_id = raw["id"]
        if face_id in seen:
            raise ValueError(f"{path}: duplicate face id {face_id!r}")
        seen.add(face_id)
        masks = {
            side: {cls: base / p for cls, p in classes.items()}
            for side, classes in raw["masks"].items()
        }
        for side in ("left", "right"):
            if side not in masks or set(masks[side]) != set(MASK_CLASSES):
                raise ValueError(f"{path}: face {face_id!r} lacks mask paths for {side}")
        entries.append(
            ManifestEntry(
                face_id=face_id,
                masks=masks,
                landmarks=base / raw["landmarks"],
                dataset=raw.get("dataset", ""),
                truth_csv=(base / raw["truth_csv"]) if raw.get("truth_csv") else None,
            )
        )
    return Manifest(entries=entries)


def load_face(entry: ManifestEntry, strict: bool = False) -> tuple[FaceRecord, list[str]]:
    """Load one face from disk.

    Missing or unreadable mask files degrade to empty masks (their features
    will be flagged invalid) unless ``strict``; problems are reported in the
    returned warning list.  An unreadable landmark sidecar is always an
    error because nothing downstream is defined without the facial axis.
    """
    nasion, hairline = read_landmarks(entry.landmarks)
    warnings: list[str] = []
    size: Optional[tuple[int, int]] = None
    masks: dict[tuple[str, str], RasterMask] = {}
    for side in ("right", "left"):
        for cls in MASK_CLASSES:
            path = entry.masks[side][cls]
            try:
                masks[(side, cls)] = read_mask_png(path, cls)
                if size is None:
                    m = masks[(side, cls)]
                    size = (m.width, m.height)
            except (OSError, ValueError) as exc:
                if strict:
                    raise
                warnings.append(f"{entry.face_id}: {side} {cls} mask unreadable ({exc})")
    if size is None:
        raise ValueError(f"{entry.face_id}: no readable masks")
    w, h = size
    for side in ("right", "left"):
        for cls in MASK_CLASSES:
            if (side, cls) not in masks:
                masks[(side, cls)] = RasterMask.blank(w, h, cls)
            elif masks[(side, cls)].pixels.shape != (h, w):
                raise ValueError(f"{entry.face_id}: mask dimensions disagree")

    def eye(side: EyeSide) -> EyeRecord:
        s = side.value
        return EyeRecord(
            side=side,
            sclera=masks[(s, "sclera")],
            iris=masks[(s, "iris")],
            brow=masks[(s, "brow")],
            record_id=f"{entry.face_id}/{s}",
        )

    face = FaceRecord(
        left=eye(EyeSide.LEFT),
        right=eye(EyeSide.RIGHT),
        nasion=nasion,
        hairline_mid=hairline,
        image_size=size,
        face_id=entry.face_id,
    )
    return face, warnings


def save_face_masks(
    out_dir: Path, face_id: str, face: FaceRecord
) -> dict[str, dict[str, Path]]:
    """Write the six masks of a face; returns the path table for a manifest entry."""
    out_dir.mkdir(parents=True, exist_ok=True)
    table: dict[str, dict[str, Path]] = {}
    for eye in (face.right, face.left):
        side = eye.side.value
        table[side] = {}
        for cls, mask in (("sclera", eye.sclera), ("iris", eye.iris), ("brow", eye.brow)):
            path = out_dir / f"{face_id}_{side}_{cls}.png"
            write_mask_png(path, mask)
            table[side][cls] = path
    return table


def write_labels_csv(path: Path, labels: dict[str, str]) -> None:
    with path.open("w", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["id", "label"])
        for fid, label in labels.items():
            writer.writerow([fid, label])


def read_labels_csv(path: Path) -> dict[str, str]:
    with path.open(newline="") as fp:
        reader = csv.reader(fp)
        header = next(reader, None)
        if header != ["id", "label"]:
            raise ValueError(f"{path}: expected 'id,label' header")
        out = {}
        for row in reader:
            if not row:
                continue
            out[row[0]] = row[1]
    return out


def read_id_list(path: Path) -> set[str]:
    """Plain-text id list, one per line; blank lines and #-comments ignored."""
    out = set()
    for line in path.read_text().splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.add(line)
    return out


def write_measurements_file(path: Path, sets: list[MeasurementSet]) -> None:
    with path.open("w", newline="") as fp:
        write_measurements_csv(fp, sets)


def read_measurements_file(path: Path) -> list[MeasurementSet]:
    with path.open(newline="") as fp:
        return read_measurements_csv(fp)
