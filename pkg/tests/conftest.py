import numpy as np
import pytest

from oculometry.core import Point, RasterMask
from oculometry.synth import EyeParams, FaceParams, render_face


def mask_from_coords(width, height, coords, label=""):
    """Build a mask from (x, y) pixel coordinates."""
    px = np.zeros((height, width), dtype=bool)
    for x, y in coords:
        px[y, x] = True
    return RasterMask(px, label)


def rect_mask(width, height, x0, y0, x1, y1, label=""):
    """Filled axis-aligned rectangle, inclusive bounds."""
    px = np.zeros((height, width), dtype=bool)
    px[y0 : y1 + 1, x0 : x1 + 1] = True
    return RasterMask(px, label)


def disc_mask(width, height, cx, cy, r, label=""):
    """Lattice-rasterized filled disc."""
    ys, xs = np.mgrid[0:height, 0:width]
    return RasterMask((xs - cx) ** 2 + (ys - cy) ** 2 <= r * r, label)


def canonical_face_params(face_id="canonical", **overrides):
    """Two mirror-image ellipse eyes with centered irises (the worked example)."""
    base = dict(fissure_a=50.0, fissure_b=20.0, iris_radius=15.0)
    base.update(overrides)
    right = EyeParams(center=Point(120.0, 150.0), **base)
    left = EyeParams(center=Point(360.0, 150.0), **base)
    return FaceParams(
        left=left,
        right=right,
        nasion=Point(240.0, 150.0),
        hairline_mid=Point(240.0, 20.0),
        face_id=face_id,
    )


@pytest.fixture(scope="session")
def canonical_face():
    face, truth = render_face(canonical_face_params())
    return face, truth
