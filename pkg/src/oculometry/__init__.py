"""Periorbital morphometry from eye-region segmentation masks.

The package measures the standard suite of periorbital distances (MRD,
scleral show, palpebral fissures, canthal geometry, brow heights, and
inter-eye distances) from binary sclera/iris/brow masks, evaluates
predictions against annotations (MAE, Bland-Altman agreement), and
classifies disease status from the measurement vectors with tree
ensembles.  A parametric synthetic-face generator with closed-form ground
truth backs the test suite.
"""

from .core import (
    EyeRecord,
    EyeSide,
    FaceRecord,
    IRIS_DIAMETER_MM,
    MeasurementSet,
    Point,
    RasterMask,
    Scale,
    feature_registry,
    to_mm,
)
from .maskgeom import BBox, IrisFit, MarginPoly, bbox, canthi, dice, fit_iris, fit_margins, largest_component
from .prep import FacialAxis, RigidTransform, axis_from_landmarks, normalize_orientation, split_midline
from .anthro import measure_face
from .stats import AgreementReport, PairedSeries, bilateral_average, bland_altman, filter_outliers_1sd, mae, subset_compare
from .classify import (
    LabeledDataset,
    augment_swap_lr,
    auroc,
    classify_pipeline,
    grid_search,
    metrics,
    split_train_test,
    train_gbt,
    train_random_forest,
)
from .synth import EyeParams, FaceParams, gen_population, render_face

__version__ = "0.1.0"

__all__ = [
    "AgreementReport",
    "BBox",
    "EyeParams",
    "EyeRecord",
    "EyeSide",
    "FaceParams",
    "FaceRecord",
    "FacialAxis",
    "IRIS_DIAMETER_MM",
    "IrisFit",
    "LabeledDataset",
    "MarginPoly",
    "MeasurementSet",
    "PairedSeries",
    "Point",
    "RasterMask",
    "RigidTransform",
    "Scale",
    "augment_swap_lr",
    "auroc",
    "axis_from_landmarks",
    "bbox",
    "bilateral_average",
    "bland_altman",
    "canthi",
    "classify_pipeline",
    "dice",
    "feature_registry",
    "filter_outliers_1sd",
    "fit_iris",
    "fit_margins",
    "gen_population",
    "grid_search",
    "largest_component",
    "mae",
    "measure_face",
    "metrics",
    "normalize_orientation",
    "render_face",
    "split_midline",
    "split_train_test",
    "subset_compare",
    "to_mm",
    "train_gbt",
    "train_random_forest",
    "__version__",
]
