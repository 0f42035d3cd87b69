"""Evaluation statistics for predicted-vs-annotated measurements.

Mean absolute error, Bland-Altman limits of agreement, bilateral averaging,
one-pass outlier filtering, and failure-aware subset comparison.  All
statistics use the sample standard deviation (n-1 denominator), and the
difference direction is predicted minus truth throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .core import GLOBAL_FEATURES, MeasurementSet, PER_SIDE_FEATURES

LOA_FACTOR = 1.96


@dataclass(frozen=True)
class PairedSeries:
    """Aligned predicted/annotated values of one feature.

    Only entries valid in both sources belong in a series; use
    :func:`build_series` to pair measurement tables.
    """

    ids: tuple[str, ...]
    predicted: np.ndarray
    truth: np.ndarray
    feature: str = ""
    units: str = ""

    def __post_init__(self) -> None:
        pred = np.asarray(self.predicted, dtype=float)
        tru = np.asarray(self.truth, dtype=float)
        if pred.ndim != 1 or pred.shape != tru.shape or len(self.ids) != len(pred):
            raise ValueError("ids, predicted, and truth must be equal-length 1D series")
        if len(pred) < 1:
            raise ValueError("empty series")
        if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(tru))):
            raise ValueError("series values must be finite")
        pred = pred.copy()
        tru = tru.copy()
        pred.setflags(write=False)
        tru.setflags(write=False)
        object.__setattr__(self, "predicted", pred)
        object.__setattr__(self, "truth", tru)
        object.__setattr__(self, "ids", tuple(self.ids))

    def __len__(self) -> int:
        return len(self.ids)

    def restrict(self, keep_ids: Iterable[str]) -> "PairedSeries":
        keep = set(keep_ids)
        idx = [i for i, fid in enumerate(self.ids) if fid in keep]
        if not idx:
            raise ValueError("restriction leaves an empty series")
        return PairedSeries(
            ids=tuple(self.ids[i] for i in idx),
            predicted=self.predicted[idx],
            truth=self.truth[idx],
            feature=self.feature,
            units=self.units,
        )


@dataclass(frozen=True)
class AgreementReport:
    """Bland-Altman agreement summary for one feature."""

    feature: str
    units: str
    n: int
    mean_diff: float
    sd_diff: float
    loa_low: float
    loa_high: float
    pct_outside: float
    means: np.ndarray  # per-sample (pred + truth) / 2, for plotting
    diffs: np.ndarray  # per-sample pred - truth


FeatureTable = Mapping[str, Mapping[str, Optional[float]]]  # id -> feature -> value|None


def build_series(
    predicted: FeatureTable, truth: FeatureTable, feature: str, units: str = ""
) -> PairedSeries:
    """Pair two measurement tables on one feature.

    Ids must be present in both tables with a valid (non-None) value in both;
    everything else is dropped.
    """
    ids = []
    pred_vals = []
    truth_vals = []
    for fid in predicted:
        if fid not in truth:
            continue
        p = predicted[fid].get(feature)
        t = truth[fid].get(feature)
        if p is None or t is None:
            continue
        ids.append(fid)
        pred_vals.append(p)
        truth_vals.append(t)
    if not ids:
        raise ValueError(f"no overlapping valid entries for feature {feature!r}")
    return PairedSeries(
        ids=tuple(ids),
        predicted=np.array(pred_vals),
        truth=np.array(truth_vals),
        feature=feature,
        units=units,
    )


def mae(series: PairedSeries) -> tuple[float, float]:
    """Mean absolute error and the sample SD of the absolute errors.

    A single pair yields (|error|, 0.0); the SD is undefined at n=1 and
    reported as zero by convention.
    """
    errors = np.abs(series.predicted - series.truth)
    mean = float(errors.mean())
    sd = float(errors.std(ddof=1)) if len(errors) > 1 else 0.0
    return mean, sd


def bland_altman(series: PairedSeries) -> AgreementReport:
    """Bland-Altman agreement of a series.

    Limits of agreement are mean difference +/- 1.96 sample SDs;
    ``pct_outside`` counts strict exceedance of either limit, so boundary
    points count as inside.  Needs at least two pairs.
    """
    if len(series) < 2:
        raise ValueError("Bland-Altman needs at least 2 pairs")
    diffs = series.predicted - series.truth
    means = (series.predicted + series.truth) / 2.0
    mean_diff = float(diffs.mean())
    sd_diff = float(diffs.std(ddof=1))
    loa_low = mean_diff - LOA_FACTOR * sd_diff
    loa_high = mean_diff + LOA_FACTOR * sd_diff
    outside = int(np.sum((diffs < loa_low) | (diffs > loa_high)))
    return AgreementReport(
        feature=series.feature,
        units=series.units,
        n=len(series),
        mean_diff=mean_diff,
        sd_diff=sd_diff,
        loa_low=loa_low,
        loa_high=loa_high,
        pct_outside=100.0 * outside / len(series),
        means=means,
        diffs=diffs,
    )


BILATERAL_FEATURES = tuple(PER_SIDE_FEATURES)


def bilateral_average(ms: MeasurementSet) -> dict[str, Optional[float]]:
    """Average each left/right feature pair; keep whole-face features as-is.

    A pair with one valid side keeps that side's value; a pair with none is
    None.  Returns the reduced 20-feature mapping in registry order.
    """
    out: dict[str, Optional[float]] = {}
    for f in BILATERAL_FEATURES:
        sides = [ms.get(f"right_{f}"), ms.get(f"left_{f}")]
        present = [v for v in sides if v is not None]
        if not present:
            out[f] = None
        else:
            out[f] = float(np.mean(present))
    for f in GLOBAL_FEATURES:
        out[f] = ms.get(f)
    return out


def filter_outliers_1sd(errors: Sequence[float]) -> tuple[np.ndarray, int]:
    """Drop errors more than one SD above the mean, in a single pass.

    The threshold is computed once from the full input, not re-iterated.
    Returns the retained errors and the removal count.
    """
    arr = np.asarray(errors, dtype=float)
    if arr.ndim != 1 or len(arr) < 2:
        raise ValueError("need at least 2 error values")
    threshold = arr.mean() + arr.std(ddof=1)
    keep = arr <= threshold
    return arr[keep], int(np.sum(~keep))


@dataclass(frozen=True)
class SubsetComparison:
    """MAE of two pipelines on the ids a baseline managed to process."""

    feature: str
    ours_mae: float
    ours_sd: float
    baseline_mae: float
    baseline_sd: float
    coverage: float  # retained / total ids, the baseline's success rate
    n_retained: int
    n_total: int


def subset_compare(
    ours: PairedSeries, baseline: PairedSeries, baseline_failures: set[str]
) -> SubsetComparison:
    """Compare two pipelines on the subset a baseline successfully analyzed.

    Ids listed in ``baseline_failures`` are removed from BOTH series before
    computing either MAE, so the comparison is like-for-like.
    """
    total = len(ours)
    keep = [fid for fid in ours.ids if fid not in baseline_failures]
    if not keep:
        raise ValueError("no ids survive the failure exclusion")
    ours_r = ours.restrict(keep)
    base_r = baseline.restrict(keep)
    ours_mae, ours_sd = mae(ours_r)
    base_mae, base_sd = mae(base_r)
    return SubsetComparison(
        feature=ours.feature,
        ours_mae=ours_mae,
        ours_sd=ours_sd,
        baseline_mae=base_mae,
        baseline_sd=base_sd,
        coverage=len(keep) / total,
        n_retained=len(keep),
        n_total=total,
    )
