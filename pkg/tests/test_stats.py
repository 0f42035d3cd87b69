import math

import numpy as np
import pytest

from oculometry.core import MeasurementSet
from oculometry.stats import (
    PairedSeries,
    bilateral_average,
    bland_altman,
    build_series,
    filter_outliers_1sd,
    mae,
    subset_compare,
)


def series(pred, truth, ids=None, feature="f", units="px"):
    ids = ids or [f"s{i}" for i in range(len(pred))]
    return PairedSeries(
        ids=tuple(ids),
        predicted=np.array(pred, dtype=float),
        truth=np.array(truth, dtype=float),
        feature=feature,
        units=units,
    )


def mae_oracle(pred, truth):
    """Independent reference: plain python loops."""
    errs = [abs(p - t) for p, t in zip(pred, truth)]
    mean = sum(errs) / len(errs)
    if len(errs) < 2:
        return mean, 0.0
    var = sum((e - mean) ** 2 for e in errs) / (len(errs) - 1)
    return mean, math.sqrt(var)


def bland_altman_oracle(pred, truth):
    diffs = [p - t for p, t in zip(pred, truth)]
    n = len(diffs)
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    sd = math.sqrt(var)
    lo, hi = mean - 1.96 * sd, mean + 1.96 * sd
    outside = sum(1 for d in diffs if d < lo or d > hi)
    return mean, sd, lo, hi, 100.0 * outside / n


class TestMae:
    def test_perfect_prediction(self):
        assert mae(series([1, 2, 3], [1, 2, 3])) == (0.0, 0.0)

    def test_hand_computed(self):
        mean, _ = mae(series([2, 3, 5], [1, 2, 3]))
        assert math.isclose(mean, 4.0 / 3.0, rel_tol=1e-12)

    def test_single_pair(self):
        assert mae(series([7], [5])) == (2.0, 0.0)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            series([], [])


class TestBlandAltman:
    def test_all_zero_diffs(self):
        r = bland_altman(series([1, 2, 3], [1, 2, 3]))
        assert r.mean_diff == 0.0 and r.sd_diff == 0.0
        assert r.loa_low == 0.0 and r.loa_high == 0.0
        assert r.pct_outside == 0.0

    def test_alternating_diffs(self):
        r = bland_altman(series([1, -1, 1, -1], [0, 0, 0, 0]))
        assert math.isclose(r.mean_diff, 0.0, abs_tol=1e-12)
        assert math.isclose(r.sd_diff, math.sqrt(4.0 / 3.0), rel_tol=1e-12)
        assert math.isclose(r.loa_high, 1.96 * math.sqrt(4.0 / 3.0), rel_tol=1e-12)
        assert r.pct_outside == 0.0

    def test_single_spike_stays_inside(self):
        # with n=4 the largest standardized deviation is (n-1)/sqrt(n) = 1.5,
        # below 1.96, so no 4-point series can put a point outside the limits
        r = bland_altman(series([0, 0, 0, 10], [0, 0, 0, 0]))
        m, sd, lo, hi, pct = bland_altman_oracle([0, 0, 0, 10], [0, 0, 0, 0])
        assert math.isclose(r.loa_high, hi, rel_tol=1e-12)
        assert r.pct_outside == pct == 0.0

    def test_outside_point_counted(self):
        pred = [0, 0, 0, 0, 0, 12]
        r = bland_altman(series(pred, [0] * 6))
        _, _, _, hi, pct = bland_altman_oracle(pred, [0] * 6)
        assert 12 > hi
        assert math.isclose(r.pct_outside, 100.0 / 6.0, rel_tol=1e-12)
        assert math.isclose(r.pct_outside, pct, rel_tol=1e-12)

    def test_loa_width_invariant(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(2, 40))
            s = series(rng.normal(0, 5, n), rng.normal(0, 5, n))
            r = bland_altman(s)
            assert math.isclose(r.loa_high - r.loa_low, 2 * 1.96 * r.sd_diff, rel_tol=1e-9)
            assert 0.0 <= r.pct_outside <= 100.0

    def test_needs_two_pairs(self):
        with pytest.raises(ValueError):
            bland_altman(series([1], [0]))

    def test_matches_oracle_on_random_series(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            n = int(rng.integers(2, 60))
            pred = rng.normal(10, 4, n)
            truth = rng.normal(10, 4, n)
            r = bland_altman(series(pred, truth))
            m, sd, lo, hi, pct = bland_altman_oracle(pred, truth)
            assert math.isclose(r.mean_diff, m, abs_tol=1e-9)
            assert math.isclose(r.sd_diff, sd, abs_tol=1e-9)
            assert math.isclose(r.loa_low, lo, abs_tol=1e-9)
            assert math.isclose(r.loa_high, hi, abs_tol=1e-9)
            assert math.isclose(r.pct_outside, pct, abs_tol=1e-9)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(9)
        pred, truth = rng.normal(0, 1, 30), rng.normal(0, 1, 30)
        r1 = bland_altman(series(pred, truth))
        perm = rng.permutation(30)
        r2 = bland_altman(series(pred[perm], truth[perm]))
        assert math.isclose(r1.mean_diff, r2.mean_diff, abs_tol=1e-12)
        assert math.isclose(r1.sd_diff, r2.sd_diff, abs_tol=1e-12)
        assert r1.pct_outside == r2.pct_outside


def _set_with(units="px", face_id="f", **overrides):
    ms = MeasurementSet.empty(units=units, face_id=face_id)
    values, valid = dict(ms.values), dict(ms.valid)
    for k, v in overrides.items():
        values[k], valid[k] = v, True
    return MeasurementSet(units=units, values=values, valid=valid, face_id=face_id)


class TestBilateralAverage:
    def test_mean_of_two_sides(self):
        ms = _set_with(right_mrd1=4.0, left_mrd1=2.0)
        assert bilateral_average(ms)["mrd1"] == 3.0

    def test_single_valid_side(self):
        ms = _set_with(right_mrd1=4.0)
        assert bilateral_average(ms)["mrd1"] == 4.0

    def test_globals_untouched(self):
        ms = _set_with(icd=120.0)
        out = bilateral_average(ms)
        assert out["icd"] == 120.0

    def test_no_valid_side_is_none(self):
        ms = _set_with(icd=120.0)
        assert bilateral_average(ms)["mrd2"] is None

    def test_reduced_width(self):
        out = bilateral_average(_set_with())
        assert len(out) == 20  # 16 averaged + 4 whole-face


class TestFilterOutliers:
    def test_uniform_untouched(self):
        kept, removed = filter_outliers_1sd([2.0, 2.0, 2.0, 2.0])
        assert removed == 0 and len(kept) == 4

    def test_known_threshold(self):
        # mean 25.75, sample sd 49.5, threshold 75.25: only 100 exceeds it
        kept, removed = filter_outliers_1sd([1.0, 1.0, 1.0, 100.0])
        assert removed == 1
        assert list(kept) == [1.0, 1.0, 1.0]

    def test_never_increases_mae(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            errs = np.abs(rng.normal(0, 3, int(rng.integers(3, 50))))
            kept, removed = filter_outliers_1sd(errs)
            assert kept.mean() <= errs.mean() + 1e-12

    def test_single_pass_not_iterated(self):
        # after removing 100 the new mean+sd would also cut 10, but one pass keeps it
        kept, removed = filter_outliers_1sd([1.0, 1.0, 1.0, 10.0, 100.0])
        assert removed == 1 and 10.0 in kept

    def test_too_short(self):
        with pytest.raises(ValueError):
            filter_outliers_1sd([1.0])


class TestSubsetCompare:
    def _pair(self):
        ours = series([1, 2, 3, 4], [1, 1, 1, 1], ids=["a", "b", "c", "d"])
        base = series([2, 2, 2, 2], [1, 1, 1, 1], ids=["a", "b", "c", "d"])
        return ours, base

    def test_no_failures_identity(self):
        ours, base = self._pair()
        cmp = subset_compare(ours, base, set())
        assert cmp.coverage == 1.0
        assert cmp.ours_mae == mae(ours)[0]
        assert cmp.baseline_mae == mae(base)[0]

    def test_half_failed(self):
        ours, base = self._pair()
        cmp = subset_compare(ours, base, {"c", "d"})
        assert cmp.coverage == 0.5 and cmp.n_retained == 2

    def test_failure_removes_from_ours_too(self):
        ours, base = self._pair()
        cmp = subset_compare(ours, base, {"d"})
        # without id d (error 3), our MAE over a,b,c is (0+1+2)/3
        assert math.isclose(cmp.ours_mae, 1.0, rel_tol=1e-12)

    def test_all_failed_errors(self):
        ours, base = self._pair()
        with pytest.raises(ValueError):
            subset_compare(ours, base, {"a", "b", "c", "d"})


class TestBuildSeries:
    def test_only_doubly_valid_ids(self):
        pred = {
            "a": {"mrd1": 1.0},
            "b": {"mrd1": None},
            "c": {"mrd1": 3.0},
            "e": {"mrd1": 9.0},
        }
        truth = {
            "a": {"mrd1": 1.5},
            "b": {"mrd1": 2.0},
            "c": {"mrd1": None},
            "d": {"mrd1": 4.0},
        }
        s = build_series(pred, truth, "mrd1")
        assert s.ids == ("a",)

    def test_no_overlap_errors(self):
        with pytest.raises(ValueError):
            build_series({"a": {"f": None}}, {"a": {"f": 1.0}}, "f")
