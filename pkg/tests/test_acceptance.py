"""Acceptance suite.

One test per acceptance criterion, each printing a PASS/FAIL verdict line.
Tolerances are fixed here, not tuned: linear pixel features within 1.0 px of
the synthetic analytic truth, tilt within 1.0 degree, statistics within 1e-9
of brute-force references, and the classifier anchored at accuracy >= 0.90 /
AUROC >= 0.95 on the seeded synthetic population.  The area ratio is
dimensionless and is checked at a documented 12% relative band plus a strict
monotonicity check (raster pixel counts vs continuous areas differ by the
half-pixel boundary band, which the px tolerances do not describe).
"""

import itertools
import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from oculometry import anthro, stats
from oculometry.classify import (
    augment_swap_lr,
    auroc,
    classify_pipeline,
    dataset_from_vectors,
    metrics,
)
from oculometry.cli import main
from oculometry.core import RasterMask, feature_registry
from oculometry.maskgeom import dice
from oculometry.prep import normalize_orientation
from oculometry.synth import FaceParams, gen_face_params_list, gen_population, render_face

LINEAR_TOL_PX = 1.0
TILT_TOL_DEG = 1.0
RATIO_REL_TOL = 0.12
STAT_TOL = 1e-9

ORACLE_SEED = 2024
ORACLE_N_PER_CLASS = 250


@contextmanager
def criterion(num: int, label: str):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {num} ({label}): FAIL")
        raise
    print(f"ACCEPTANCE {num} ({label}): PASS")


def _tolerance_for(name: str) -> tuple[str, float]:
    if name.endswith("canthal_tilt_deg"):
        return "deg", TILT_TOL_DEG
    if name.endswith("scleral_area_ratio"):
        return "ratio", RATIO_REL_TOL
    return "px", LINEAR_TOL_PX


@pytest.fixture(scope="session")
def oracle_population():
    pop = gen_population(ORACLE_N_PER_CLASS, "healthy", ORACLE_SEED)
    pop += gen_population(ORACLE_N_PER_CLASS, "disease", ORACLE_SEED + 1)
    return pop


def test_criterion_1_oracle_recovery(oracle_population):
    with criterion(1, "oracle recovery on 500 synthetic faces"):
        start = time.monotonic()
        worst: dict[str, float] = {}
        for face, truth, _ in oracle_population:
            px, _ = anthro.measure_face(face)
            for name in feature_registry():
                assert px.valid[name], f"{face.face_id}: {name} unexpectedly invalid"
                kind, tol = _tolerance_for(name)
                err = abs(px.values[name] - truth.values[name])
                if kind == "ratio":
                    err /= abs(truth.values[name])
                worst[kind] = max(worst.get(kind, 0.0), err)
                assert err <= tol + 1e-9, (
                    f"{face.face_id}: {name} err {err:.4f} exceeds {tol} {kind}"
                )
        elapsed = time.monotonic() - start
        print(
            f"  worst errors: {worst['px']:.3f} px, {worst['deg']:.3f} deg, "
            f"{worst['ratio'] * 100:.1f}% ratio; {elapsed:.1f}s for 500 faces"
        )
        assert elapsed < 60.0, f"oracle run took {elapsed:.1f}s"


def test_criterion_2_dice_oracle():
    with criterion(2, "dice equals the pixel-count oracle"):
        rng = np.random.default_rng(77)

        def oracle(a, b):
            xs = set(map(tuple, np.argwhere(a.pixels)))
            ys = set(map(tuple, np.argwhere(b.pixels)))
            if not xs and not ys:
                return 1.0
            return 2.0 * len(xs & ys) / (len(xs) + len(ys))

        for _ in range(200):
            shape = (int(rng.integers(4, 30)), int(rng.integers(4, 30)))
            a = RasterMask(rng.random(shape) > rng.uniform(0.3, 0.9))
            b = RasterMask(rng.random(shape) > rng.uniform(0.3, 0.9))
            assert dice(a, b) == oracle(a, b)
            assert dice(a, b) == dice(b, a)
            if not a.empty:
                assert dice(a, a) == 1.0


def test_criterion_3_mm_calibration(oracle_population):
    with criterion(3, "mm calibration via the 11.71 mm iris"):
        for face, _, _ in oracle_population[:40]:
            px, mm = anthro.measure_face(face)
            d_right = anthro._prepare_eye(face.right).iris_fit.diameter_px
            d_left = anthro._prepare_eye(face.left).iris_fit.diameter_px
            scale = {"right": 11.71 / d_right, "left": 11.71 / d_left}
            mean_scale = (scale["right"] + scale["left"]) / 2.0
            for name in feature_registry():
                if not px.valid[name]:
                    continue
                base = name.split("_", 1)
                if base[0] in ("left", "right"):
                    if base[1] in ("canthal_tilt_deg", "scleral_area_ratio"):
                        continue
                    expected = px.values[name] * scale[base[0]]
                else:
                    expected = px.values[name] * mean_scale
                if expected == 0.0:
                    assert mm.values[name] == 0.0
                else:
                    rel = abs(mm.values[name] - expected) / abs(expected)
                    assert rel <= 1e-9, f"{name}: relative error {rel:.2e}"


def test_criterion_4_rotation_robustness():
    """Rotated acquisitions measure like upright ones after normalization.

    The bound max(1 px, 2%) is applied per feature to the mean absolute
    deviation over the population (50 faces x 4 angles).  Individual samples
    additionally respect a hard ceiling of max(4 px, 5%): a canthus row
    estimate is a single-column median, and nearest-neighbor resampling can
    move each of the column's row ends by up to ~2 rows at the elliptical
    tip, so features that difference two canthus estimates can jitter by a
    few pixels per sample even though they are unbiased.
    """
    with criterion(4, "rotation robustness at +/-5 and +/-15 degrees"):
        params = gen_face_params_list(25, "healthy", 31)
        params += gen_face_params_list(25, "disease", 32)
        deviations: dict[str, list[float]] = {n: [] for n in feature_registry()}
        references: dict[str, list[float]] = {n: [] for n in feature_registry()}
        for p in params:
            upright_face, _ = render_face(p)
            upright_px, _ = anthro.measure_face(upright_face)
            for theta in (-15.0, -5.0, 5.0, 15.0):
                rotated = FaceParams(
                    left=p.left,
                    right=p.right,
                    nasion=p.nasion,
                    hairline_mid=p.hairline_mid,
                    rotation_deg=theta,
                    image_size=p.image_size,
                    face_id=p.face_id,
                )
                face, _ = render_face(rotated)
                normalized, transform = normalize_orientation(face)
                assert math.isclose(abs(transform.rotation_deg), abs(theta), abs_tol=1e-6)
                px, _ = anthro.measure_face(normalized)
                for name in feature_registry():
                    assert upright_px.valid[name], f"{p.face_id}: {name} invalid upright"
                    if not px.valid[name]:
                        continue
                    ref = upright_px.values[name]
                    err = abs(px.values[name] - ref)
                    ceiling = max(4.0, 0.05 * abs(ref))
                    assert err <= ceiling, (
                        f"{p.face_id} theta={theta}: {name} err {err:.3f} > ceiling"
                    )
                    deviations[name].append(err)
                    references[name].append(abs(ref))
        worst_mean = 0.0
        for name in feature_registry():
            errs = np.asarray(deviations[name])
            assert len(errs) >= 190  # validity preserved through rotation
            tol = max(1.0, 0.02 * float(np.mean(references[name])))
            mean_err = float(errs.mean())
            worst_mean = max(worst_mean, mean_err / tol)
            assert mean_err <= tol, f"{name}: mean deviation {mean_err:.3f} > {tol:.3f}"
        print(f"  worst feature mean deviation at {worst_mean * 100:.0f}% of its budget")


def test_criterion_5_statistics_oracles():
    with criterion(5, "statistics match brute-force references"):
        rng = np.random.default_rng(101)

        for _ in range(100):
            n = int(rng.integers(2, 50))
            pred = rng.normal(5, 3, n)
            truth = rng.normal(5, 3, n)
            series = stats.PairedSeries(
                ids=tuple(f"i{k}" for k in range(n)), predicted=pred, truth=truth
            )
            errs = [abs(p - t) for p, t in zip(pred, truth)]
            ref_mean = sum(errs) / n
            ref_sd = (
                math.sqrt(sum((e - ref_mean) ** 2 for e in errs) / (n - 1)) if n > 1 else 0.0
            )
            got_mean, got_sd = stats.mae(series)
            assert abs(got_mean - ref_mean) <= STAT_TOL
            assert abs(got_sd - ref_sd) <= STAT_TOL

            diffs = [p - t for p, t in zip(pred, truth)]
            m = sum(diffs) / n
            sd = math.sqrt(sum((d - m) ** 2 for d in diffs) / (n - 1))
            lo, hi = m - 1.96 * sd, m + 1.96 * sd
            pct = 100.0 * sum(1 for d in diffs if d < lo or d > hi) / n
            rep = stats.bland_altman(series)
            for got, ref in (
                (rep.mean_diff, m),
                (rep.sd_diff, sd),
                (rep.loa_low, lo),
                (rep.loa_high, hi),
                (rep.pct_outside, pct),
            ):
                assert abs(got - ref) <= STAT_TOL

            errors = np.abs(rng.normal(0, 2, max(2, n)))
            thr = errors.mean() + errors.std(ddof=1)
            ref_kept = [e for e in errors if e <= thr]
            kept, removed = stats.filter_outliers_1sd(errors)
            assert list(kept) == ref_kept
            assert removed == len(errors) - len(ref_kept)

            labels = rng.integers(0, 2, max(4, n))
            if labels.sum() in (0, len(labels)):
                labels[0] = 1 - labels[0]
            scores = np.round(rng.normal(0, 1, len(labels)), 1)
            pos = scores[labels == 1]
            neg = scores[labels == 0]
            ref_auc = (
                sum((1.0 if p > q else 0.5 if p == q else 0.0) for p in pos for q in neg)
                / (len(pos) * len(neg))
            )
            assert abs(auroc(scores, labels) - ref_auc) <= STAT_TOL

        # exhaustive confusion matrices, entries 0..20
        ones = np.ones(40, dtype=int)
        zeros = np.zeros(40, dtype=int)
        for tp, tn, fp, fn in itertools.product(range(21), repeat=4):
            total = tp + tn + fp + fn
            if total == 0:
                continue
            pred = np.concatenate([ones[:tp], zeros[:fn], ones[:fp], zeros[:tn]])
            lab = np.concatenate([ones[: tp + fn], zeros[: fp + tn]])
            acc, prec, rec = metrics(pred, lab)
            assert acc == (tp + tn) / total
            assert prec == (tp / (tp + fp) if tp + fp else 0.0)
            assert rec == (tp / (tp + fn) if tp + fn else 0.0)


def test_criterion_6_classification_anchor():
    with criterion(6, "random-forest anchor on 268/268 synthetic faces"):
        start = time.monotonic()
        pop = gen_population(268, "healthy", 9001)
        pop += gen_population(268, "disease", 9002)
        ids, vectors, labels = [], [], []
        for face, _, label in pop:
            _, mm = anthro.measure_face(face)
            ids.append(face.face_id)
            vectors.append(mm.as_vector())
            labels.append(0 if label == "healthy" else 1)
        data = dataset_from_vectors(ids, vectors, labels)
        report, _, _ = classify_pipeline(data, family="rf", grid=None, seed=17)
        elapsed = time.monotonic() - start
        print(
            f"  accuracy={report.accuracy:.3f} precision={report.precision:.3f} "
            f"recall={report.recall:.3f} auroc={report.auroc:.3f} in {elapsed:.1f}s"
        )
        assert report.accuracy >= 0.90
        assert report.auroc >= 0.95
        assert elapsed < 120.0


def test_criterion_7_augmentation_contract():
    with criterion(7, "left/right swap augmentation contract"):
        rng = np.random.default_rng(55)
        names = tuple(feature_registry())
        X = rng.normal(0, 1, (37, 36))
        y = rng.integers(0, 2, 37)
        from oculometry.classify import LabeledDataset

        data = LabeledDataset(tuple(f"r{i}" for i in range(37)), X, y, names)
        aug = augment_swap_lr(data)
        assert len(aug) == 2 * len(data)
        swapped = LabeledDataset(data.ids, aug.X[37:], aug.y[37:], names)
        twice = augment_swap_lr(swapped)
        np.testing.assert_array_equal(twice.X[37:], data.X)
        assert aug.y.sum() == 2 * data.y.sum()


def test_criterion_8_brow_reanalysis(oracle_population, tmp_path):
    with criterion(8, "brow outlier filtering never increases MAE"):
        subset = oracle_population[:30] + oracle_population[-30:]
        pred_table = {}
        truth_table = {}
        for face, truth, _ in subset:
            px, _ = anthro.measure_face(face)
            pred_table[face.face_id] = px.as_optional_dict()
            truth_table[face.face_id] = truth.as_optional_dict()
        brow_features = [n for n in feature_registry() if "brow_" in n]
        reported = 0
        for feature in brow_features:
            series = stats.build_series(pred_table, truth_table, feature)
            errors = np.abs(series.predicted - series.truth)
            kept, removed = stats.filter_outliers_1sd(errors)
            assert kept.mean() <= errors.mean() + 1e-12, feature
            assert removed == len(errors) - len(kept)
            reported += 1
        assert reported == 12


def test_criterion_9_pipeline_determinism(tmp_path):
    with criterion(9, "end-to-end byte determinism"):
        grids = tmp_path / "grid.json"
        grids.write_text(json.dumps({"n_trees": [15], "max_depth": [6]}))
        digests = []
        for run in ("run_a", "run_b"):
            root = tmp_path / run
            assert main(["synth", "--n", "12", "--disease-fraction", "0.5",
                         "--seed", "99", "--out-dir", str(root)]) == 0
            assert main(["measure", "--manifest", str(root / "manifest.json"),
                         "--out", str(root / "pred.csv"), "--units", "both"]) == 0
            assert main(["evaluate", "--pred", str(root / "pred.csv"),
                         "--truth", str(root / "truth.csv"),
                         "--out-dir", str(root / "report"), "--units", "px",
                         "--filter-brow-outliers"]) == 0
            assert main(["classify", "--features", str(root / "pred.csv"),
                         "--labels", str(root / "labels.csv"),
                         "--out-dir", str(root / "clf"), "--model", "rf",
                         "--seed", "4", "--grid", str(grids)]) == 0
            tree = {}
            for f in sorted(root.rglob("*")):
                if f.is_file():
                    tree[str(f.relative_to(root))] = f.read_bytes()
            digests.append(tree)
        assert digests[0].keys() == digests[1].keys()
        for name in digests[0]:
            assert digests[0][name] == digests[1][name], f"{name} differs between runs"
