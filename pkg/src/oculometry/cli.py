"""Batch command-line interface.

Subcommands:

* ``synth``     generate a synthetic dataset (masks, landmarks, manifest,
                analytic ground-truth CSV, labels)
* ``measure``   compute measurement CSVs from a manifest of masks
* ``dice``      score predicted masks against annotated masks
* ``evaluate``  compare two measurement CSVs (MAE, agreement, SVG plots)
* ``classify``  train and evaluate a disease classifier from measurements

Exit codes: 0 clean, 2 partially degraded output (some features invalid or
some faces skipped), 1 failure.  ``OCULOMETRY_THREADS`` sets the number of
worker threads for per-face measurement; output order never depends on it.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import anthro, classify, fileio, prep, stats, svgplot, synth
from .core import MeasurementSet, feature_registry, to_mm

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_PARTIAL = 2


def _thread_count() -> int:
    raw = os.environ.get("OCULOMETRY_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    n = args.n
    if n < 1:
        print("synth: n must be at least 1", file=sys.stderr)
        return EXIT_FAILURE
    n_disease = int(round(n * args.disease_fraction))
    n_healthy = n - n_disease
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"synth: cannot create {out_dir}: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    param_sets = []
    if n_healthy:
        param_sets += synth.gen_face_params_list(n_healthy, synth.HEALTHY_LABEL, args.seed)
    if n_disease:
        param_sets += synth.gen_face_params_list(n_disease, synth.DISEASE_LABEL, args.seed + 1)

    masks_dir = out_dir / "masks"
    lm_dir = out_dir / "landmarks"
    lm_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    truth_rows: list[MeasurementSet] = []
    labels: dict[str, str] = {}
    for params in param_sets:
        face, truth_px = synth.render_face(params)
        label = params.face_id.rsplit("_", 1)[0]
        mask_table = fileio.save_face_masks(masks_dir, face.face_id, face)
        lm_path = lm_dir / f"{face.face_id}.txt"
        fileio.write_landmarks(lm_path, face.nasion, face.hairline_mid)
        entries.append(
            fileio.ManifestEntry(
                face_id=face.face_id,
                masks=mask_table,
                landmarks=lm_path,
                dataset=label,
                truth_csv=out_dir / "truth.csv",
            )
        )
        scale_l, scale_r = synth.analytic_scales(params)
        truth_rows.append(truth_px)
        truth_rows.append(to_mm(truth_px, scale_l, scale_r))
        labels[face.face_id] = label

    fileio.write_manifest(out_dir / "manifest.json", fileio.Manifest(entries=entries))
    fileio.write_measurements_file(out_dir / "truth.csv", truth_rows)
    fileio.write_labels_csv(out_dir / "labels.csv", labels)
    print(
        f"synth: wrote {len(param_sets)} faces "
        f"({n_healthy} healthy, {n_disease} disease) to {out_dir}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# measure
# ---------------------------------------------------------------------------


def _measure_entry(
    entry: fileio.ManifestEntry, normalize: bool
) -> tuple[Optional[tuple[MeasurementSet, MeasurementSet]], list[str]]:
    try:
        face, warnings = fileio.load_face(entry)
    except (OSError, ValueError) as exc:
        return None, [f"{entry.face_id}: failed to load ({exc})"]
    if normalize:
        try:
            face, _ = prep.normalize_orientation(face)
        except ValueError as exc:
            return None, warnings + [f"{entry.face_id}: orientation failed ({exc})"]
    return anthro.measure_face(face), warnings


def cmd_measure(args: argparse.Namespace) -> int:
    try:
        manifest = fileio.read_manifest(Path(args.manifest))
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"measure: bad manifest: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if not manifest.entries:
        print("measure: manifest has no entries", file=sys.stderr)
        return EXIT_FAILURE

    normalize = not args.no_normalize
    threads = _thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda e: _measure_entry(e, normalize), manifest.entries))
    else:
        results = [_measure_entry(e, normalize) for e in manifest.entries]

    rows: list[MeasurementSet] = []
    any_invalid = False
    failures = 0
    for entry, (measured, warnings) in zip(manifest.entries, results):
        for w in warnings:
            print(f"measure: {w}", file=sys.stderr)
        if measured is None:
            failures += 1
            continue
        px, mm = measured
        if args.units in ("px", "both"):
            rows.append(px)
        if args.units in ("mm", "both"):
            rows.append(mm)
        if px.n_valid() < len(feature_registry()):
            any_invalid = True

    if failures == len(manifest.entries):
        print("measure: every face failed", file=sys.stderr)
        return EXIT_FAILURE
    fileio.write_measurements_file(Path(args.out), rows)
    print(f"measure: wrote {len(rows)} rows for {len(manifest.entries) - failures} faces to {args.out}")
    if failures or any_invalid:
        return EXIT_PARTIAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# dice
# ---------------------------------------------------------------------------

_DICE_COLUMNS = [
    f"{side}_{cls}" for side in ("right", "left") for cls in ("sclera", "iris", "brow")
]


def cmd_dice(args: argparse.Namespace) -> int:
    from .maskgeom import dice as dice_score

    try:
        pred = fileio.read_manifest(Path(args.pred))
        truth = fileio.read_manifest(Path(args.truth))
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"dice: bad manifest: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    pred_ids = set(pred.ids())
    truth_ids = set(truth.ids())
    if pred_ids != truth_ids:
        missing = sorted(truth_ids - pred_ids)
        extra = sorted(pred_ids - truth_ids)
        print(
            f"dice: id mismatch; missing from predictions: {missing}; "
            f"missing from truth: {extra}",
            file=sys.stderr,
        )
        return EXIT_FAILURE

    truth_by_id = {e.face_id: e for e in truth.entries}
    out_path = Path(args.out)
    per_face: list[list[str]] = []
    by_dataset: dict[tuple[str, str], list[float]] = {}
    for entry in pred.entries:
        t_entry = truth_by_id[entry.face_id]
        try:
            p_face, _ = fileio.load_face(entry)
            t_face, _ = fileio.load_face(t_entry)
        except (OSError, ValueError) as exc:
            print(f"dice: {entry.face_id}: {exc}", file=sys.stderr)
            return EXIT_FAILURE
        row = [entry.face_id, t_entry.dataset]
        for col in _DICE_COLUMNS:
            side, cls = col.split("_", 1)
            p_eye = p_face.right if side == "right" else p_face.left
            t_eye = t_face.right if side == "right" else t_face.left
            score = dice_score(getattr(p_eye, cls), getattr(t_eye, cls))
            row.append(f"{score:.6f}")
            by_dataset.setdefault((t_entry.dataset, col), []).append(score)
        per_face.append(row)

    with out_path.open("w", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["id", "dataset"] + _DICE_COLUMNS)
        writer.writerows(per_face)

    summary_path = out_path.with_name(out_path.stem + "_summary.csv")
    with summary_path.open("w", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["dataset", "mask", "n", "median", "q1", "q3"])
        for (dataset, col) in sorted(by_dataset):
            vals = np.array(by_dataset[(dataset, col)])
            q1, med, q3 = np.percentile(vals, [25, 50, 75])
            writer.writerow(
                [dataset, col, len(vals), f"{med:.6f}", f"{q1:.6f}", f"{q3:.6f}"]
            )
    print(f"dice: wrote {len(per_face)} rows to {out_path} (summary: {summary_path})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------


def _index_measurements(
    sets: list[MeasurementSet], units: str
) -> dict[str, MeasurementSet]:
    out = {}
    for ms in sets:
        if ms.units == units:
            out[ms.face_id] = ms
    return out


def cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        pred_sets = fileio.read_measurements_file(Path(args.pred))
        truth_sets = fileio.read_measurements_file(Path(args.truth))
    except (OSError, ValueError) as exc:
        print(f"evaluate: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    pred = _index_measurements(pred_sets, args.units)
    truth = _index_measurements(truth_sets, args.units)
    if args.exclude_ids:
        try:
            excluded = fileio.read_id_list(Path(args.exclude_ids))
        except OSError as exc:
            print(f"evaluate: cannot read exclusion list: {exc}", file=sys.stderr)
            return EXIT_FAILURE
        pred = {k: v for k, v in pred.items() if k not in excluded}
        truth = {k: v for k, v in truth.items() if k not in excluded}
    if not set(pred) & set(truth):
        print(f"evaluate: no overlapping ids with units={args.units}", file=sys.stderr)
        return EXIT_FAILURE

    if args.bilateral_average:
        pred_table = {fid: stats.bilateral_average(ms) for fid, ms in pred.items()}
        truth_table = {fid: stats.bilateral_average(ms) for fid, ms in truth.items()}
        features = list(stats.BILATERAL_FEATURES) + list(
            f for f in feature_registry() if not f.startswith(("left_", "right_"))
        )
    else:
        pred_table = {fid: ms.as_optional_dict() for fid, ms in pred.items()}
        truth_table = {fid: ms.as_optional_dict() for fid, ms in truth.items()}
        features = feature_registry()

    out_dir = Path(args.out_dir)
    plots_dir = out_dir / "plots"
    plots_dir.mkdir(parents=True, exist_ok=True)

    mae_rows = []
    agreement_rows = []
    filtered_rows = []
    for feature in features:
        try:
            series = stats.build_series(pred_table, truth_table, feature, units=args.units)
        except ValueError:
            continue
        mean, sd = stats.mae(series)
        mae_rows.append([feature, args.units, len(series), f"{mean:.6f}", f"{sd:.6f}"])
        if len(series) >= 2:
            report = stats.bland_altman(series)
            agreement_rows.append(
                [
                    feature,
                    args.units,
                    report.n,
                    f"{report.mean_diff:.6f}",
                    f"{report.sd_diff:.6f}",
                    f"{report.loa_low:.6f}",
                    f"{report.loa_high:.6f}",
                    f"{report.pct_outside:.6f}",
                ]
            )
            (plots_dir / f"{feature}.svg").write_text(svgplot.bland_altman_svg(report))
        if args.filter_brow_outliers and "brow_" in feature and len(series) >= 2:
            errors = np.abs(series.predicted - series.truth)
            kept, removed = stats.filter_outliers_1sd(errors)
            f_mean = float(kept.mean())
            f_sd = float(kept.std(ddof=1)) if len(kept) > 1 else 0.0
            filtered_rows.append(
                [feature, args.units, len(kept), removed, f"{f_mean:.6f}", f"{f_sd:.6f}"]
            )
            print(f"evaluate: {feature}: removed {removed} outliers, kept {len(kept)}")

    def write_table(path: Path, header: list[str], rows: list[list]) -> None:
        with path.open("w", newline="") as fp:
            writer = csv.writer(fp, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)

    write_table(out_dir / "mae.csv", ["feature", "units", "n", "mae", "sd"], mae_rows)
    write_table(
        out_dir / "agreement.csv",
        ["feature", "units", "n", "mean_diff", "sd_diff", "loa_low", "loa_high", "pct_outside"],
        agreement_rows,
    )
    if args.filter_brow_outliers:
        write_table(
            out_dir / "mae_brow_filtered.csv",
            ["feature", "units", "n_kept", "n_removed", "mae", "sd"],
            filtered_rows,
        )
    print(
        f"evaluate: {len(mae_rows)} features compared, reports in {out_dir}, "
        f"plots in {plots_dir}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

_LABEL_CODES = {"healthy": classify.HEALTHY, "disease": classify.DISEASE}


def cmd_classify(args: argparse.Namespace) -> int:
    try:
        sets = fileio.read_measurements_file(Path(args.features))
        labels = fileio.read_labels_csv(Path(args.labels))
    except (OSError, ValueError) as exc:
        print(f"classify: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    table = _index_measurements(sets, args.units)
    ids = [fid for fid in table if fid in labels]
    if not ids:
        print("classify: no ids shared between features and labels", file=sys.stderr)
        return EXIT_FAILURE
    bad = sorted({labels[fid] for fid in ids} - set(_LABEL_CODES))
    if bad:
        print(f"classify: unknown labels {bad}; expected healthy/disease", file=sys.stderr)
        return EXIT_FAILURE
    y = [_LABEL_CODES[labels[fid]] for fid in ids]
    if len(set(y)) < 2:
        print("classify: need both healthy and disease rows", file=sys.stderr)
        return EXIT_FAILURE
    data = classify.dataset_from_vectors(
        ids, [table[fid].as_vector() for fid in ids], y
    )

    if args.grid:
        try:
            grid = json.loads(Path(args.grid).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"classify: bad grid file: {exc}", file=sys.stderr)
            return EXIT_FAILURE
    else:
        grid = (
            classify.DEFAULT_GRID_RF if args.model == "rf" else classify.DEFAULT_GRID_GBT
        )

    try:
        report, model, search = classify.classify_pipeline(
            data,
            family=args.model,
            grid=grid,
            seed=args.seed,
            split_fraction=args.split,
        )
    except ValueError as exc:
        print(f"classify: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with (out_dir / "metrics.csv").open("w", newline="") as fp:
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(["model", "accuracy", "precision", "recall", "auroc", "n_train", "n_test"])
        writer.writerow(
            [
                report.family,
                f"{report.accuracy:.6f}",
                f"{report.precision:.6f}",
                f"{report.recall:.6f}",
                f"{report.auroc:.6f}",
                report.n_train,
                report.n_test,
            ]
        )
    (out_dir / "model.json").write_text(model.to_json() + "\n")
    if search is not None:
        with (out_dir / "cv_table.csv").open("w", newline="") as fp:
            writer = csv.writer(fp, lineterminator="\n")
            writer.writerow(["params", "fold_accuracies", "mean_accuracy"])
            for row in search.table:
                writer.writerow(
                    [
                        json.dumps(row["params"]),
                        json.dumps([round(a, 6) for a in row["fold_accuracies"]]),
                        f"{row['mean_accuracy']:.6f}",
                    ]
                )
    print(
        f"classify: {report.family} accuracy={report.accuracy:.3f} "
        f"precision={report.precision:.3f} recall={report.recall:.3f} "
        f"auroc={report.auroc:.3f} (reports in {out_dir})"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oculometry",
        description="Periorbital measurement, evaluation, and classification from eye-region masks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset with known ground truth")
    p.add_argument("--n", type=int, required=True, help="number of faces")
    p.add_argument("--disease-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("measure", help="measure faces listed in a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="output measurement CSV")
    p.add_argument("--units", choices=("px", "mm", "both"), default="both")
    p.add_argument(
        "--no-normalize",
        action="store_true",
        help="skip orientation normalization (input is already upright)",
    )
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("dice", help="overlap scores between two mask manifests")
    p.add_argument("--pred", required=True, help="manifest of predicted masks")
    p.add_argument("--truth", required=True, help="manifest of annotated masks")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_dice)

    p = sub.add_parser("evaluate", help="compare predicted measurements to annotations")
    p.add_argument("--pred", required=True, help="predicted measurement CSV")
    p.add_argument("--truth", required=True, help="annotated measurement CSV")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--units", choices=("px", "mm"), default="px")
    p.add_argument("--bilateral-average", action="store_true")
    p.add_argument("--filter-brow-outliers", action="store_true")
    p.add_argument("--exclude-ids", help="file of ids to exclude (one per line)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("classify", help="train and test a disease classifier")
    p.add_argument("--features", required=True, help="measurement CSV")
    p.add_argument("--labels", required=True, help="id,label CSV")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--model", choices=("rf", "gbt"), default="rf")
    p.add_argument("--grid", help="JSON hyperparameter grid file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", type=float, default=0.8)
    p.add_argument("--units", choices=("px", "mm"), default="mm")
    p.set_defaults(func=cmd_classify)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
