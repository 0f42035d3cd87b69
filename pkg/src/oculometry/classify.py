"""Disease classification from measurement vectors.

Random forests and gradient-boosted trees built from scratch on axis-aligned
CART splits, plus the surrounding pipeline: left/right swap augmentation,
stratified splitting, k-fold grid search, confusion-matrix metrics, and
rank-based AUROC.  Everything is deterministic under its seed; each tree
draws from an independent child RNG stream, so per-tree parallel training
would be bit-identical to serial training.

Labels are binary: 0 = healthy, 1 = disease (the positive class).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import feature_registry, swap_sides_name

HEALTHY, DISEASE = 0, 1
MODEL_FORMAT = "oculometry.model/v1"

_EPS = 1e-12


@dataclass(frozen=True)
class LabeledDataset:
    """Feature vectors with binary labels; NaN marks an invalid feature."""

    ids: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=int)
        if X.ndim != 2 or len(y) != X.shape[0] or len(self.ids) != X.shape[0]:
            raise ValueError("ids, X rows, and y must align")
        if X.shape[1] != len(self.feature_names):
            raise ValueError("feature names must match the matrix width")
        if not np.all(np.isin(y, (HEALTHY, DISEASE))):
            raise ValueError("labels must be 0 (healthy) or 1 (disease)")
        X = X.copy()
        y = y.copy()
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    def __len__(self) -> int:
        return len(self.ids)

    def take(self, idx: Sequence[int]) -> "LabeledDataset":
        idx = list(idx)
        return LabeledDataset(
            ids=tuple(self.ids[i] for i in idx),
            X=self.X[idx],
            y=self.y[idx],
            feature_names=self.feature_names,
        )


def augment_swap_lr(data: LabeledDataset) -> LabeledDataset:
    """Double a dataset by mirroring anatomy: swap every left/right feature pair.

    Whole-face features and labels are untouched.  Applying the swap twice
    recovers the original rows, so augmentation is an involution.
    """
    name_to_col = {n: i for i, n in enumerate(data.feature_names)}
    perm = [name_to_col[swap_sides_name(n)] for n in data.feature_names]
    swapped = data.X[:, perm]
    return LabeledDataset(
        ids=data.ids + tuple(f"{fid}__swap" for fid in data.ids),
        X=np.vstack([data.X, swapped]),
        y=np.concatenate([data.y, data.y]),
        feature_names=data.feature_names,
    )


def split_train_test(
    data: LabeledDataset, fraction: float = 0.8, seed: int = 0
) -> tuple[LabeledDataset, LabeledDataset]:
    """Stratified train/test split, deterministic under the seed.

    Augmentation belongs AFTER this split (train side only) so a mirrored
    twin can never leak across the boundary.
    """
    if len(data) < 5:
        raise ValueError("need at least 5 rows to split")
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    classes = np.unique(data.y)
    if len(classes) < 2:
        raise ValueError("both classes must be present")
    rng = np.random.default_rng(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for cls in classes:
        members = np.flatnonzero(data.y == cls)
        rng.shuffle(members)
        n_train = int(round(len(members) * fraction))
        n_train = min(max(n_train, 1), len(members) - 1)
        train_idx.extend(members[:n_train].tolist())
        test_idx.extend(members[n_train:].tolist())
    return data.take(sorted(train_idx)), data.take(sorted(test_idx))


class Imputer:
    """Column-median imputation for NaN (invalid) features, fit on train data."""

    def __init__(self) -> None:
        self.medians: Optional[np.ndarray] = None

    def fit(self, X: np.ndarray) -> "Imputer":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            med = np.nanmedian(X, axis=0)
        self.medians = np.where(np.isfinite(med), med, 0.0)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        if self.medians is None:
            raise ValueError("imputer not fitted")
        out = np.array(X, dtype=float)
        nan = np.isnan(out)
        if nan.any():
            out[nan] = np.broadcast_to(self.medians, out.shape)[nan]
        return out


# ---------------------------------------------------------------------------
# CART trees
# ---------------------------------------------------------------------------


def _n_candidates(subsample: float | str | None, n_features: int) -> int:
    if subsample is None:
        return n_features
    if subsample == "sqrt":
        return max(1, int(math.sqrt(n_features)))
    if subsample == "log2":
        return max(1, int(math.log2(n_features)) if n_features > 1 else 1)
    if isinstance(subsample, float) and subsample <= 1:
        k = int(round(subsample * n_features))
    else:
        k = int(subsample)
    return min(max(k, 1), n_features)


def _best_split_gini(x: np.ndarray, y: np.ndarray, min_leaf: int) -> tuple[float, float] | None:
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    n = len(xs)
    cum_pos = np.cumsum(ys)
    total_pos = cum_pos[-1]
    i = np.arange(1, n)  # split after position i-1: left size i
    valid = (xs[1:] > xs[:-1]) & (i >= min_leaf) & (n - i >= min_leaf)
    if not valid.any():
        return None
    nl = i[valid].astype(float)
    nr = n - nl
    pl = cum_pos[:-1][valid] / nl
    pr = (total_pos - cum_pos[:-1][valid]) / nr
    gini = nl * 2 * pl * (1 - pl) + nr * 2 * pr * (1 - pr)
    k = int(np.argmin(gini))
    pos = i[valid][k]
    threshold = (xs[pos - 1] + xs[pos]) / 2.0
    return float(gini[k] / n), float(threshold)


def _best_split_mse(
    x: np.ndarray, g: np.ndarray, min_leaf: int
) -> tuple[float, float] | None:
    order = np.argsort(x, kind="stable")
    xs, gs = x[order], g[order]
    n = len(xs)
    cum = np.cumsum(gs)
    total = cum[-1]
    i = np.arange(1, n)
    valid = (xs[1:] > xs[:-1]) & (i >= min_leaf) & (n - i >= min_leaf)
    if not valid.any():
        return None
    nl = i[valid].astype(float)
    nr = n - nl
    sl = cum[:-1][valid]
    sr = total - sl
    # minimizing within-node SSE equals maximizing nl*ml^2 + nr*mr^2
    score = -(sl * sl / nl + sr * sr / nr)
    k = int(np.argmin(score))
    pos = i[valid][k]
    threshold = (xs[pos - 1] + xs[pos]) / 2.0
    return float(score[k]), float(threshold)


def _build_tree(
    X: np.ndarray,
    target: np.ndarray,
    hessian: Optional[np.ndarray],
    rng: np.random.Generator,
    max_depth: Optional[int],
    min_leaf: int,
    n_candidates: int,
    classification: bool,
) -> dict:
    """Grow one CART tree as nested plain dicts (directly JSON-serializable)."""

    def leaf_value(idx: np.ndarray) -> float:
        if classification:
            return float(target[idx].mean())
        h = hessian[idx].sum() if hessian is not None else float(len(idx))
        return float(target[idx].sum() / (h + _EPS))

    def node_impurity(idx: np.ndarray) -> float:
        if classification:
            p = target[idx].mean()
            return 2 * p * (1 - p)
        g = target[idx]
        return float(np.var(g))

    n_features = X.shape[1]

    def expand(idx: np.ndarray, depth: int, node: dict) -> Optional[tuple]:
        """Fill one node in place; return (left_idx, right_idx) when it splits."""
        if (
            len(idx) < 2 * min_leaf
            or (max_depth is not None and depth >= max_depth)
            or node_impurity(idx) <= _EPS
        ):
            node["leaf"] = leaf_value(idx)
            return None
        feats = rng.choice(n_features, size=min(n_candidates, n_features), replace=False)
        best = None
        for f in feats:
            split = (
                _best_split_gini(X[idx, f], target[idx], min_leaf)
                if classification
                else _best_split_mse(X[idx, f], target[idx], min_leaf)
            )
            if split is None:
                continue
            score, threshold = split
            if best is None or score < best[0]:
                best = (score, int(f), threshold)
        if best is None:
            node["leaf"] = leaf_value(idx)
            return None
        _, f, threshold = best
        left = idx[X[idx, f] <= threshold]
        right = idx[X[idx, f] > threshold]
        if len(left) == 0 or len(right) == 0:
            node["leaf"] = leaf_value(idx)
            return None
        node["feature"] = f
        node["threshold"] = threshold
        node["left"] = {}
        node["right"] = {}
        return left, right

    # explicit stack: unlimited depth must not hit the recursion limit
    root: dict = {}
    stack = [(np.arange(len(X)), 0, root)]
    while stack:
        idx, depth, node = stack.pop()
        children = expand(idx, depth, node)
        if children is not None:
            left, right = children
            # push right first so the left subtree expands first (stable rng order)
            stack.append((right, depth + 1, node["right"]))
            stack.append((left, depth + 1, node["left"]))
    return root


def _tree_predict(node: dict, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X), dtype=float)
    stack = [(node, np.arange(len(X)))]
    while stack:
        nd, idx = stack.pop()
        if len(idx) == 0:
            continue
        if "leaf" in nd:
            out[idx] = nd["leaf"]
            continue
        go_left = X[idx, nd["feature"]] <= nd["threshold"]
        stack.append((nd["left"], idx[go_left]))
        stack.append((nd["right"], idx[~go_left]))
    return out


def _fill_medians(X: np.ndarray, medians: Optional[list[float]]) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if medians is None:
        return X
    nan = np.isnan(X)
    if nan.any():
        X = X.copy()
        X[nan] = np.broadcast_to(np.asarray(medians), X.shape)[nan]
    return X


# ---------------------------------------------------------------------------
# Ensembles
# ---------------------------------------------------------------------------

DEFAULT_FOREST_PARAMS = {
    "n_trees": 100,
    "max_depth": 8,
    "min_leaf": 1,
    "feature_subsample": "sqrt",
}

DEFAULT_BOOST_PARAMS = {
    "n_trees": 100,
    "max_depth": 4,
    "min_leaf": 1,
    "feature_subsample": None,
    "learning_rate": 0.1,
}

# Hyperparameter grid used when no explicit grid is supplied.
DEFAULT_GRID_RF = {
    "n_trees": [100, 300],
    "max_depth": [4, 8, None],
    "min_leaf": [1, 5],
}
DEFAULT_GRID_GBT = {
    "n_trees": [100, 300],
    "max_depth": [4, 8, None],
    "min_leaf": [1, 5],
    "learning_rate": [0.1, 0.3],
}


def _check_training_set(data: LabeledDataset) -> None:
    if np.isnan(data.X).any():
        raise ValueError("training matrix contains NaN; impute invalid features first")
    if len(np.unique(data.y)) < 2:
        raise ValueError("training set must contain both classes")


@dataclass
class ForestModel:
    """Bagged classification trees voting by majority."""

    params: dict
    trees: list[dict] = field(default_factory=list)
    feature_names: tuple[str, ...] = ()
    medians: Optional[list[float]] = None
    seed: int = 0

    family = "random_forest"

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = _fill_medians(X, self.medians)
        votes = np.zeros(len(X))
        for tree in self.trees:
            votes += (_tree_predict(tree, X) >= 0.5).astype(float)
        return votes / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(int)

    def to_json(self) -> str:
        return json.dumps(
            {
                "format": MODEL_FORMAT,
                "family": self.family,
                "params": self.params,
                "seed": self.seed,
                "feature_names": list(self.feature_names),
                "medians": self.medians,
                "trees": self.trees,
            }
        )


@dataclass
class BoostModel:
    """Stagewise regression trees on the logistic gradient; sigmoid output."""

    params: dict
    trees: list[dict] = field(default_factory=list)
    base_score: float = 0.0
    feature_names: tuple[str, ...] = ()
    medians: Optional[list[float]] = None
    seed: int = 0

    family = "gradient_boosting"

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = _fill_medians(X, self.medians)
        f = np.full(len(X), self.base_score)
        lr = self.params["learning_rate"]
        for tree in self.trees:
            f += lr * _tree_predict(tree, X)
        return f

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return 1.0 / (1.0 + np.exp(-self.decision_function(X)))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(int)

    def to_json(self) -> str:
        return json.dumps(
            {
                "format": MODEL_FORMAT,
                "family": self.family,
                "params": self.params,
                "seed": self.seed,
                "base_score": self.base_score,
                "feature_names": list(self.feature_names),
                "medians": self.medians,
                "trees": self.trees,
            }
        )


def model_from_json(text: str) -> ForestModel | BoostModel:
    doc = json.loads(text)
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"unsupported model format {doc.get('format')!r}")
    common = dict(
        params=doc["params"],
        trees=doc["trees"],
        feature_names=tuple(doc["feature_names"]),
        medians=doc["medians"],
        seed=doc["seed"],
    )
    if doc["family"] == "random_forest":
        return ForestModel(**common)
    if doc["family"] == "gradient_boosting":
        return BoostModel(base_score=doc["base_score"], **common)
    raise ValueError(f"unknown model family {doc['family']!r}")


def train_random_forest(
    train: LabeledDataset, params: Optional[dict] = None, seed: int = 0
) -> ForestModel:
    """Train a random forest: bootstrap rows, Gini splits, majority vote."""
    _check_training_set(train)
    p = {**DEFAULT_FOREST_PARAMS, **(params or {})}
    n_cand = _n_candidates(p["feature_subsample"], train.X.shape[1])
    streams = np.random.SeedSequence(seed).spawn(p["n_trees"])
    trees = []
    n = len(train)
    y = train.y.astype(float)
    for ss in streams:
        rng = np.random.default_rng(ss)
        boot = rng.integers(0, n, size=n)
        trees.append(
            _build_tree(
                train.X[boot],
                y[boot],
                None,
                rng,
                p["max_depth"],
                p["min_leaf"],
                n_cand,
                classification=True,
            )
        )
    return ForestModel(params=p, trees=trees, feature_names=train.feature_names, seed=seed)


def train_gbt(
    train: LabeledDataset, params: Optional[dict] = None, seed: int = 0
) -> BoostModel:
    """Train gradient-boosted trees with logistic loss and Newton leaf values."""
    _check_training_set(train)
    p = {**DEFAULT_BOOST_PARAMS, **(params or {})}
    n_cand = _n_candidates(p["feature_subsample"], train.X.shape[1])
    streams = np.random.SeedSequence(seed).spawn(p["n_trees"])
    y = train.y.astype(float)
    p0 = min(max(y.mean(), 1e-6), 1 - 1e-6)
    base = math.log(p0 / (1 - p0))
    f = np.full(len(train), base)
    trees = []
    for ss in streams:
        rng = np.random.default_rng(ss)
        prob = 1.0 / (1.0 + np.exp(-f))
        grad = y - prob
        hess = prob * (1 - prob)
        tree = _build_tree(
            train.X,
            grad,
            hess,
            rng,
            p["max_depth"],
            p["min_leaf"],
            n_cand,
            classification=False,
        )
        trees.append(tree)
        f = f + p["learning_rate"] * _tree_predict(tree, train.X)
    return BoostModel(
        params=p, trees=trees, base_score=base, feature_names=train.feature_names, seed=seed
    )


def train_model(
    family: str, train: LabeledDataset, params: Optional[dict] = None, seed: int = 0
) -> ForestModel | BoostModel:
    if family == "rf":
        return train_random_forest(train, params, seed)
    if family == "gbt":
        return train_gbt(train, params, seed)
    raise ValueError(f"unknown model family {family!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def metrics(predictions: Sequence[int], labels: Sequence[int]) -> tuple[float, float, float]:
    """(accuracy, precision, recall) with disease as the positive class.

    Precision and recall fall back to 0.0 when their denominator is zero.
    """
    pred = np.asarray(predictions, dtype=int)
    lab = np.asarray(labels, dtype=int)
    if pred.shape != lab.shape or pred.ndim != 1 or len(pred) < 1:
        raise ValueError("predictions and labels must be equal-length non-empty 1D")
    tp = int(np.sum((pred == 1) & (lab == 1)))
    tn = int(np.sum((pred == 0) & (lab == 0)))
    fp = int(np.sum((pred == 1) & (lab == 0)))
    fn = int(np.sum((pred == 0) & (lab == 1)))
    accuracy = (tp + tn) / len(pred)
    precision = tp / (tp + fp) if (tp + fp) > 0 else 0.0
    recall = tp / (tp + fn) if (tp + fn) > 0 else 0.0
    return accuracy, precision, recall


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Rank-based area under the ROC curve; tied scores contribute one half."""
    s = np.asarray(scores, dtype=float)
    lab = np.asarray(labels, dtype=int)
    if s.shape != lab.shape or s.ndim != 1:
        raise ValueError("scores and labels must be equal-length 1D")
    n_pos = int(np.sum(lab == 1))
    n_neg = int(np.sum(lab == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUROC needs both classes present")
    order = np.argsort(s, kind="stable")
    ranks = np.empty(len(s), dtype=float)
    sorted_s = s[order]
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and sorted_s[j + 1] == sorted_s[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # average 1-based rank
        i = j + 1
    rank_sum_pos = float(ranks[lab == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


# ---------------------------------------------------------------------------
# Grid search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridSearchResult:
    best_params: dict
    best_mean_accuracy: float
    table: list[dict]  # one row per grid point: params, fold accuracies, mean


def expand_grid(grid: dict[str, list]) -> list[dict]:
    """Expand a {param: values} mapping into the ordered list of combinations."""
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in product(*(grid[k] for k in keys))]


def grid_search(
    family: str,
    grid: dict[str, list] | list[dict],
    train: LabeledDataset,
    folds: int = 5,
    seed: int = 0,
) -> GridSearchResult:
    """Pick hyperparameters by k-fold cross-validated accuracy.

    Ties break toward fewer trees, then shallower depth, then grid order.
    """
    points = expand_grid(grid) if isinstance(grid, dict) else list(grid)
    if not points:
        raise ValueError("empty grid")
    if folds < 2 or len(train) // folds < 2:
        raise ValueError("each fold needs at least 2 samples")
    _check_training_set(train)
    rng = np.random.default_rng(seed)
    order = np.arange(len(train))
    rng.shuffle(order)
    fold_ids = [order[f::folds] for f in range(folds)]

    table = []
    for pi, params in enumerate(points):
        accs = []
        for f, held in enumerate(fold_ids):
            fit_idx = np.setdiff1d(order, held)
            fit_set = train.take(fit_idx.tolist())
            val_set = train.take(held.tolist())
            if len(np.unique(fit_set.y)) < 2:
                raise ValueError("a CV fold lost one of the classes")
            tree_seed = int(
                np.random.SeedSequence([seed, pi, f]).generate_state(1)[0] % (2**31)
            )
            model = train_model(family, fit_set, params, seed=tree_seed)
            acc, _, _ = metrics(model.predict(val_set.X), val_set.y)
            accs.append(acc)
        table.append({"params": params, "fold_accuracies": accs, "mean_accuracy": float(np.mean(accs))})

    def tie_key(i: int) -> tuple:
        row = table[i]
        p = row["params"]
        depth = p.get("max_depth")
        return (
            -row["mean_accuracy"],
            p.get("n_trees", 0),
            math.inf if depth is None else depth,
            i,
        )

    best_i = min(range(len(table)), key=tie_key)
    return GridSearchResult(
        best_params=table[best_i]["params"],
        best_mean_accuracy=table[best_i]["mean_accuracy"],
        table=table,
    )


# ---------------------------------------------------------------------------
# End-to-end pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassificationReport:
    family: str
    accuracy: float
    precision: float
    recall: float
    auroc: float
    n_train: int
    n_test: int
    best_params: dict


def classify_pipeline(
    data: LabeledDataset,
    family: str = "rf",
    grid: Optional[dict[str, list] | list[dict]] = None,
    seed: int = 0,
    split_fraction: float = 0.8,
    folds: int = 5,
) -> tuple[ClassificationReport, ForestModel | BoostModel, GridSearchResult | None]:
    """Split, impute, augment the training half, optionally grid-search, train, test."""
    split_ss, grid_ss, train_ss = np.random.SeedSequence(seed).spawn(3)
    split_seed = int(split_ss.generate_state(1)[0] % (2**31))
    train_part, test_part = split_train_test(data, split_fraction, seed=split_seed)

    imputer = Imputer().fit(train_part.X)
    train_imp = LabeledDataset(
        train_part.ids, imputer.transform(train_part.X), train_part.y, train_part.feature_names
    )
    test_imp = LabeledDataset(
        test_part.ids, imputer.transform(test_part.X), test_part.y, test_part.feature_names
    )
    train_aug = augment_swap_lr(train_imp)

    search: Optional[GridSearchResult] = None
    params: Optional[dict] = None
    if grid is not None:
        grid_seed = int(grid_ss.generate_state(1)[0] % (2**31))
        search = grid_search(family, grid, train_aug, folds=folds, seed=grid_seed)
        params = search.best_params

    model_seed = int(train_ss.generate_state(1)[0] % (2**31))
    model = train_model(family, train_aug, params, seed=model_seed)
    model.medians = [float(v) for v in imputer.medians]

    scores = model.predict_proba(test_imp.X)
    preds = (scores >= 0.5).astype(int)
    acc, prec, rec = metrics(preds, test_imp.y)
    auc = auroc(scores, test_imp.y)
    report = ClassificationReport(
        family=model.family,
        accuracy=acc,
        precision=prec,
        recall=rec,
        auroc=auc,
        n_train=len(train_aug),
        n_test=len(test_imp),
        best_params=model.params,
    )
    return report, model, search


def dataset_from_vectors(
    ids: Iterable[str], vectors: Iterable[np.ndarray], labels: Iterable[int]
) -> LabeledDataset:
    """Assemble a registry-ordered dataset from measurement vectors."""
    return LabeledDataset(
        ids=tuple(ids),
        X=np.vstack(list(vectors)),
        y=np.array(list(labels), dtype=int),
        feature_names=tuple(feature_registry()),
    )
