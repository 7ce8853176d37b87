"""Random forest regression on a shared design matrix."""

import json
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .._validation import check_column_names, check_matrix
from ..exceptions import DegenerateInputError
from ..preprocess import INTERCEPT, DesignMatrix
from ._tree import UNLIMITED, apply_tree, grow_tree, predict_tree

FOREST_FORMAT = "hedonic-rent-forest"
FOREST_VERSION = 1


@dataclass(frozen=True)
class ForestParams:
    """Forest hyperparameters.

    ``max_depth=None`` grows trees until the other stopping rules bite.
    ``max_features=None`` means ceil(p/3) of the p candidate features.
    """

    n_trees: int = 200
    max_depth: int = None
    min_samples_leaf: int = 1
    min_samples_split: int = 2
    max_features: int = None
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0 or None")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError("max_features must be >= 1")

    def resolved_max_features(self, p):
        m = math.ceil(p / 3) if self.max_features is None else self.max_features
        if not 1 <= m <= p:
            raise ValueError(f"max_features must lie in [1, {p}], got {m}")
        return m


@dataclass(frozen=True, eq=False)
class Tree:
    """One fitted tree as flat preorder arrays (``feature == -1``: leaf)."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    count: np.ndarray

    @property
    def n_nodes(self):
        return int(self.feature.size)

    def apply(self, X):
        return apply_tree(self.feature, self.threshold, self.left, self.right, X)

    def predict(self, X):
        return predict_tree(self.feature, self.threshold, self.left, self.right, self.value, X)


@dataclass(frozen=True, eq=False)
class ForestFit:
    trees: tuple
    params: ForestParams
    column_names: tuple
    training_target_range: tuple
    importances: np.ndarray

    @property
    def n_trees(self):
        return len(self.trees)

    def save(self, path):
        save_forest(self, path)


def tree_seed_stream(seed, tree_index):
    """Per-tree generator; depends only on (seed, tree_index)."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(tree_index,)))


def _candidate_matrix(design_or_X, column_names):
    names = tuple(column_names)
    if not names or names[0] != INTERCEPT:
        raise ValueError("first design column must be the intercept")
    X = np.ascontiguousarray(design_or_X[:, 1:], dtype=np.float64)
    return X


def presort_rows(X):
    """Stable per-feature row order, shape ``(p, n)``; shared by all trees."""
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T)


def _grow_one(X, y, row_order, params, max_features, t):
    rng = tree_seed_stream(params.seed, t)
    n = y.size
    if params.bootstrap:
        sample = rng.integers(0, n, size=n)
    else:
        sample = np.arange(n)
    tree_seed = int(rng.integers(0, 2**63 - 1))
    max_depth = UNLIMITED if params.max_depth is None else int(params.max_depth)
    feature, threshold, left, right, value, count, gain = grow_tree(
        X,
        y,
        sample.astype(np.int64),
        row_order,
        max_depth,
        int(params.min_samples_split),
        int(params.min_samples_leaf),
        int(max_features),
        tree_seed,
    )
    return Tree(feature, threshold, left, right, value, count), gain


def fit_forest(design, params=ForestParams(), threads=1):
    """Grow ``params.n_trees`` bootstrap trees on ``design``.

    The intercept column is never a split candidate. Trees are grown on a
    thread pool; each tree's randomness is derived from ``(seed, index)``,
    so results do not depend on ``threads``. Importances are summed
    decreases in squared error per feature, normalized to one; the intercept
    slot is always zero.
    """
    if design.n < 2:
        raise DegenerateInputError("need at least 2 rows")
    X = _candidate_matrix(design.X, design.column_names)
    y = np.ascontiguousarray(design.y, dtype=np.float64)
    p = X.shape[1]
    max_features = params.resolved_max_features(p)
    row_order = presort_rows(X)

    def grow(t):
        return _grow_one(X, y, row_order, params, max_features, t)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            grown = list(pool.map(grow, range(params.n_trees)))
    else:
        grown = [grow(t) for t in range(params.n_trees)]

    trees = tuple(t for t, _ in grown)
    total_gain = np.zeros(p)
    for _, gain in grown:
        total_gain += gain
    importances = np.zeros(p + 1)
    if total_gain.sum() > 0:
        importances[1:] = total_gain / total_gain.sum()
    else:
        warnings.warn("forest made no splits; all importances are zero", RuntimeWarning, stacklevel=2)
    return ForestFit(
        trees=trees,
        params=params,
        column_names=tuple(design.column_names),
        training_target_range=(float(y.min()), float(y.max())),
        importances=importances,
    )


def _rows(fit, X_new, column_names=None):
    if isinstance(X_new, DesignMatrix):
        check_column_names(X_new.column_names, fit.column_names)
        X = X_new.X
    else:
        if column_names is not None:
            check_column_names(column_names, fit.column_names)
        X = check_matrix(X_new, n_columns=len(fit.column_names), name="X_new")
    return np.ascontiguousarray(X[:, 1:])


def tree_outputs(fit, X_new, column_names=None):
    """Per-tree predictions, shape ``(n_trees, n_rows)``."""
    X = _rows(fit, X_new, column_names)
    return np.stack([tree.predict(X) for tree in fit.trees])


def predict_forest(fit, X_new, column_names=None):
    """Mean of the tree outputs for each row of ``X_new``.

    ``X_new`` is a DesignMatrix or an array including the intercept column.
    """
    outputs = tree_outputs(fit, X_new, column_names)
    # summing in sorted order makes the mean independent of tree order
    outputs.sort(axis=0)
    pred = outputs.sum(axis=0) / fit.n_trees
    lo, hi = fit.training_target_range
    return np.clip(pred, lo, hi)


def apply_forest(fit, X_new, column_names=None):
    """Leaf index per (row, tree), shape ``(n_rows, n_trees)``."""
    X = _rows(fit, X_new, column_names)
    return np.column_stack([tree.apply(X) for tree in fit.trees])


def variable_importance(fit):
    """``(name, importance)`` pairs, most important first.

    Ties keep design-column order. The intercept is omitted.
    """
    names = fit.column_names[1:]
    imp = fit.importances[1:]
    order = sorted(range(len(names)), key=lambda j: (-imp[j], j))
    return [(names[j], float(imp[j])) for j in order]


def save_forest(fit, path):
    """Write an ``.npz`` archive: JSON header plus concatenated preorder node arrays."""
    header = {
        "format": FOREST_FORMAT,
        "version": FOREST_VERSION,
        "params": asdict(fit.params),
        "column_names": list(fit.column_names),
        "training_target_range": list(fit.training_target_range),
    }
    sizes = np.array([t.n_nodes for t in fit.trees], dtype=np.int64)
    arrays = {
        name: np.concatenate([getattr(t, name) for t in fit.trees])
        for name in ("feature", "threshold", "left", "right", "value", "count")
    }
    with open(path, "wb") as fh:
        np.savez(
            fh,
            header=np.array(json.dumps(header, sort_keys=True)),
            tree_sizes=sizes,
            importances=fit.importances,
            **arrays,
        )


def load_forest(path):
    with np.load(path, allow_pickle=False) as data:
        header = json.loads(str(data["header"]))
        if header.get("format") != FOREST_FORMAT:
            raise ValueError(f"{path} is not a forest file")
        if header["version"] != FOREST_VERSION:
            raise ValueError(f"unsupported forest file version {header['version']}")
        bounds = np.concatenate([[0], np.cumsum(data["tree_sizes"])])
        fields = {k: data[k] for k in ("feature", "threshold", "left", "right", "value", "count")}
        trees = tuple(
            Tree(**{k: v[lo:hi].copy() for k, v in fields.items()})
            for lo, hi in zip(bounds[:-1], bounds[1:])
        )
        importances = data["importances"].copy()
    return ForestFit(
        trees=trees,
        params=ForestParams(**header["params"]),
        column_names=tuple(header["column_names"]),
        training_target_range=tuple(header["training_target_range"]),
        importances=importances,
    )


class RentForestRegressor(RegressorMixin, BaseEstimator):
    """scikit-learn style random forest regressor.

    Accepts a raw feature matrix (no intercept column) or a
    :class:`DesignMatrix` passed as ``X`` with ``y=None``.
    """

    def __init__(self, n_trees=200, max_depth=None, min_samples_leaf=1, min_samples_split=2,
                 max_features=None, bootstrap=True, seed=0, threads=1):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.seed = seed
        self.threads = threads

    def _params(self):
        return ForestParams(
            n_trees=self.n_trees,
            max_depth=self.max_depth,
            min_samples_leaf=self.min_samples_leaf,
            min_samples_split=self.min_samples_split,
            max_features=self.max_features,
            bootstrap=self.bootstrap,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        if isinstance(X, DesignMatrix):
            design = X
        else:
            design = DesignMatrix.from_arrays(check_matrix(X), y)
        self.fit_ = fit_forest(design, self._params(), threads=self.threads)
        self.n_features_in_ = design.p - 1
        self.feature_importances_ = self.fit_.importances[1:]
        return self

    def _design_array(self, X):
        if isinstance(X, DesignMatrix):
            return X
        X = check_matrix(X, n_columns=self.n_features_in_)
        return np.column_stack([np.ones(X.shape[0]), X])

    def predict(self, X):
        check_is_fitted(self, "fit_")
        return predict_forest(self.fit_, self._design_array(X))

    def apply(self, X):
        check_is_fitted(self, "fit_")
        return apply_forest(self.fit_, self._design_array(X))
