"""Outlier clipping, log transforms and the shared design matrix."""

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_float_column
from .dataset import ListingTable
from .exceptions import DegenerateInputError, MissingColumnError
from .netaccess.features import DEFAULT_FEATURE_SPEC

INTERCEPT = "intercept"
LOG_OFFSET = 1.0
DEFAULT_TARGET = "rent_sqft"
DEFAULT_FEATURES = ("res_sqft_per_unit", *DEFAULT_FEATURE_SPEC.names)
TRANSFORM_FORMAT = "hedonic-rent-transform"
TRANSFORM_VERSION = 1


def percentile_linear(values, q):
    """Quantile ``q`` in (0, 1) by linear interpolation between order statistics."""
    return float(np.quantile(np.asarray(values, dtype=np.float64), q, method="linear"))


def clip_upper(values, percentile=0.99, threshold=None):
    """Recode values above the ``percentile`` quantile to that quantile.

    Returns ``(clipped, threshold)``. Pass ``threshold`` to reuse a frozen
    value instead of computing one from ``values``.
    """
    values = as_float_column(values)
    if threshold is None:
        if not 0.0 < percentile < 1.0:
            raise ValueError(f"percentile must lie in (0, 1), got {percentile}")
        threshold = percentile_linear(values, percentile)
    return np.minimum(values, threshold), float(threshold)


def log1p_column(values):
    values = as_float_column(values)
    if np.any(values < 0):
        raise ValueError("log1p_column requires nonnegative input")
    return np.log1p(values)


@dataclass(frozen=True)
class TransformRecord:
    """Everything needed to rebuild a design matrix from raw columns."""

    target: str
    features: tuple
    clip_percentile: float
    clip_thresholds: dict = field(default_factory=dict)
    log_offset: float = LOG_OFFSET

    @property
    def column_names(self):
        return (INTERCEPT, *self.features)

    @property
    def log_columns(self):
        return (self.target, *self.features)

    def to_dict(self):
        return {
            "format": TRANSFORM_FORMAT,
            "version": TRANSFORM_VERSION,
            "target": self.target,
            "features": list(self.features),
            "log_columns": list(self.log_columns),
            "log_offset": self.log_offset,
            "clip_percentile": self.clip_percentile,
            "clip_thresholds": {k: float(v) for k, v in self.clip_thresholds.items()},
        }

    @classmethod
    def from_dict(cls, data):
        if data.get("format") != TRANSFORM_FORMAT:
            raise ValueError("not a transform record")
        return cls(
            target=data["target"],
            features=tuple(data["features"]),
            clip_percentile=float(data["clip_percentile"]),
            clip_thresholds={k: float(v) for k, v in data["clip_thresholds"].items()},
            log_offset=float(data["log_offset"]),
        )

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def inverse_target(self, y):
        """Map transformed targets back to ``rent_sqft`` units."""
        return np.expm1(np.asarray(y, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Model inputs shared by OLS and the forest.

    ``X`` has the intercept in column 0. ``ids`` are the listing ids of the
    rows kept; ``n_dropped`` counts rows lost to non-finite values.
    """

    X: np.ndarray
    y: np.ndarray
    column_names: tuple
    record: TransformRecord = None
    ids: np.ndarray = None
    n_dropped: int = 0

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=np.float64)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError(f"shape mismatch: X {X.shape}, y {y.shape}")
        if len(self.column_names) != X.shape[1]:
            raise ValueError("column_names length does not match X")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise DegenerateInputError("design matrix contains non-finite entries")
        if X.shape[1] < 2 or self.column_names[0] != INTERCEPT or np.any(X[:, 0] != 1.0):
            raise ValueError("design matrix needs an all-ones 'intercept' column 0 and p >= 2")
        if X.shape[0] <= X.shape[1]:
            raise DegenerateInputError(f"need n > p, got n={X.shape[0]}, p={X.shape[1]}")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_names", tuple(self.column_names))
        if self.ids is not None:
            ids = np.asarray(self.ids, dtype=np.int64)
            ids.flags.writeable = False
            object.__setattr__(self, "ids", ids)

    @classmethod
    def from_arrays(cls, X, y, feature_names=None):
        """Design from a raw feature matrix; prepends the intercept column."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if feature_names is None:
            feature_names = [f"x{j}" for j in range(X.shape[1])]
        X = np.column_stack([np.ones(X.shape[0]), X])
        return cls(X, y, (INTERCEPT, *feature_names))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def features(self):
        """``X`` without the intercept column."""
        return self.X[:, 1:]


def fit_transform_record(table, target=DEFAULT_TARGET, features=DEFAULT_FEATURES, clip_columns=None,
                         percentile=0.99):
    """Compute clip thresholds for ``table`` and freeze them in a record.

    ``clip_columns`` defaults to the table's accessibility (feature) columns
    among ``features``; the target and unit attributes are never clipped.
    """
    features = tuple(features)
    missing = [c for c in (target, *features) if c not in table.columns]
    if missing:
        raise MissingColumnError(missing, "listing table")
    if target in features:
        raise ValueError(f"target {target!r} listed among features")
    if clip_columns is None:
        clip_columns = [c for c in features if c in table.feature_columns]
    thresholds = {}
    for name in clip_columns:
        values = table.column(name)
        finite = values[np.isfinite(values)]
        if finite.size == 0:
            raise DegenerateInputError(f"column {name!r} has no finite values")
        thresholds[name] = percentile_linear(finite, percentile)
    return TransformRecord(target, features, float(percentile), thresholds)


def apply_transform(table, record):
    """Build a design matrix from ``table`` with a frozen transform record."""
    columns = []
    valid = np.ones(len(table), dtype=bool)
    for name in record.log_columns:
        values = table.column(name)
        if name in record.clip_thresholds:
            values, _ = clip_upper(values, threshold=record.clip_thresholds[name])
        valid &= np.isfinite(values) & (values >= 0)
        columns.append(values)
    n_dropped = int((~valid).sum())
    logged = [log1p_column(c[valid]) for c in columns]
    y = logged[0]
    X = np.column_stack([np.ones(y.size), *logged[1:]])
    return DesignMatrix(X, y, record.column_names, record, table.ids[valid], n_dropped)


def build_design(table, target=DEFAULT_TARGET, features=DEFAULT_FEATURES, clip_columns=None, percentile=0.99):
    """Clip accessibility columns, log1p everything, prepend the intercept."""
    record = fit_transform_record(table, target, features, clip_columns, percentile)
    return apply_transform(table, record)


class HedonicPreprocessor(TransformerMixin, BaseEstimator):
    """Learns clip thresholds on one table and applies them to others.

    ``transform`` returns the ``X`` array (intercept included);
    ``transform_design`` returns the full :class:`DesignMatrix`.
    """

    def __init__(self, target=DEFAULT_TARGET, features=DEFAULT_FEATURES, clip_percentile=0.99, clip_columns=None):
        self.target = target
        self.features = features
        self.clip_percentile = clip_percentile
        self.clip_columns = clip_columns

    def fit(self, table, y=None):
        if not isinstance(table, ListingTable):
            raise TypeError("HedonicPreprocessor expects a ListingTable")
        self.record_ = fit_transform_record(
            table, self.target, self.features, self.clip_columns, self.clip_percentile
        )
        return self

    def transform_design(self, table):
        check_is_fitted(self, "record_")
        return apply_transform(table, self.record_)

    def transform(self, table):
        return self.transform_design(table).X

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "record_")
        return np.asarray(self.record_.column_names, dtype=object)
