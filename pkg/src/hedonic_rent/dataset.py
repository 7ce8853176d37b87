"""Listing tables: CSV ingest, train/test split, and descriptive profiles."""

import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .exceptions import (
    EmptyTableError,
    ListingFileNotFoundError,
    MissingColumnError,
    NoValidRowsError,
)

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("id", "lat", "lon", "rent", "sqft")
# Derived per-listing columns. The unit's own floor area doubles as the
# ``res_sqft_per_unit`` structural variable.
DERIVED_COLUMNS = ("rent_sqft", "res_sqft_per_unit")
BASE_COLUMNS = REQUIRED_COLUMNS + DERIVED_COLUMNS
PROFILE_STATS = ("count", "mean", "std", "min", "25%", "50%", "75%", "max")


@dataclass(frozen=True)
class LoadSummary:
    rows_read: int
    rows_kept: int
    dropped: dict = field(default_factory=dict)

    @property
    def rows_dropped(self):
        return self.rows_read - self.rows_kept

    def to_text(self):
        lines = [
            "[load_summary]",
            f"rows_read = {self.rows_read}",
            f"rows_kept = {self.rows_kept}",
            f"rows_dropped = {self.rows_dropped}",
        ]
        for reason, count in sorted(self.dropped.items()):
            lines.append(f"dropped.{reason} = {count}")
        return "\n".join(lines)


class ListingTable:
    """Point observations of asking rents plus aligned feature columns.

    The underlying frame always carries ``id, lat, lon, rent, sqft`` and the
    derived ``rent_sqft`` and ``res_sqft_per_unit`` columns. Feature columns
    (accessibility variables) follow in insertion order. Instances are treated
    as immutable: every accessor hands out copies.
    """

    def __init__(self, frame, feature_columns=(), load_summary=None):
        frame = frame.reset_index(drop=True)
        missing = [c for c in BASE_COLUMNS if c not in frame.columns]
        if missing:
            raise MissingColumnError(missing, "listing table")
        feature_columns = tuple(feature_columns)
        if len(set(feature_columns)) != len(feature_columns):
            raise ValueError(f"duplicate feature column names: {feature_columns}")
        if set(feature_columns) & set(BASE_COLUMNS):
            raise ValueError("feature columns may not shadow base columns")
        missing = [c for c in feature_columns if c not in frame.columns]
        if missing:
            raise MissingColumnError(missing, "listing table")
        if not frame["id"].is_unique:
            raise ValueError("listing ids must be unique")
        numeric = list(BASE_COLUMNS[1:]) + list(feature_columns)
        frame = pd.concat([frame[["id"]].astype(np.int64), frame[numeric].astype(np.float64)], axis=1)
        _check_listing_invariants(frame)
        self._frame = frame
        self.feature_columns = feature_columns
        self.load_summary = load_summary

    @classmethod
    def from_arrays(cls, id, lat, lon, rent, sqft, features=None):
        frame = pd.DataFrame(
            {
                "id": np.asarray(id, dtype=np.int64),
                "lat": np.asarray(lat, dtype=np.float64),
                "lon": np.asarray(lon, dtype=np.float64),
                "rent": np.asarray(rent, dtype=np.float64),
                "sqft": np.asarray(sqft, dtype=np.float64),
            }
        )
        frame["rent_sqft"] = frame["rent"] / frame["sqft"]
        frame["res_sqft_per_unit"] = frame["sqft"]
        names = []
        for name, values in (features or {}).items():
            frame[name] = np.asarray(values, dtype=np.float64)
            names.append(name)
        return cls(frame, names)

    @property
    def frame(self):
        return self._frame.copy()

    @property
    def columns(self):
        return list(self._frame.columns)

    @property
    def ids(self):
        return self._frame["id"].to_numpy(copy=True)

    def __len__(self):
        return len(self._frame)

    def __repr__(self):
        return f"ListingTable(n={len(self)}, features={list(self.feature_columns)})"

    def column(self, name):
        if name not in self._frame.columns:
            raise MissingColumnError([name], "listing table")
        return self._frame[name].to_numpy(dtype=np.float64, copy=True)

    def take(self, positions):
        """Rows at the given integer positions, in that order."""
        return ListingTable(self._frame.iloc[np.asarray(positions, dtype=np.int64)], self.feature_columns)

    def with_features(self, features):
        """Return a new table with extra feature columns appended."""
        frame = self._frame.copy()
        names = list(self.feature_columns)
        for name, values in features.items():
            if name in frame.columns:
                raise ValueError(f"column {name!r} already exists")
            values = np.asarray(values, dtype=np.float64)
            if values.shape != (len(frame),):
                raise ValueError(f"feature {name!r} has length {values.size}, expected {len(frame)}")
            frame[name] = values
            names.append(name)
        return ListingTable(frame, names)

    def to_csv(self, path):
        self._frame.to_csv(path, index=False, float_format="%.17g")


def _check_listing_invariants(frame):
    rent = frame["rent"].to_numpy(dtype=np.float64)
    sqft = frame["sqft"].to_numpy(dtype=np.float64)
    lat = frame["lat"].to_numpy(dtype=np.float64)
    lon = frame["lon"].to_numpy(dtype=np.float64)
    if np.any(~(rent > 0)) or np.any(~(sqft > 0)):
        raise ValueError("rent and sqft must be strictly positive")
    if np.any(np.abs(lat) > 90) or np.any(np.abs(lon) > 180):
        raise ValueError("lat/lon outside valid WGS84 range")


def load_listings(path):
    """Read a listings CSV, dropping invalid rows.

    Required header columns are ``id, lat, lon, rent, sqft``; any other
    numeric columns are carried along as features. Rows with a missing or
    non-finite value, a non-positive rent or sqft, or coordinates out of
    range are dropped and tallied in the returned table's ``load_summary``,
    which is also logged.
    """
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise ListingFileNotFoundError(f"listings file not found: {path}")
    raw = pd.read_csv(path, encoding="utf-8", float_precision="round_trip")
    missing = [c for c in REQUIRED_COLUMNS if c not in raw.columns]
    if missing:
        raise MissingColumnError(missing, path)
    extra = [c for c in raw.columns if c not in BASE_COLUMNS]

    frame = raw[list(REQUIRED_COLUMNS) + extra].apply(pd.to_numeric, errors="coerce")
    values = frame.to_numpy(dtype=np.float64)
    reasons = {}

    nonfinite = ~np.all(np.isfinite(values), axis=1)
    rent, sqft = frame["rent"].to_numpy(), frame["sqft"].to_numpy()
    nonpositive = ~nonfinite & ((rent <= 0) | (sqft <= 0))
    lat, lon = frame["lat"].to_numpy(), frame["lon"].to_numpy()
    bad_coords = ~nonfinite & ~nonpositive & ((np.abs(lat) > 90) | (np.abs(lon) > 180))
    ids = frame["id"].to_numpy()
    keep = ~(nonfinite | nonpositive | bad_coords)
    duplicate = np.zeros_like(keep)
    duplicate[keep] = pd.Series(ids[keep]).duplicated().to_numpy()
    keep &= ~duplicate
    for reason, mask in (
        ("non_finite", nonfinite),
        ("non_positive_rent_or_sqft", nonpositive),
        ("coordinates_out_of_range", bad_coords),
        ("duplicate_id", duplicate),
    ):
        if mask.any():
            reasons[reason] = int(mask.sum())

    summary = LoadSummary(rows_read=len(frame), rows_kept=int(keep.sum()), dropped=reasons)
    logger.info("%s\n%s", path, summary.to_text())
    if summary.rows_kept == 0:
        raise NoValidRowsError(f"no valid listing rows in {path}")

    kept = frame.loc[keep].copy()
    kept["id"] = kept["id"].astype(np.int64)
    kept["rent_sqft"] = kept["rent"] / kept["sqft"]
    kept["res_sqft_per_unit"] = kept["sqft"]
    return ListingTable(kept, extra, load_summary=summary)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 2.0 / 3.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def split_positions(n, spec):
    """Row positions (train, test) for a table of ``n`` rows, each sorted."""
    if n <= 0:
        raise EmptyTableError("cannot split an empty table")
    n_train = math.floor(spec.train_fraction * n)
    order = np.random.default_rng(spec.seed).permutation(n)
    return np.sort(order[:n_train]), np.sort(order[n_train:])


def split_dataset(table, spec=SplitSpec()):
    train, test = split_positions(len(table), spec)
    return table.take(train), table.take(test)


@dataclass(frozen=True)
class StatsProfile:
    """Descriptive statistics, one row per variable."""

    frame: pd.DataFrame

    def __getitem__(self, variable):
        return self.frame.loc[variable]

    def to_csv(self, path):
        self.frame.to_csv(path, index_label="variable", float_format="%.17g")


def describe_column(values):
    values = np.asarray(values, dtype=np.float64)
    p25, p50, p75 = np.percentile(values, [25, 50, 75], method="linear")
    # fsum is exactly rounded, so the moments do not depend on row order
    mean = math.fsum(values) / values.size
    if values.size > 1:
        std = math.sqrt(math.fsum((values - mean) ** 2) / (values.size - 1))
    else:
        std = 0.0
    return {
        "count": float(values.size),
        "mean": mean,
        "std": std,
        "min": float(np.min(values)),
        "25%": float(p25),
        "50%": float(p50),
        "75%": float(p75),
        "max": float(np.max(values)),
    }


def profile(table, columns=None):
    """Table-1 style profile: count, mean, sample std, min, quartiles, max.

    By default profiles ``rent_sqft``, ``res_sqft_per_unit`` and every
    feature column. Percentiles use linear interpolation between order
    statistics, the same rule as the clipping threshold.
    """
    if len(table) == 0:
        raise EmptyTableError("cannot profile an empty table")
    if columns is None:
        columns = ["rent_sqft", "res_sqft_per_unit", *table.feature_columns]
    rows = {name: describe_column(table.column(name)) for name in columns}
    frame = pd.DataFrame.from_dict(rows, orient="index", columns=list(PROFILE_STATS))
    return StatsProfile(frame)
