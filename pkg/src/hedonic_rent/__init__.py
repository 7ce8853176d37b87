"""Hedonic rent models on network accessibility features.

Pipeline: listings and street networks in, accessibility aggregates,
clipped log design matrix, OLS and random forest fits, out-of-sample
diagnostics out.
"""

import numba

try:
    from numba.np.ufunc import omppool  # noqa: F401

    # the bundled TBB is often too old; OpenMP avoids a warning on first use
    numba.config.THREADING_LAYER = "omp"
except ImportError:
    pass

from .dataset import ListingTable, SplitSpec, StatsProfile, load_listings, profile, split_dataset
from .diagnostics import EvaluationReport, build_report, drift_slope, emit_report, evaluate, morans_i
from .forest import ForestFit, ForestParams, RentForestRegressor, fit_forest, predict_forest
from .netaccess import Network, build_features, load_network, range_aggregate
from .ols import OLSRegressor, OlsFit, fit_ols, predict_ols
from .preprocess import DesignMatrix, HedonicPreprocessor, build_design, clip_upper
from .synth import RegionSpec, generate_synthetic_region

__version__ = "0.1.0"

__all__ = [
    "DesignMatrix",
    "EvaluationReport",
    "ForestFit",
    "ForestParams",
    "HedonicPreprocessor",
    "ListingTable",
    "Network",
    "OLSRegressor",
    "OlsFit",
    "RegionSpec",
    "RentForestRegressor",
    "SplitSpec",
    "StatsProfile",
    "build_design",
    "build_features",
    "build_report",
    "clip_upper",
    "drift_slope",
    "emit_report",
    "evaluate",
    "fit_forest",
    "fit_ols",
    "generate_synthetic_region",
    "load_listings",
    "load_network",
    "morans_i",
    "predict_forest",
    "predict_ols",
    "profile",
    "range_aggregate",
    "split_dataset",
]
