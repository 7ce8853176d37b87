"""Out-of-sample fit metrics and residual summaries."""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .._validation import as_float_column, check_paired
from ..exceptions import DegenerateInputError
from ..ols import fit_ols
from ..preprocess import DesignMatrix


@dataclass(frozen=True)
class Metrics:
    n: int
    mse: float
    rmse: float
    r2: float
    residual_mean: float
    residual_std: float

    def as_dict(self):
        return dict(self.__dict__)


def evaluate(predictions, observations):
    """Residual metrics with ``residual = observed - predicted``.

    ``r2`` can be negative out of sample; it is NaN (with a warning) when the
    observations have zero variance. ``residual_std`` divides by n.
    """
    pred, obs = check_paired(predictions, observations)
    if pred.size == 0:
        raise DegenerateInputError("evaluate needs at least one pair")
    resid = obs - pred
    mse = float(np.mean(resid**2))
    centered = obs - obs.mean()
    tss = float(centered @ centered)
    if tss > 0:
        r2 = 1.0 - float(resid @ resid) / tss
    else:
        warnings.warn("observations have zero variance; r2 undefined", RuntimeWarning, stacklevel=2)
        r2 = float("nan")
    return Metrics(
        n=int(pred.size),
        mse=mse,
        rmse=math.sqrt(mse),
        r2=r2,
        residual_mean=float(np.mean(resid)),
        residual_std=float(np.std(resid)),
    )


@dataclass(frozen=True, eq=False)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def n(self):
        return int(self.counts.sum())


def residual_histogram(residuals, n_bins=50):
    """Equal-width bins spanning [min, max]; the max lands in the last bin."""
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    residuals = as_float_column(residuals, "residuals")
    lo, hi = float(residuals.min()), float(residuals.max())
    if lo == hi:
        edges = np.array([lo, hi], dtype=np.float64)
        counts = np.array([residuals.size], dtype=np.int64)
        if n_bins > 1:
            edges = np.linspace(lo - 0.5, hi + 0.5, n_bins + 1)
            counts = np.histogram(residuals, bins=edges)[0].astype(np.int64)
        return Histogram(edges, counts)
    counts, edges = np.histogram(residuals, bins=n_bins, range=(lo, hi))
    return Histogram(edges, counts.astype(np.int64))


def drift_slope(residuals, predictions):
    """Slope of residuals regressed on predictions (with intercept)."""
    resid, pred = check_paired(residuals, predictions, ("residuals", "predictions"))
    if resid.size < 3:
        raise DegenerateInputError("drift_slope needs at least 3 points")
    if np.all(pred == pred[0]):
        raise DegenerateInputError("predictions are constant; drift slope undefined")
    design = DesignMatrix.from_arrays(pred, resid, ["predicted"])
    return float(fit_ols(design).beta[1])
