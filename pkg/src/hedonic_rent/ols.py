"""Ordinary least squares with classical (iid) inference."""

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_column_names, check_matrix
from .exceptions import DegenerateInputError, RankDeficiencyError
from .preprocess import DesignMatrix

RANK_TOLERANCE = 1e-10
OLS_FORMAT = "hedonic-rent-ols"
OLS_VERSION = 1


@dataclass(frozen=True, eq=False)
class OlsFit:
    beta: np.ndarray
    std_errors: np.ndarray
    t_stats: np.ndarray
    sigma2: float
    r2: float
    adj_r2: float
    mse: float
    rmse: float
    n: int
    p: int
    column_names: tuple

    def coefficient_table(self):
        return [
            {"name": name, "coef": float(b), "std_err": float(se), "t": float(t)}
            for name, b, se, t in zip(self.column_names, self.beta, self.std_errors, self.t_stats)
        ]

    def to_dict(self):
        return {
            "format": OLS_FORMAT,
            "version": OLS_VERSION,
            "n": self.n,
            "p": self.p,
            "sigma2": self.sigma2,
            "r2": self.r2,
            "adj_r2": self.adj_r2,
            "mse": self.mse,
            "rmse": self.rmse,
            "coefficients": self.coefficient_table(),
        }

    @classmethod
    def from_dict(cls, data):
        if data.get("format") != OLS_FORMAT:
            raise ValueError("not an OLS fit file")
        rows = data["coefficients"]
        return cls(
            beta=np.array([r["coef"] for r in rows]),
            std_errors=np.array([r["std_err"] for r in rows]),
            t_stats=np.array([r["t"] for r in rows]),
            sigma2=float(data["sigma2"]),
            r2=float(data["r2"]),
            adj_r2=float(data["adj_r2"]),
            mse=float(data["mse"]),
            rmse=float(data["rmse"]),
            n=int(data["n"]),
            p=int(data["p"]),
            column_names=tuple(r["name"] for r in rows),
        )

    def save(self, path):
        # json writes floats with repr(), which round-trips exactly
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _check_rank(R, column_names):
    diag = np.abs(np.diag(R))
    scale = diag.max()
    weak = diag <= RANK_TOLERANCE * scale if scale > 0 else np.ones_like(diag, dtype=bool)
    if np.any(weak):
        raise RankDeficiencyError([column_names[j] for j in np.flatnonzero(weak)])


def fit_ols(design):
    """Least-squares fit of ``design.y`` on ``design.X`` via QR.

    Standard errors use ``sigma2 = RSS / (n - p)``; ``mse`` divides by ``n``.
    Raises :class:`RankDeficiencyError` when a diagonal entry of ``R`` is
    negligible relative to the largest one.
    """
    X, y = design.X, design.y
    n, p = X.shape
    if n <= p:
        raise DegenerateInputError(f"need n > p, got n={n}, p={p}")
    Q, R = np.linalg.qr(X, mode="reduced")
    _check_rank(R, design.column_names)
    beta = solve_triangular(R, Q.T @ y)

    resid = y - X @ beta
    rss = float(resid @ resid)
    centered = y - y.mean()
    tss = float(centered @ centered)
    sigma2 = rss / (n - p)
    R_inv = solve_triangular(R, np.eye(p))
    # diag((X'X)^-1) = row sums of squares of R^-1
    std_errors = np.sqrt(sigma2 * np.sum(R_inv**2, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(std_errors > 0, beta / std_errors, np.nan)
    r2 = 1.0 - rss / tss if tss > 0 else float("nan")
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / (n - p)
    mse = rss / n
    return OlsFit(
        beta=beta,
        std_errors=std_errors,
        t_stats=t_stats,
        sigma2=sigma2,
        r2=r2,
        adj_r2=adj_r2,
        mse=mse,
        rmse=float(np.sqrt(mse)),
        n=n,
        p=p,
        column_names=tuple(design.column_names),
    )


def predict_ols(fit, X_new, column_names=None):
    """Linear predictions ``X_new @ beta``.

    ``X_new`` is a :class:`DesignMatrix` or an array that already carries the
    intercept column; with an array, ``column_names`` is checked if given.
    """
    if isinstance(X_new, DesignMatrix):
        check_column_names(X_new.column_names, fit.column_names)
        X = X_new.X
    else:
        if column_names is not None:
            check_column_names(column_names, fit.column_names)
        X = check_matrix(X_new, n_columns=fit.p, name="X_new")
    return X @ fit.beta


class OLSRegressor(RegressorMixin, BaseEstimator):
    """scikit-learn style wrapper; the intercept is added internally.

    ``fit`` also accepts a :class:`DesignMatrix` (with ``y=None``), in which
    case its columns are used as-is.
    """

    def __init__(self, feature_names=None):
        self.feature_names = feature_names

    def _design(self, X, y):
        if isinstance(X, DesignMatrix):
            return X
        X = check_matrix(X)
        return DesignMatrix.from_arrays(X, y, self.feature_names)

    def fit(self, X, y=None):
        self.fit_ = fit_ols(self._design(X, y))
        self.coef_ = self.fit_.beta[1:]
        self.intercept_ = float(self.fit_.beta[0])
        self.n_features_in_ = self.fit_.p - 1
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        if isinstance(X, DesignMatrix):
            return predict_ols(self.fit_, X)
        X = check_matrix(X, n_columns=self.n_features_in_)
        return self.intercept_ + X @ self.coef_
