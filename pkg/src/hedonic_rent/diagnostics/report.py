"""Evaluation reports: one model on one data split, written as CSV and SVG files."""

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .._validation import check_paired
from .metrics import Histogram, Metrics, drift_slope, evaluate, residual_histogram
from .spatial import MoranResult, morans_i
from .svg import histogram_svg, residual_map_svg, scatter_svg

SPLITS = ("train", "test")
SCATTER_CAP = 50_000
REPORT_FILES = (
    "metrics.csv",
    "residual_histogram.csv",
    "pred_vs_obs.csv",
    "resid_vs_pred.csv",
    "spatial_residuals.csv",
    "residual_histogram.svg",
    "pred_vs_obs.svg",
    "resid_vs_pred.svg",
    "spatial_residuals.svg",
    "report.json",
)


@dataclass(frozen=True)
class DiagnosticsConfig:
    n_bins: int = 50
    k_neighbors: int = 8
    n_permutations: int = 999
    scatter_cap: int = SCATTER_CAP
    seed: int = 0


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    model_name: str
    split: str
    metrics: Metrics
    histogram: Histogram
    pred_obs_pairs: np.ndarray
    resid_pred_pairs: np.ndarray
    spatial: MoranResult
    drift_slope: float
    ids: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    residuals: np.ndarray
    model_params: dict = field(default_factory=dict)

    def summary_rows(self):
        """``(name, value)`` rows written to metrics.csv."""
        rows = [("model", self.model_name), ("split", self.split)]
        rows += list(self.metrics.as_dict().items())
        rows += [
            ("drift_slope", self.drift_slope),
            ("morans_i", self.spatial.morans_i),
            ("permutation_p", self.spatial.permutation_p),
            ("n_permutations", self.spatial.n_permutations),
            ("k_neighbors", self.spatial.k_neighbors),
        ]
        rows += [(f"param.{k}", v) for k, v in sorted(self.model_params.items())]
        return rows


def sample_positions(n, cap, seed):
    """Seeded subset of ``min(n, cap)`` row positions, in ascending order."""
    if n <= cap:
        return np.arange(n)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(n,)))
    return np.sort(rng.choice(n, size=cap, replace=False))


def build_report(model_name, split, predictions, observations, ids, lat, lon,
                 config=DiagnosticsConfig(), model_params=None):
    """Compute every diagnostic for one (model, split) pair."""
    if split not in SPLITS:
        raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
    pred, obs = check_paired(predictions, observations)
    ids = np.asarray(ids)
    lat = np.asarray(lat, dtype=np.float64)
    lon = np.asarray(lon, dtype=np.float64)
    if not (ids.size == lat.size == lon.size == pred.size):
        raise ValueError("ids, lat, lon must align with predictions")
    resid = obs - pred
    keep = sample_positions(pred.size, config.scatter_cap, config.seed)
    return EvaluationReport(
        model_name=model_name,
        split=split,
        metrics=evaluate(pred, obs),
        histogram=residual_histogram(resid, config.n_bins),
        pred_obs_pairs=np.column_stack([pred[keep], obs[keep]]),
        resid_pred_pairs=np.column_stack([resid[keep], pred[keep]]),
        spatial=morans_i(resid, lat, lon, config.k_neighbors, config.n_permutations, config.seed),
        drift_slope=drift_slope(resid, pred),
        ids=ids,
        lat=lat,
        lon=lon,
        residuals=resid,
        model_params=dict(model_params or {}),
    )


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else "%.17g" % v
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([format_value(v) for v in row])


def report_dir(out_dir, report):
    return os.path.join(out_dir, report.model_name, report.split)


def emit_report(report, out_dir):
    """Write the report under ``<out_dir>/<model>/<split>/``; returns the paths."""
    d = report_dir(out_dir, report)
    os.makedirs(d, exist_ok=True)
    p = {name: os.path.join(d, name) for name in REPORT_FILES}
    h = report.histogram

    write_csv(p["metrics.csv"], ["metric", "value"], report.summary_rows())
    write_csv(
        p["residual_histogram.csv"],
        ["bin_left", "bin_right", "count"],
        zip(h.edges[:-1], h.edges[1:], h.counts),
    )
    write_csv(p["pred_vs_obs.csv"], ["predicted", "observed"], report.pred_obs_pairs)
    write_csv(p["resid_vs_pred.csv"], ["residual", "predicted"], report.resid_pred_pairs)
    write_csv(
        p["spatial_residuals.csv"],
        ["id", "lat", "lon", "residual"],
        zip(report.ids, report.lat, report.lon, report.residuals),
    )

    label = f"{report.model_name} ({report.split})"
    histogram_svg(p["residual_histogram.svg"], h.edges, h.counts, f"Distribution of residuals: {label}")
    po = report.pred_obs_pairs
    scatter_svg(p["pred_vs_obs.svg"], po[:, 0], po[:, 1], "diagonal",
                f"Predicted vs observed: {label}", "predicted", "observed")
    rp = report.resid_pred_pairs
    scatter_svg(p["resid_vs_pred.svg"], rp[:, 1], rp[:, 0], "zero",
                f"Residuals vs predicted: {label}", "predicted", "residual")
    keep = sample_positions(report.residuals.size, SCATTER_CAP, 0)
    residual_map_svg(p["spatial_residuals.svg"], report.lon[keep], report.lat[keep],
                     report.residuals[keep], f"Spatial pattern of residuals: {label}")
    with open(p["report.json"], "w", encoding="utf-8") as fh:
        json.dump(_json_summary(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return [p[name] for name in REPORT_FILES]


def _json_summary(report):
    def clean(v):
        v = v.item() if isinstance(v, np.generic) else v
        return None if isinstance(v, float) and math.isnan(v) else v

    return {
        "model": report.model_name,
        "split": report.split,
        "metrics": {k: clean(v) for k, v in report.metrics.as_dict().items()},
        "drift_slope": clean(report.drift_slope),
        "spatial": {k: clean(v) for k, v in report.spatial.__dict__.items()},
        "histogram": {"n_bins": int(report.histogram.counts.size), "n": report.histogram.n},
        "n_scatter_points": int(report.pred_obs_pairs.shape[0]),
        "model_params": {k: clean(v) for k, v in sorted(report.model_params.items())},
        "files": list(REPORT_FILES),
    }
