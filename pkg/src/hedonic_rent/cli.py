"""Batch command line: ``hedonic-rent <subcommand> [--config FILE] [--set key=value ...]``.

Subcommands run pipeline stages in order: ``synth``, ``features``,
``profile``, ``train``, ``evaluate``; ``all`` chains them (``synth`` only
when the config has a ``synth`` section). Exit codes: 0 success, 1 stage
failure, 2 invalid configuration.
"""

import argparse
import copy
import hashlib
import json
import logging
import os
import platform
import sys
import time
import traceback
import warnings
from pathlib import Path
from typing import List, Literal, Optional

import numpy as np
import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from . import __version__
from .dataset import ListingTable, SplitSpec, load_listings, profile, split_positions
from .diagnostics import DiagnosticsConfig, build_report, emit_report
from .diagnostics.report import write_csv
from .exceptions import FeatureSpecError
from .forest import ForestParams, fit_forest, load_forest, predict_forest, variable_importance
from .netaccess import DEFAULT_FEATURE_SPEC, FeatureSpec, build_features, load_layers, load_network, write_layers
from .ols import OlsFit, fit_ols, predict_ols
from .preprocess import TransformRecord, apply_transform, clip_upper, fit_transform_record
from .synth import RegionSpec, generate_synthetic_region

log = logging.getLogger("hedonic_rent")

SUBCOMMANDS = ("synth", "features", "profile", "train", "evaluate", "all")
STAGES = ("synth", "features", "profile", "train", "evaluate")
EXIT_OK, EXIT_STAGE_FAILED, EXIT_BAD_CONFIG = 0, 1, 2


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PathsConfig(_Strict):
    listings: Optional[str] = None
    walk_nodes: Optional[str] = None
    walk_edges: Optional[str] = None
    drive_nodes: Optional[str] = None
    drive_edges: Optional[str] = None
    layers: Optional[str] = None
    output_dir: str = "out"


class SynthConfig(_Strict):
    seed: int = 0
    n_listings: int = Field(2000, ge=1)
    n_nodes: int = Field(2500, ge=10)
    extent_km: float = Field(20.0, gt=0)
    center_lat: float = Field(37.8, ge=-90, le=90)
    center_lon: float = Field(-122.3, ge=-180, le=180)
    jitter: float = Field(0.25, ge=0, lt=0.5)
    edge_drop: float = Field(0.05, ge=0, lt=1)
    n_centers: int = Field(6, ge=1)
    noise_sigma: float = Field(0.3, ge=0)
    noise_relative: bool = False
    nonlinearity: float = Field(0.0, ge=0)
    omitted_strength: float = Field(0.0, ge=0)
    omitted_scale_km: float = Field(2.0, gt=0)
    linear_scale: float = 1.0
    target_mean: float = Field(3.0, gt=0)

    def region_spec(self, clip_percentile):
        fields = self.model_dump(exclude={"seed"})
        return RegionSpec(clip_percentile=clip_percentile, **fields)


class FeatureEntryConfig(_Strict):
    output_name: str
    layer: str
    radius: float = Field(gt=0)
    network: Literal["walk", "drive"] = "walk"
    agg: Literal["sum", "mean"] = "sum"


class SplitConfig(_Strict):
    train_fraction: float = Field(2.0 / 3.0, gt=0, lt=1)
    seed: int = 0


class PreprocessConfig(_Strict):
    clip_percentile: float = Field(0.99, gt=0, le=1)


class OlsConfig(_Strict):
    enabled: bool = True


class ForestConfig(_Strict):
    enabled: bool = True
    n_trees: int = Field(200, ge=1)
    max_depth: Optional[int] = Field(None, ge=0)
    min_samples_leaf: int = Field(1, ge=1)
    min_samples_split: int = Field(2, ge=2)
    max_features: Optional[int] = Field(None, ge=1)
    bootstrap: bool = True
    seed: int = 0

    def params(self):
        return ForestParams(**self.model_dump(exclude={"enabled"}))


class DiagnosticsSection(_Strict):
    n_bins: int = Field(50, ge=1)
    k_neighbors: int = Field(8, ge=1)
    n_permutations: int = Field(999, ge=0)
    scatter_cap: int = Field(50_000, ge=1)
    seed: int = 0


def _default_feature_spec():
    return [FeatureEntryConfig(**r) for r in DEFAULT_FEATURE_SPEC.to_records()]


class PipelineConfig(_Strict):
    paths: PathsConfig = PathsConfig()
    synth: Optional[SynthConfig] = None
    feature_spec: List[FeatureEntryConfig] = Field(default_factory=_default_feature_spec)
    split: SplitConfig = SplitConfig()
    preprocess: PreprocessConfig = PreprocessConfig()
    ols: OlsConfig = OlsConfig()
    forest: ForestConfig = ForestConfig()
    diagnostics: DiagnosticsSection = DiagnosticsSection()
    threads: int = Field(1, ge=1)

    @model_validator(mode="after")
    def _check(self):
        if not self.feature_spec:
            raise ValueError("feature_spec must list at least one entry")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            try:
                self.features()
            except FeatureSpecError as exc:
                raise ValueError(str(exc)) from None
        return self

    def features(self):
        return FeatureSpec.from_records([e.model_dump() for e in self.feature_spec])

    def diagnostics_config(self):
        return DiagnosticsConfig(**self.diagnostics.model_dump())


class ConfigError(Exception):
    """Invalid configuration; the message names the offending field."""


class Layout:
    """Where every artifact lives under the output directory."""

    def __init__(self, config):
        self.out = Path(config.paths.output_dir)
        data = self.out / "data"
        p = config.paths
        self.listings = Path(p.listings) if p.listings else data / "listings.csv"
        self.walk_nodes = Path(p.walk_nodes) if p.walk_nodes else data / "walk_nodes.csv"
        self.walk_edges = Path(p.walk_edges) if p.walk_edges else data / "walk_edges.csv"
        self.drive_nodes = Path(p.drive_nodes) if p.drive_nodes else data / "drive_nodes.csv"
        self.drive_edges = Path(p.drive_edges) if p.drive_edges else data / "drive_edges.csv"
        self.layers = Path(p.layers) if p.layers else data / "layers.csv"
        self.data_dir = data
        self.ground_truth = data / "ground_truth.json"
        self.features = self.out / "features" / "listings_features.csv"
        self.profile = self.out / "profile" / "profile.csv"
        train = self.out / "train"
        self.train_dir = train
        self.split = train / "split.csv"
        self.transform = train / "transform.json"
        self.ols = train / "ols_fit.json"
        self.forest = train / "forest.npz"
        self.importance = train / "importance.csv"
        self.manifest = self.out / "manifest.json"

    def inputs(self):
        return {
            "listings": self.listings,
            "walk_nodes": self.walk_nodes,
            "walk_edges": self.walk_edges,
            "drive_nodes": self.drive_nodes,
            "drive_edges": self.drive_edges,
            "layers": self.layers,
        }


# files each stage reads and writes, used to check inputs before running
_STAGE_READS = {
    "synth": (),
    "features": ("listings", "walk_nodes", "walk_edges", "drive_nodes", "drive_edges", "layers"),
    "profile": ("features",),
    "train": ("features",),
    "evaluate": ("features", "split", "transform"),
}
_STAGE_WRITES = {
    "synth": ("listings", "walk_nodes", "walk_edges", "drive_nodes", "drive_edges", "layers"),
    "features": ("features",),
    "profile": (),
    "train": ("split", "transform"),
    "evaluate": (),
}


def _set_dotted(data, key, value):
    parts = key.split(".")
    node = data
    for part in parts[:-1]:
        child = node.get(part)
        if child is None:
            child = node[part] = {}
        if not isinstance(child, dict):
            raise ConfigError(f"--set {key}: {part!r} is not a section")
        node = child
    node[parts[-1]] = value


def parse_override(text):
    if "=" not in text:
        raise ConfigError(f"--set expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"--set expects key=value, got {text!r}")
    try:
        value = yaml.safe_load(raw) if raw.strip() else None
    except yaml.YAMLError as exc:
        raise ConfigError(f"--set {key}: cannot parse value {raw!r}: {exc}") from None
    return key, value


def _format_validation_error(exc):
    lines = []
    for err in exc.errors():
        where = ".".join(str(x) for x in err["loc"]) or "<root>"
        lines.append(f"  {where}: {err['msg']}")
    return "invalid configuration:\n" + "\n".join(lines)


def load_config(path=None, overrides=(), threads=None):
    """Read YAML, apply ``key=value`` overrides, validate. Raises ConfigError."""
    data = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a mapping at the top level")
    data = copy.deepcopy(data)
    for text in overrides:
        key, value = parse_override(text)
        _set_dotted(data, key, value)
    if threads is not None:
        data["threads"] = threads
    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation_error(exc)) from None


def stages_for(subcommand, config):
    if subcommand == "all":
        return [s for s in STAGES if s != "synth" or config.synth is not None]
    return [subcommand]


def check_inputs(stages, config, layout):
    """Every file a stage reads must exist or be produced by an earlier stage."""
    if "synth" in stages and config.synth is None:
        raise ConfigError("synth: section missing; add a 'synth' mapping to the config")
    produced = set()
    files = {**layout.inputs(), "features": layout.features, "split": layout.split,
             "transform": layout.transform}
    problems = []
    for stage in stages:
        for key in _STAGE_READS[stage]:
            if key not in produced and not files[key].exists():
                label = f"paths.{key}" if key in layout.inputs() else key
                problems.append(f"  {label}: {files[key]} does not exist (needed by '{stage}')")
        produced.update(_STAGE_WRITES[stage])
    if "evaluate" in stages and "train" not in stages:
        if config.ols.enabled and not layout.ols.exists():
            problems.append(f"  ols: {layout.ols} does not exist (needed by 'evaluate')")
        if config.forest.enabled and not layout.forest.exists():
            problems.append(f"  forest: {layout.forest} does not exist (needed by 'evaluate')")
    if not (config.ols.enabled or config.forest.enabled) and ({"train", "evaluate"} & set(stages)):
        problems.append("  ols.enabled / forest.enabled: at least one model must be enabled")
    if problems:
        raise ConfigError("invalid configuration:\n" + "\n".join(problems))


def config_hash(config):
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _features(config):
    return [e.output_name for e in config.feature_spec]


def _model_features(config):
    return ("res_sqft_per_unit", *_features(config))


def run_synth(config, layout):
    spec = config.synth.region_spec(config.preprocess.clip_percentile)
    region = generate_synthetic_region(spec, config.synth.seed, threads=config.threads)
    layout.data_dir.mkdir(parents=True, exist_ok=True)
    for path in layout.inputs().values():
        path.parent.mkdir(parents=True, exist_ok=True)
    region.listings.to_csv(layout.listings)
    region.walk.to_csv(layout.walk_nodes, layout.walk_edges)
    region.drive.to_csv(layout.drive_nodes, layout.drive_edges)
    write_layers(region.layers, layout.layers)
    region.truth.save(layout.ground_truth)
    log.info("synth: %d listings, %d walk nodes, %d drive nodes",
             len(region.listings), region.walk.n_nodes, region.drive.n_nodes)


def run_features(config, layout):
    listings = load_listings(layout.listings)
    walk = load_network(layout.walk_nodes, layout.walk_edges, "walk")
    drive = load_network(layout.drive_nodes, layout.drive_edges, "drive")
    layers = load_layers(layout.layers)
    table = build_features(listings, walk, drive, layers, config.features(), threads=config.threads)
    layout.features.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(layout.features)
    log.info("features: %d columns for %d listings", len(config.feature_spec), len(table))


def _feature_table(layout):
    return load_listings(layout.features)


def run_profile(config, layout):
    table = _feature_table(layout)
    clipped = {}
    for name in _features(config):
        clipped[name], _ = clip_upper(table.column(name), config.preprocess.clip_percentile)
    frame = table.frame
    for name, values in clipped.items():
        frame[name] = values
    stats = profile(ListingTable(frame, table.feature_columns))
    layout.profile.parent.mkdir(parents=True, exist_ok=True)
    stats.to_csv(layout.profile)


def run_train(config, layout):
    table = _feature_table(layout)
    record = fit_transform_record(
        table,
        features=_model_features(config),
        clip_columns=_features(config),
        percentile=config.preprocess.clip_percentile,
    )
    train_pos, test_pos = split_positions(len(table), SplitSpec(**config.split.model_dump()))
    layout.train_dir.mkdir(parents=True, exist_ok=True)
    labels = np.full(len(table), "test", dtype=object)
    labels[train_pos] = "train"
    write_csv(layout.split, ["id", "split"], zip(table.ids, labels))
    record.save(layout.transform)

    design = apply_transform(table.take(train_pos), record)
    if design.n_dropped:
        log.warning("train: %d rows dropped by the transform", design.n_dropped)
    if config.ols.enabled:
        fit_ols(design).save(layout.ols)
    if config.forest.enabled:
        forest = fit_forest(design, config.forest.params(), threads=config.threads)
        forest.save(layout.forest)
        write_csv(layout.importance, ["name", "importance"], variable_importance(forest))


def _split_tables(table, layout):
    split = pd.read_csv(layout.split)
    if set(split["id"]) != set(table.ids.tolist()):
        raise ValueError(f"{layout.split} does not match the feature table ids")
    label = dict(zip(split["id"], split["split"]))
    labels = np.array([label[i] for i in table.ids])
    return {s: table.take(np.flatnonzero(labels == s)) for s in ("train", "test")}


def _model_params(config, design_p):
    params = {
        "clip_percentile": config.preprocess.clip_percentile,
        "train_fraction": config.split.train_fraction,
        "split_seed": config.split.seed,
    }
    forest = config.forest.params()
    forest_params = {f"forest.{k}": v for k, v in forest.__dict__.items()}
    forest_params["forest.max_features"] = forest.resolved_max_features(design_p - 1)
    return params, forest_params


def run_evaluate(config, layout):
    table = _feature_table(layout)
    record = TransformRecord.load(layout.transform)
    tables = _split_tables(table, layout)
    models = {}
    if config.ols.enabled:
        fit = OlsFit.load(layout.ols)
        models["ols"] = lambda d, fit=fit: predict_ols(fit, d)
    if config.forest.enabled:
        forest = load_forest(layout.forest)
        models["forest"] = lambda d, fit=forest: predict_forest(fit, d)
    diag = config.diagnostics_config()
    for split, part in tables.items():
        design = apply_transform(part, record)
        rows = pd.Index(part.ids).get_indexer(design.ids)
        lat, lon = part.column("lat")[rows], part.column("lon")[rows]
        common, forest_params = _model_params(config, design.p)
        for name, predict in models.items():
            params = dict(common, **(forest_params if name == "forest" else {}))
            report = build_report(name, split, predict(design), design.y, design.ids, lat, lon,
                                  diag, model_params=params)
            emit_report(report, layout.out)
            log.info("evaluate: %s/%s rmse=%.4f r2=%.4f", name, split, report.metrics.rmse, report.metrics.r2)


RUNNERS = {
    "synth": run_synth,
    "features": run_features,
    "profile": run_profile,
    "train": run_train,
    "evaluate": run_evaluate,
}


def _manifest(config, subcommand, argv, stages, status, error=None):
    seeds = {
        "split": config.split.seed,
        "forest": config.forest.seed,
        "diagnostics": config.diagnostics.seed,
    }
    if config.synth is not None:
        seeds["synth"] = config.synth.seed
    return {
        "tool": "hedonic-rent",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "subcommand": subcommand,
        "argv": list(argv),
        "config_hash": config_hash(config),
        "config": config.model_dump(mode="json"),
        "seeds": seeds,
        "defaults": {
            "clip_percentile": config.preprocess.clip_percentile,
            "log_offset": 1.0,
            "train_fraction": config.split.train_fraction,
            "forest": config.forest.model_dump(),
            "forest_max_features_rule": "ceil(p/3) when max_features is null",
            "morans_k_neighbors": config.diagnostics.k_neighbors,
            "morans_n_permutations": config.diagnostics.n_permutations,
            "histogram_bins": config.diagnostics.n_bins,
            "scatter_cap": config.diagnostics.scatter_cap,
        },
        "threads": config.threads,
        "stages": stages,
        "status": status,
        "error": error,
    }


def _write_manifest(layout, manifest):
    layout.out.mkdir(parents=True, exist_ok=True)
    tmp = layout.manifest.with_suffix(".json.tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, layout.manifest)


def run(subcommand, config_path=None, overrides=(), threads=None, argv=()):
    """Run ``subcommand``; returns the process exit code."""
    if subcommand not in SUBCOMMANDS:
        log.error("unknown subcommand %r; expected one of %s", subcommand, ", ".join(SUBCOMMANDS))
        return EXIT_BAD_CONFIG
    try:
        config = load_config(config_path, overrides, threads)
        layout = Layout(config)
        stages = stages_for(subcommand, config)
        check_inputs(stages, config, layout)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_BAD_CONFIG

    records = []
    for stage in stages:
        start = time.perf_counter()
        try:
            RUNNERS[stage](config, layout)
        except Exception as exc:  # noqa: BLE001 - any stage error ends the run with exit 1
            records.append({"stage": stage, "status": "failed",
                            "seconds": round(time.perf_counter() - start, 6)})
            message = f"{type(exc).__name__}: {exc}"
            log.error("stage '%s' failed: %s", stage, message)
            log.debug("%s", traceback.format_exc())
            _write_manifest(layout, _manifest(config, subcommand, argv, records, "failed", message))
            return EXIT_STAGE_FAILED
        records.append({"stage": stage, "status": "ok", "seconds": round(time.perf_counter() - start, 6)})
        log.info("stage '%s' done in %.2fs", stage, records[-1]["seconds"])
    _write_manifest(layout, _manifest(config, subcommand, argv, records, "ok"))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="hedonic-rent", description="Hedonic rent modeling pipeline.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    helps = {
        "synth": "generate a synthetic region dataset",
        "features": "compute network accessibility features for the listings",
        "profile": "write the descriptive statistics table",
        "train": "split, fit OLS and the random forest, save fits",
        "evaluate": "predict both splits and write evaluation reports",
        "all": "run every stage in order",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("-c", "--config", help="YAML config file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config value by dotted key, e.g. forest.n_trees=50")
        p.add_argument("--threads", type=int, default=None, help="cap on worker threads")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    return run(args.subcommand, args.config, args.overrides, args.threads, argv=argv)


if __name__ == "__main__":
    sys.exit(main())
