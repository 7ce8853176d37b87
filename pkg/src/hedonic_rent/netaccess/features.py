"""Accessibility variables: bounded-radius network aggregates per listing."""

import warnings
from dataclasses import dataclass

import numba
import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import FeatureSpecError
from ._kernels import range_aggregate_kernel, reachable_kernel
from .nearest import nearest_positions
from .network import NETWORK_KINDS

AGGREGATIONS = ("sum", "mean")
WALK_RADIUS_LIMIT_M = 3000.0


@dataclass(frozen=True)
class FeatureEntry:
    output_name: str
    layer: str
    radius: float
    network: str = "walk"
    agg: str = "sum"

    def __post_init__(self):
        if not self.radius > 0 or not np.isfinite(self.radius):
            raise FeatureSpecError(f"{self.output_name}: radius must be positive, got {self.radius}")
        if self.network not in NETWORK_KINDS:
            raise FeatureSpecError(f"{self.output_name}: unknown network {self.network!r}")
        if self.agg not in AGGREGATIONS:
            raise FeatureSpecError(f"{self.output_name}: agg must be one of {AGGREGATIONS}")


class FeatureSpec:
    """Ordered list of accessibility variables to materialize."""

    def __init__(self, entries):
        self.entries = tuple(entries)
        names = [e.output_name for e in self.entries]
        if len(set(names)) != len(names):
            raise FeatureSpecError(f"duplicate output names in feature spec: {names}")
        for e in self.entries:
            if e.network == "walk" and e.radius > WALK_RADIUS_LIMIT_M:
                warnings.warn(f"{e.output_name}: walk radius {e.radius} m exceeds 3 km", stacklevel=2)
            if e.network == "drive" and e.radius <= WALK_RADIUS_LIMIT_M:
                warnings.warn(f"{e.output_name}: drive radius {e.radius} m is within 3 km", stacklevel=2)

    @classmethod
    def from_records(cls, records):
        return cls(FeatureEntry(**r) for r in records)

    def to_records(self):
        return [e.__dict__.copy() for e in self.entries]

    @property
    def names(self):
        return [e.output_name for e in self.entries]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)


# Sums for counts; the unit-size variable is an average.
DEFAULT_FEATURE_SPEC = FeatureSpec(
    [
        FeatureEntry("units_500_walk", "units", 500, "walk", "sum"),
        FeatureEntry("sqft_unit_500_walk", "sqft_per_unit", 500, "walk", "mean"),
        FeatureEntry("rich_500_walk", "hh_rich", 500, "walk", "sum"),
        FeatureEntry("singles_500_walk", "hh_singles", 500, "walk", "sum"),
        FeatureEntry("elderly_hh_500_walk", "hh_elderly", 500, "walk", "sum"),
        FeatureEntry("children_500_walk", "hh_children", 500, "walk", "sum"),
        FeatureEntry("jobs_500_walk", "jobs", 500, "walk", "sum"),
        FeatureEntry("jobs_1500_walk", "jobs", 1500, "walk", "sum"),
        FeatureEntry("jobs_10000", "jobs", 10000, "drive", "sum"),
        FeatureEntry("jobs_25000", "jobs", 25000, "drive", "sum"),
        FeatureEntry("pop_10000", "pop", 10000, "drive", "sum"),
        FeatureEntry("pop_black_10000", "pop_black", 10000, "drive", "sum"),
        FeatureEntry("pop_hisp_10000", "pop_hisp", 10000, "drive", "sum"),
        FeatureEntry("pop_asian_10000", "pop_asian", 10000, "drive", "sum"),
    ]
)


def _n_chunks(n_sources, threads):
    threads = threads or numba.get_num_threads()
    return max(1, min(n_sources, 4 * threads))


def _aggregate_positions(network, layers, aggs, radius, sources, threads=None):
    """Aggregate several layers at once for source rows ``sources``."""
    values = np.zeros((network.n_nodes, len(layers)))
    present = np.zeros((network.n_nodes, len(layers)), dtype=bool)
    for j, layer in enumerate(layers):
        values[:, j], present[:, j] = layer.dense(network)
    is_mean = np.array([a == "mean" for a in aggs], dtype=bool)
    sources = np.ascontiguousarray(sources, dtype=np.int64)
    if sources.size == 0:
        return np.zeros((0, len(layers)))
    return range_aggregate_kernel(
        sources,
        network.indptr,
        network.indices,
        network.weights,
        float(radius),
        values,
        present,
        is_mean,
        _n_chunks(sources.size, threads),
    )


def range_aggregate(network, layer, radius, agg="sum", sources=None, threads=None):
    """Aggregate ``layer`` over every node within network distance ``radius``.

    Returns a Series indexed by source node id. Each source's own value is
    included; a mean over nodes with no layer entries is 0.
    """
    if not radius > 0:
        raise FeatureSpecError(f"radius must be positive, got {radius}")
    if agg not in AGGREGATIONS:
        raise FeatureSpecError(f"agg must be one of {AGGREGATIONS}, got {agg!r}")
    if sources is None:
        pos = np.arange(network.n_nodes)
    else:
        pos = network.positions(sources)
    out = _aggregate_positions(network, [layer], [agg], radius, pos, threads)
    return pd.Series(out[:, 0], index=pd.Index(network.node_ids[pos], name="node_id"), name=layer.name)


def reachable(network, source, radius):
    """Node ids and distances within ``radius`` of ``source`` (ascending id)."""
    pos = int(network.positions([source])[0])
    reached, dist = reachable_kernel(pos, network.indptr, network.indices, network.weights, float(radius))
    return network.node_ids[reached], dist


def accessibility_matrix(lat, lon, walk, drive, layers, spec=DEFAULT_FEATURE_SPEC, threads=None):
    """Feature values for points at ``lat, lon`` as ``{output_name: array}``."""
    networks = {"walk": walk, "drive": drive}
    for e in spec:
        if e.layer not in layers.get(e.network, {}):
            raise FeatureSpecError(f"{e.output_name}: unknown {e.network} layer {e.layer!r}")

    assigned = {}
    for kind in NETWORK_KINDS:
        if any(e.network == kind for e in spec):
            assigned[kind] = nearest_positions(networks[kind], lat, lon)

    groups = {}
    for e in spec:
        groups.setdefault((e.network, float(e.radius)), []).append(e)

    out = {}
    for (kind, radius), entries in groups.items():
        network = networks[kind]
        sources, inverse = np.unique(assigned[kind], return_inverse=True)
        agg = _aggregate_positions(
            network,
            [layers[kind][e.layer] for e in entries],
            [e.agg for e in entries],
            radius,
            sources,
            threads,
        )
        for j, e in enumerate(entries):
            out[e.output_name] = agg[inverse, j]
    return {name: out[name] for name in spec.names}


def build_features(listings, walk, drive, layers, spec=DEFAULT_FEATURE_SPEC, threads=None):
    """Return ``listings`` with one new column per spec entry.

    Each listing is snapped to its nearest node on each network and takes
    that node's aggregate.
    """
    clash = [n for n in spec.names if n in listings.columns]
    if clash:
        raise FeatureSpecError(f"feature name(s) already present in listing table: {clash}")
    features = accessibility_matrix(
        listings.column("lat"), listings.column("lon"), walk, drive, layers, spec, threads
    )
    return listings.with_features(features)


class AccessibilityFeatures(TransformerMixin, BaseEstimator):
    """Transformer wrapper around :func:`build_features`.

    Stateless: ``fit`` only validates that the feature spec's layers exist.
    """

    def __init__(self, walk=None, drive=None, layers=None, spec=None, threads=None):
        self.walk = walk
        self.drive = drive
        self.layers = layers
        self.spec = spec
        self.threads = threads

    def _spec(self):
        return DEFAULT_FEATURE_SPEC if self.spec is None else self.spec

    def fit(self, listings=None, y=None):
        for e in self._spec():
            if e.layer not in (self.layers or {}).get(e.network, {}):
                raise FeatureSpecError(f"{e.output_name}: unknown {e.network} layer {e.layer!r}")
        self.feature_names_ = list(self._spec().names)
        return self

    def transform(self, listings):
        check_is_fitted(self, "feature_names_")
        return build_features(listings, self.walk, self.drive, self.layers, self._spec(), self.threads)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "feature_names_")
        return np.asarray(self.feature_names_, dtype=object)
