"""Street networks, nearest-node snapping and accessibility aggregates."""

from .features import (
    DEFAULT_FEATURE_SPEC,
    AccessibilityFeatures,
    FeatureEntry,
    FeatureSpec,
    accessibility_matrix,
    build_features,
    range_aggregate,
    reachable,
)
from .nearest import EARTH_RADIUS_M, haversine_m, nearest_node, nearest_nodes
from .network import AttributeLayer, Network, load_layers, load_network, write_layers

__all__ = [
    "DEFAULT_FEATURE_SPEC",
    "EARTH_RADIUS_M",
    "AccessibilityFeatures",
    "AttributeLayer",
    "FeatureEntry",
    "FeatureSpec",
    "Network",
    "accessibility_matrix",
    "build_features",
    "haversine_m",
    "load_layers",
    "load_network",
    "nearest_node",
    "nearest_nodes",
    "range_aggregate",
    "reachable",
    "write_layers",
]
