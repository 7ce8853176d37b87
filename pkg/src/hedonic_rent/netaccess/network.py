"""Street networks and node attribute layers."""

import os

import numpy as np
import pandas as pd

from ..exceptions import DanglingEdgeError, MissingColumnError, NetworkError

NETWORK_KINDS = ("walk", "drive")


def _frozen(arr, dtype):
    arr = np.array(arr, dtype=dtype)
    arr.flags.writeable = False
    return arr


class Network:
    """Undirected street network with edge lengths in meters.

    Nodes are stored sorted by id; ``positions`` maps an id to its row.
    Duplicate undirected edges collapse to the shortest one.
    """

    def __init__(self, node_ids, lat, lon, u, v, length, kind="walk"):
        if kind not in NETWORK_KINDS:
            raise NetworkError(f"network kind must be one of {NETWORK_KINDS}, got {kind!r}")
        node_ids = np.asarray(node_ids, dtype=np.int64)
        if node_ids.size == 0:
            raise NetworkError("network has no nodes")
        if np.unique(node_ids).size != node_ids.size:
            raise NetworkError("duplicate node ids")
        lat = np.asarray(lat, dtype=np.float64)
        lon = np.asarray(lon, dtype=np.float64)
        if not (np.all(np.isfinite(lat)) and np.all(np.isfinite(lon))):
            raise NetworkError("non-finite node coordinates")
        if np.any(np.abs(lat) > 90) or np.any(np.abs(lon) > 180):
            raise NetworkError("node coordinates outside WGS84 range")

        order = np.argsort(node_ids, kind="stable")
        self.kind = kind
        self.node_ids = _frozen(node_ids[order], np.int64)
        self.lat = _frozen(lat[order], np.float64)
        self.lon = _frozen(lon[order], np.float64)

        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        length = np.asarray(length, dtype=np.float64)
        if not (u.shape == v.shape == length.shape):
            raise NetworkError("edge arrays must have equal length")
        pu = self._lookup(u)
        pv = self._lookup(v)
        if np.any(~np.isfinite(length)) or np.any(length <= 0):
            bad = np.flatnonzero(~np.isfinite(length) | (length <= 0))[0]
            raise NetworkError(f"edge ({u[bad]}, {v[bad]}) has non-positive or non-finite length {length[bad]}")
        if np.any(pu == pv):
            bad = np.flatnonzero(pu == pv)[0]
            raise NetworkError(f"self-loop at node {u[bad]}")

        a, b = np.minimum(pu, pv), np.maximum(pu, pv)
        # sort by (a, b, length) so the first of each (a, b) run is the shortest
        order = np.lexsort((length, b, a))
        a, b, length = a[order], b[order], length[order]
        first = np.ones(a.size, dtype=bool)
        first[1:] = (a[1:] != a[:-1]) | (b[1:] != b[:-1])
        self.edge_u = _frozen(a[first], np.int64)
        self.edge_v = _frozen(b[first], np.int64)
        self.edge_length = _frozen(length[first], np.float64)
        self._build_csr()
        self._kdtree = None

    def _lookup(self, ids, error=DanglingEdgeError):
        pos = np.searchsorted(self.node_ids, ids)
        pos = np.clip(pos, 0, self.node_ids.size - 1)
        missing = self.node_ids[pos] != ids
        if np.any(missing):
            raise error(int(np.asarray(ids)[missing][0]))
        return pos

    def positions(self, ids):
        """Row positions of the given node ids (raises on unknown ids)."""

        def unknown(node_id):
            return NetworkError(f"unknown node id {node_id} in {self.kind} network")

        return self._lookup(np.asarray(ids, dtype=np.int64), error=unknown)

    def _build_csr(self):
        n = self.node_ids.size
        src = np.concatenate([self.edge_u, self.edge_v])
        dst = np.concatenate([self.edge_v, self.edge_u])
        w = np.concatenate([self.edge_length, self.edge_length])
        order = np.lexsort((dst, src))
        counts = np.bincount(src, minlength=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        self.indptr = _frozen(indptr, np.int64)
        self.indices = _frozen(dst[order], np.int64)
        self.weights = _frozen(w[order], np.float64)

    @property
    def n_nodes(self):
        return int(self.node_ids.size)

    @property
    def n_edges(self):
        return int(self.edge_u.size)

    def edges(self):
        """Edges as a frame ``u, v, length_m`` using node ids."""
        return pd.DataFrame(
            {
                "u": self.node_ids[self.edge_u],
                "v": self.node_ids[self.edge_v],
                "length_m": self.edge_length,
            }
        )

    def nodes(self):
        return pd.DataFrame({"id": self.node_ids, "lat": self.lat, "lon": self.lon})

    def to_csv(self, nodes_path, edges_path):
        self.nodes().to_csv(nodes_path, index=False, float_format="%.17g")
        self.edges().to_csv(edges_path, index=False, float_format="%.17g")

    def __repr__(self):
        return f"Network(kind={self.kind!r}, nodes={self.n_nodes}, edges={self.n_edges})"


def _read_csv(path, required):
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise FileNotFoundError(f"file not found: {path}")
    frame = pd.read_csv(path, float_precision="round_trip")
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise MissingColumnError(missing, path)
    return frame


def load_network(nodes_path, edges_path, kind="walk"):
    """Read a network from ``id,lat,lon`` and ``u,v,length_m`` CSV files."""
    nodes = _read_csv(nodes_path, ("id", "lat", "lon"))
    edges = _read_csv(edges_path, ("u", "v", "length_m"))
    return Network(
        nodes["id"].to_numpy(),
        nodes["lat"].to_numpy(),
        nodes["lon"].to_numpy(),
        edges["u"].to_numpy(),
        edges["v"].to_numpy(),
        edges["length_m"].to_numpy(),
        kind=kind,
    )


class AttributeLayer:
    """Nonnegative values attached to a subset of a network's nodes.

    Nodes without an entry contribute nothing: zero to sums, and they are
    left out of the denominator of means.
    """

    def __init__(self, name, node_ids, values):
        node_ids = np.asarray(node_ids, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if node_ids.shape != values.shape:
            raise ValueError("node_ids and values must have equal length")
        if np.unique(node_ids).size != node_ids.size:
            raise ValueError(f"layer {name!r} has duplicate node ids")
        if np.any(~np.isfinite(values)) or np.any(values < 0):
            raise ValueError(f"layer {name!r} values must be finite and nonnegative")
        self.name = name
        self.node_ids = _frozen(node_ids, np.int64)
        self.values = _frozen(values, np.float64)

    @classmethod
    def from_mapping(cls, name, mapping):
        items = sorted(mapping.items())
        return cls(name, [k for k, _ in items], [v for _, v in items])

    def dense(self, network):
        """Values aligned to ``network`` rows plus a presence mask."""
        pos = network.positions(self.node_ids)
        values = np.zeros(network.n_nodes)
        present = np.zeros(network.n_nodes, dtype=bool)
        values[pos] = self.values
        present[pos] = True
        return values, present

    def __len__(self):
        return int(self.node_ids.size)

    def __repr__(self):
        return f"AttributeLayer({self.name!r}, nodes={len(self)})"


def load_layers(path):
    """Read attribute layers from a long CSV ``network,layer,node_id,value``.

    Returns ``{network_kind: {layer_name: AttributeLayer}}``.
    """
    frame = _read_csv(path, ("network", "layer", "node_id", "value"))
    unknown = set(frame["network"]) - set(NETWORK_KINDS)
    if unknown:
        raise ValueError(f"unknown network kind(s) in {path}: {sorted(unknown)}")
    layers = {kind: {} for kind in NETWORK_KINDS}
    for (kind, name), group in frame.groupby(["network", "layer"], sort=True):
        layers[kind][name] = AttributeLayer(name, group["node_id"].to_numpy(), group["value"].to_numpy())
    return layers


def write_layers(layers, path):
    frames = []
    for kind in NETWORK_KINDS:
        for name, layer in sorted(layers.get(kind, {}).items()):
            frames.append(
                pd.DataFrame(
                    {"network": kind, "layer": name, "node_id": layer.node_ids, "value": layer.values}
                )
            )
    pd.concat(frames, ignore_index=True).to_csv(path, index=False, float_format="%.17g")
