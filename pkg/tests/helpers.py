"""Shared builders for test inputs."""

import numpy as np

from hedonic_rent.netaccess import AttributeLayer, Network


def random_graph(seed, n_nodes=None, id_offset=100):
    """Connected-ish random graph with some duplicate edges and shuffled ids."""
    rng = np.random.default_rng(seed)
    n = int(n_nodes or rng.integers(2, 51))
    ids = rng.permutation(n) * 3 + id_offset
    lat = 37.7 + rng.random(n) * 0.05
    lon = -122.4 + rng.random(n) * 0.05
    # a random spanning tree plus extra edges
    u = [int(rng.integers(0, i)) for i in range(1, n)]
    v = list(range(1, n))
    for _ in range(int(rng.integers(0, 2 * n + 1))):
        a, b = rng.choice(n, size=2, replace=False)
        u.append(int(a))
        v.append(int(b))
    if u and rng.random() < 0.5:
        # duplicate one edge with a different length
        u.append(v[0])
        v.append(u[0])
    u, v = np.array(u, dtype=np.int64), np.array(v, dtype=np.int64)
    length = rng.uniform(20.0, 400.0, u.size)
    net = Network(ids, lat, lon, ids[u], ids[v], length, kind="walk")
    values = rng.integers(0, 20, n).astype(float)
    keep = rng.random(n) < 0.7
    sparse = AttributeLayer("sparse", ids[keep], rng.uniform(0, 100, int(keep.sum())))
    dense = AttributeLayer("dense", ids, values)
    return net, dense, sparse


def dense_positions(net, layer):
    values, present = layer.dense(net)
    return values, present
