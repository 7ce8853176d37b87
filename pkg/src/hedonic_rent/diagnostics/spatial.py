"""Global Moran's I on k-nearest-neighbor weights with a permutation test."""

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .._validation import as_float_column
from ..exceptions import DegenerateInputError
from ..netaccess.nearest import unit_vectors


@dataclass(frozen=True)
class MoranResult:
    morans_i: float
    permutation_p: float
    n_permutations: int
    k_neighbors: int


def knn_neighbors(lat, lon, k):
    """Indices of the ``k`` nearest other points (great-circle), shape (n, k)."""
    lat = np.asarray(lat, dtype=np.float64)
    lon = np.asarray(lon, dtype=np.float64)
    xyz = unit_vectors(lat, lon)
    n_distinct = np.unique(np.round(xyz, 12), axis=0).shape[0]
    if n_distinct < k + 1:
        raise DegenerateInputError(f"need at least k+1={k + 1} distinct locations, got {n_distinct}")
    _, idx = cKDTree(xyz).query(xyz, k=k + 1)
    out = np.empty((lat.size, k), dtype=np.int64)
    rows = np.arange(lat.size)
    for i in rows:
        cand = idx[i]
        # drop self; with co-located points self may not come first
        hit = np.flatnonzero(cand == i)
        cand = np.delete(cand, hit[0]) if hit.size else cand[:k]
        out[i] = cand[:k]
    return out


def _statistic(z, neighbors, denom):
    # row-standardized weights: the spatial lag is the neighbor mean
    lag = z[neighbors].mean(axis=1)
    return float(z @ lag) / denom


def morans_i(values, lat=None, lon=None, k_neighbors=8, n_permutations=999, seed=0, neighbors=None):
    """Moran's I with row-standardized kNN weights.

    ``neighbors`` may supply a precomputed ``(n, k)`` neighbor index array in
    place of coordinates. The p-value is two-sided on ``|I|``:
    ``(1 + #{|I_perm| >= |I_obs|}) / (1 + n_permutations)``. Permutation
    ``j`` draws from its own stream derived from ``(seed, j)``.
    """
    z = as_float_column(values, "values")
    n = z.size
    if n < 10:
        raise DegenerateInputError("morans_i needs at least 10 observations")
    if k_neighbors < 1:
        raise ValueError("k_neighbors must be >= 1")
    z = z - z.mean()
    denom = float(z @ z)
    if not denom > 0:
        raise DegenerateInputError("values are constant; Moran's I undefined")
    if neighbors is None:
        neighbors = knn_neighbors(lat, lon, k_neighbors)
    neighbors = np.asarray(neighbors, dtype=np.int64)
    if neighbors.shape[0] != n:
        raise ValueError("neighbors must have one row per value")

    observed = _statistic(z, neighbors, denom)
    if n_permutations <= 0:
        return MoranResult(observed, float("nan"), 0, neighbors.shape[1])
    target = abs(observed)
    hits = 0
    for j in range(n_permutations):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(j,)))
        if abs(_statistic(z[rng.permutation(n)], neighbors, denom)) >= target:
            hits += 1
    return MoranResult(observed, (1 + hits) / (1 + n_permutations), int(n_permutations), neighbors.shape[1])
