"""Great-circle nearest-node snapping."""

import numpy as np
from scipy.spatial import cKDTree

EARTH_RADIUS_M = 6_371_000.0
_CANDIDATES = 8


def haversine_m(lat1, lon1, lat2, lon2):
    """Great-circle distance in meters on a sphere of radius 6,371 km."""
    phi1, phi2 = np.radians(lat1), np.radians(lat2)
    dphi = phi2 - phi1
    dlam = np.radians(np.asarray(lon2) - np.asarray(lon1))
    a = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def unit_vectors(lat, lon):
    phi, lam = np.radians(lat), np.radians(lon)
    cos_phi = np.cos(phi)
    return np.column_stack([cos_phi * np.cos(lam), cos_phi * np.sin(lam), np.sin(phi)])


def _tree(network):
    # chord length is monotone in central angle, so the 3-D tree ranks
    # candidates the same way haversine does (up to rounding)
    if network._kdtree is None:
        network._kdtree = cKDTree(unit_vectors(network.lat, network.lon))
    return network._kdtree


def _brute_force(network, lat, lon):
    d = haversine_m(lat, lon, network.lat, network.lon)
    return int(np.argmin(d))


def nearest_positions(network, lat, lon):
    """Row positions of the nearest node for each query point."""
    lat = np.atleast_1d(np.asarray(lat, dtype=np.float64))
    lon = np.atleast_1d(np.asarray(lon, dtype=np.float64))
    k = min(_CANDIDATES, network.n_nodes)
    _, cand = _tree(network).query(unit_vectors(lat, lon), k=k)
    cand = cand.reshape(lat.size, k)
    d = haversine_m(lat[:, None], lon[:, None], network.lat[cand], network.lon[cand])
    best = d.min(axis=1)
    # positions follow ascending node id, so the smallest tied position wins
    tied = d == best[:, None]
    out = np.where(tied, cand, np.iinfo(np.int64).max).min(axis=1)
    if k < network.n_nodes:
        # every candidate tied: nodes beyond the k-th may tie too
        for i in np.flatnonzero(tied.all(axis=1)):
            out[i] = _brute_force(network, lat[i], lon[i])
    return out.astype(np.int64)


def nearest_nodes(network, lat, lon):
    """Node ids nearest (haversine) to each point; ties go to the smaller id."""
    return network.node_ids[nearest_positions(network, lat, lon)]


def nearest_node(network, lat, lon):
    return int(nearest_nodes(network, [lat], [lon])[0])
