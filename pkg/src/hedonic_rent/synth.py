"""Synthetic regions: street networks, node attributes and priced listings.

The rent surface is built on the same design matrix the pipeline derives
from the generated files (clip, log1p, intercept), so the returned
coefficients can be compared directly with fitted ones.
"""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import ListingTable
from .exceptions import DegenerateInputError
from .netaccess import DEFAULT_FEATURE_SPEC, AttributeLayer, Network, accessibility_matrix
from .netaccess.nearest import haversine_m
from .preprocess import DEFAULT_FEATURES, DEFAULT_TARGET, build_design

KM_PER_DEG_LAT = 111.195
DRIVE_ID_OFFSET = 1_000_000
SIGNAL_FLOOR = 0.2

# signs follow the usual hedonic story: larger units and minority shares
# lower rent per sqft, jobs and affluent households raise it
DEFAULT_COEFFICIENTS = {
    "res_sqft_per_unit": -0.45,
    "units_500_walk": 0.06,
    "sqft_unit_500_walk": -0.05,
    "rich_500_walk": 0.05,
    "singles_500_walk": 0.04,
    "elderly_hh_500_walk": 0.03,
    "children_500_walk": -0.05,
    "jobs_500_walk": 0.02,
    "jobs_1500_walk": 0.03,
    "jobs_10000": 0.05,
    "jobs_25000": 0.08,
    "pop_10000": 0.02,
    "pop_black_10000": -0.04,
    "pop_hisp_10000": -0.04,
    "pop_asian_10000": -0.03,
}


@dataclass(frozen=True)
class RegionSpec:
    """Knobs for :func:`generate_synthetic_region`.

    ``noise_sigma`` is absolute unless ``noise_relative`` is set, in which
    case it multiplies the standard deviation of the noiseless signal.
    ``nonlinearity`` and ``omitted_strength`` are standard deviations of the
    interaction term and of the spatial omitted variable, in target units.
    """

    n_listings: int = 2000
    n_nodes: int = 2500
    extent_km: float = 20.0
    center_lat: float = 37.8
    center_lon: float = -122.3
    jitter: float = 0.25
    edge_drop: float = 0.05
    n_centers: int = 6
    noise_sigma: float = 0.3
    noise_relative: bool = False
    nonlinearity: float = 0.0
    omitted_strength: float = 0.0
    omitted_scale_km: float = 2.0
    linear_scale: float = 1.0
    target_mean: float = 3.0
    clip_percentile: float = 0.99
    coefficients: dict = field(default_factory=lambda: dict(DEFAULT_COEFFICIENTS))

    def __post_init__(self):
        if self.n_nodes < 10:
            raise DegenerateInputError("a region needs at least 10 nodes")
        if self.n_listings < 1:
            raise DegenerateInputError("a region needs at least 1 listing")
        if not self.extent_km > 0:
            raise DegenerateInputError("extent_km must be positive")
        if not 0 <= self.edge_drop < 1:
            raise DegenerateInputError("edge_drop must lie in [0, 1)")
        if not 0 <= self.jitter < 0.5:
            raise DegenerateInputError("jitter must lie in [0, 0.5)")
        if self.n_centers < 1:
            raise DegenerateInputError("n_centers must be >= 1")
        if min(self.noise_sigma, self.nonlinearity, self.omitted_strength) < 0:
            raise DegenerateInputError("noise, nonlinearity and omitted strength must be >= 0")
        if not self.omitted_scale_km > 0:
            raise DegenerateInputError("omitted_scale_km must be positive")
        if not self.target_mean > 0:
            raise DegenerateInputError("target_mean must be positive")
        if not 0 < self.clip_percentile <= 1:
            raise DegenerateInputError("clip_percentile must lie in (0, 1]")
        unknown = set(self.coefficients) - set(DEFAULT_FEATURES)
        if unknown:
            raise DegenerateInputError(f"coefficients for unknown features: {sorted(unknown)}")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """The rent-generating function and its per-listing components.

    ``y = X @ beta + nonlinear + omitted + noise`` holds exactly, where ``X``
    is the design matrix (columns ``column_names``) and ``y`` is
    ``log1p(rent_sqft)``. Signals that would fall below a small positive
    floor are bent smoothly upward; that bend is part of ``nonlinear``.
    ``features`` holds the raw accessibility columns
    before clipping and logs.
    """

    column_names: tuple
    beta: np.ndarray
    features: dict
    noise_sigma: float
    X: np.ndarray
    y: np.ndarray
    linear: np.ndarray
    nonlinear: np.ndarray
    omitted: np.ndarray
    noise: np.ndarray
    clip_thresholds: dict
    spec: RegionSpec
    seed: int

    @property
    def coefficients(self):
        return dict(zip(self.column_names, self.beta.tolist()))

    def to_dict(self):
        return {
            "seed": self.seed,
            "spec": self.spec.to_dict(),
            "target": DEFAULT_TARGET,
            "transform": "log1p after upper clipping of accessibility columns",
            "coefficients": self.coefficients,
            "noise_sigma": self.noise_sigma,
            "clip_thresholds": dict(self.clip_thresholds),
            "signal_std": {
                "linear": float(np.std(self.linear)),
                "nonlinear": float(np.std(self.nonlinear)),
                "omitted": float(np.std(self.omitted)),
            },
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


@dataclass(frozen=True, eq=False)
class SyntheticRegion:
    walk: Network
    drive: Network
    layers: dict
    listings: ListingTable
    truth: GroundTruth

    def __iter__(self):
        # unpacks as (walk, drive, layers, listings)
        return iter((self.walk, self.drive, self.layers, self.listings))


def _deg_offsets(spec):
    dlat = spec.extent_km / KM_PER_DEG_LAT
    dlon = spec.extent_km / (KM_PER_DEG_LAT * math.cos(math.radians(spec.center_lat)))
    return dlat, dlon


def _grid_network(spec, side, rng, kind, id_offset):
    dlat, dlon = _deg_offsets(spec)
    step_lat, step_lon = dlat / max(side - 1, 1), dlon / max(side - 1, 1)
    ii, jj = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    lat = spec.center_lat - dlat / 2 + ii.ravel() * step_lat
    lon = spec.center_lon - dlon / 2 + jj.ravel() * step_lon
    lat = lat + rng.uniform(-spec.jitter, spec.jitter, lat.size) * step_lat
    lon = lon + rng.uniform(-spec.jitter, spec.jitter, lon.size) * step_lon
    idx = np.arange(side * side).reshape(side, side)
    u = np.concatenate([idx[:, :-1].ravel(), idx[:-1, :].ravel()])
    v = np.concatenate([idx[:, 1:].ravel(), idx[1:, :].ravel()])
    keep = rng.random(u.size) >= spec.edge_drop
    u, v = u[keep], v[keep]
    # streets are never shorter than the straight line
    length = haversine_m(lat[u], lon[u], lat[v], lon[v]) * (1.0 + 0.2 * rng.random(u.size))
    ids = idx.ravel() + id_offset
    return Network(ids, lat, lon, ids[u], ids[v], length, kind=kind)


def _bump_field(lat, lon, centers, scales, weights, spec):
    # sum of Gaussian bumps in local km coordinates
    y = (lat - spec.center_lat) * KM_PER_DEG_LAT
    x = (lon - spec.center_lon) * KM_PER_DEG_LAT * math.cos(math.radians(spec.center_lat))
    out = np.zeros(lat.size)
    for (cy, cx), s, w in zip(centers, scales, weights):
        out += w * np.exp(-((y - cy) ** 2 + (x - cx) ** 2) / (2 * s * s))
    return out


def _random_field(rng, spec, n_bumps, scale_km):
    half = spec.extent_km / 2
    centers = rng.uniform(-half, half, size=(n_bumps, 2))
    scales = scale_km * rng.uniform(0.5, 1.5, n_bumps)
    weights = rng.uniform(0.5, 1.5, n_bumps)
    return lambda lat, lon: _bump_field(lat, lon, centers, scales, weights, spec)


def _share(field_values, lo, hi):
    f = field_values / (field_values.max() or 1.0)
    return lo + (hi - lo) * f


def _layers(spec, walk, drive, rng):
    density = _random_field(rng, spec, spec.n_centers, spec.extent_km / 8)
    employment = _random_field(rng, spec, max(2, spec.n_centers // 2), spec.extent_km / 14)
    affluence = _random_field(rng, spec, spec.n_centers, spec.extent_km / 6)
    age = _random_field(rng, spec, spec.n_centers, spec.extent_km / 6)
    family = _random_field(rng, spec, spec.n_centers, spec.extent_km / 6)
    groups = [_random_field(rng, spec, spec.n_centers, spec.extent_km / 7) for _ in range(3)]

    def walk_layers(lat, lon, ids):
        dens = density(lat, lon)
        units = rng.poisson(5.0 + 60.0 * dens)
        jobs = rng.poisson(2.0 + 150.0 * employment(lat, lon) + 10.0 * dens)
        rich = rng.binomial(units, _share(affluence(lat, lon), 0.05, 0.45))
        singles = rng.binomial(units, _share(dens, 0.15, 0.55))
        elderly = rng.binomial(units, _share(age(lat, lon), 0.08, 0.35))
        children = rng.binomial(units, _share(family(lat, lon), 0.10, 0.45))
        has_units = units > 0
        # sqft per unit is observed only where housing exists
        sqft = np.exp(rng.normal(np.log(1400.0) - 0.5 * dens / (dens.max() or 1.0), 0.2))
        out = {
            "units": AttributeLayer("units", ids, units),
            "sqft_per_unit": AttributeLayer("sqft_per_unit", ids[has_units], sqft[has_units]),
            "hh_rich": AttributeLayer("hh_rich", ids, rich),
            "hh_singles": AttributeLayer("hh_singles", ids, singles),
            "hh_elderly": AttributeLayer("hh_elderly", ids, elderly),
            "hh_children": AttributeLayer("hh_children", ids, children),
            "jobs": AttributeLayer("jobs", ids, jobs),
        }
        return out, units

    walk_out, walk_units = walk_layers(walk.lat, walk.lon, walk.node_ids)

    lat, lon, ids = drive.lat, drive.lon, drive.node_ids
    area_ratio = walk.n_nodes / drive.n_nodes
    dens = density(lat, lon)
    pop = rng.poisson(area_ratio * (12.0 + 150.0 * dens))
    drive_out = {
        "jobs": AttributeLayer("jobs", ids, rng.poisson(area_ratio * (2.0 + 150.0 * employment(lat, lon)))),
        "pop": AttributeLayer("pop", ids, pop),
        "pop_black": AttributeLayer("pop_black", ids, rng.binomial(pop, _share(groups[0](lat, lon), 0.02, 0.30))),
        "pop_hisp": AttributeLayer("pop_hisp", ids, rng.binomial(pop, _share(groups[1](lat, lon), 0.05, 0.40))),
        "pop_asian": AttributeLayer("pop_asian", ids, rng.binomial(pop, _share(groups[2](lat, lon), 0.05, 0.40))),
    }
    return {"walk": walk_out, "drive": drive_out}, walk_units


def _place_listings(spec, walk, walk_units, rng):
    weights = walk_units + 1.0
    nodes = rng.choice(walk.n_nodes, size=spec.n_listings, p=weights / weights.sum())
    dlat, dlon = _deg_offsets(spec)
    side = math.isqrt(walk.n_nodes)
    half_lat = 0.5 * dlat / max(side - 1, 1)
    half_lon = 0.5 * dlon / max(side - 1, 1)
    lat = walk.lat[nodes] + rng.uniform(-half_lat, half_lat, spec.n_listings)
    lon = walk.lon[nodes] + rng.uniform(-half_lon, half_lon, spec.n_listings)
    sqft = np.clip(np.exp(rng.normal(np.log(900.0), 0.4, spec.n_listings)), 250.0, 6000.0)
    return lat, lon, np.round(sqft)


def _standardize(col):
    sd = col.std()
    return (col - col.mean()) / sd if sd > 0 else np.zeros_like(col)


def _interactions(X, names):
    z = {name: _standardize(X[:, j]) for j, name in enumerate(names)}

    def ramp(v):
        return np.clip(v, 0.0, 2.0)

    # bounded products and kinks that a linear fit cannot absorb
    terms = [
        np.tanh(z["jobs_10000"] * z["res_sqft_per_unit"]),
        np.tanh(z["rich_500_walk"] * z["units_500_walk"]),
        ramp(z["jobs_1500_walk"]) - ramp(-z["sqft_unit_500_walk"]),
        np.where(z["pop_hisp_10000"] > 0.5, 1.0, -0.5) * np.tanh(z["singles_500_walk"]),
        np.cos(1.5 * z["jobs_25000"]),
    ]
    return _standardize(np.sum(terms, axis=0))


def _positive_floor(signal, knee=SIGNAL_FLOOR):
    # identity above the knee, smooth exponential approach to zero below it
    low = signal < knee
    if not np.any(low):
        return signal
    out = signal.copy()
    out[low] = knee * np.exp((signal[low] - knee) / knee)
    return out


def generate_synthetic_region(spec=RegionSpec(), seed=0, threads=None):
    """Generate networks, attribute layers and priced listings.

    Same ``spec`` and ``seed`` give bit-identical outputs. Unpacks as
    ``walk, drive, layers, listings``; ``.truth`` holds the generating
    function and its components.
    """
    streams = np.random.SeedSequence(seed).spawn(6)
    rng_walk, rng_drive, rng_layers, rng_place, rng_field, rng_noise = (
        np.random.default_rng(s) for s in streams
    )
    side = max(4, math.isqrt(spec.n_nodes))
    walk = _grid_network(spec, side, rng_walk, "walk", 1)
    drive = _grid_network(spec, max(3, side // 2), rng_drive, "drive", DRIVE_ID_OFFSET)
    layers, walk_units = _layers(spec, walk, drive, rng_layers)
    lat, lon, sqft = _place_listings(spec, walk, walk_units, rng_place)

    ids = np.arange(1, spec.n_listings + 1)
    feats = accessibility_matrix(lat, lon, walk, drive, layers, DEFAULT_FEATURE_SPEC, threads)
    placeholder = ListingTable.from_arrays(ids, lat, lon, np.ones_like(sqft), sqft, feats)
    design = build_design(placeholder, percentile=spec.clip_percentile)
    if design.n != spec.n_listings:
        raise DegenerateInputError("generated features produced invalid rows")
    X, names = design.X, design.column_names

    beta = np.zeros(len(names))
    for j, name in enumerate(names[1:], start=1):
        beta[j] = spec.linear_scale * spec.coefficients.get(name, 0.0)
    linear_wo_intercept = X @ beta

    if spec.nonlinearity > 0:
        g = _interactions(X, names)
        # project out the linear span so beta stays the best linear predictor
        g = g - X @ np.linalg.lstsq(X, g, rcond=None)[0]
        nonlinear = spec.nonlinearity * _standardize(g)
    else:
        nonlinear = np.zeros(design.n)
    if spec.omitted_strength > 0:
        omitted_field = _random_field(rng_field, spec, 4 * spec.n_centers, spec.omitted_scale_km)
        omitted = spec.omitted_strength * _standardize(omitted_field(lat, lon))
    else:
        omitted = np.zeros(design.n)

    # center the log target on the requested mean rent per sqft
    beta[0] = math.log1p(spec.target_mean) - float(np.mean(linear_wo_intercept + nonlinear + omitted))
    linear = X @ beta
    signal = _positive_floor(linear + nonlinear + omitted)
    nonlinear = signal - linear - omitted
    sigma = spec.noise_sigma * float(np.std(signal)) if spec.noise_relative else spec.noise_sigma
    noise = sigma * rng_noise.standard_normal(design.n)
    # redraw the rare draws that would make the rent non-positive
    bad = signal + noise <= 0
    while np.any(bad):
        noise[bad] = sigma * rng_noise.standard_normal(int(bad.sum()))
        bad = signal + noise <= 0
    y = signal + noise

    rent = np.expm1(y) * sqft
    listings = ListingTable.from_arrays(ids, lat, lon, rent, sqft)
    truth = GroundTruth(
        column_names=tuple(names),
        beta=beta,
        features=feats,
        noise_sigma=sigma,
        X=X,
        y=y,
        linear=linear,
        nonlinear=nonlinear,
        omitted=omitted,
        noise=noise,
        clip_thresholds=dict(design.record.clip_thresholds),
        spec=spec,
        seed=int(seed),
    )
    return SyntheticRegion(walk, drive, layers, listings, truth)


__all__ = [
    "DEFAULT_COEFFICIENTS",
    "GroundTruth",
    "RegionSpec",
    "SyntheticRegion",
    "generate_synthetic_region",
]
