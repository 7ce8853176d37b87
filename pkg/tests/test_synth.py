import json

import numpy as np
import pytest

from hedonic_rent.dataset import load_listings
from hedonic_rent.exceptions import DegenerateInputError
from hedonic_rent.netaccess import DEFAULT_FEATURE_SPEC, build_features
from hedonic_rent.synth import DEFAULT_COEFFICIENTS, RegionSpec, generate_synthetic_region

SMALL = RegionSpec(n_listings=400, n_nodes=400)


def test_components_add_up():
    r = generate_synthetic_region(RegionSpec(n_listings=500, n_nodes=500, nonlinearity=0.2, omitted_strength=0.1), 1)
    t = r.truth
    np.testing.assert_allclose(t.y, t.linear + t.nonlinear + t.omitted + t.noise, atol=1e-12)
    np.testing.assert_allclose(t.linear, t.X @ t.beta, atol=1e-12)
    np.testing.assert_allclose(np.expm1(t.y), r.listings.column("rent_sqft"), rtol=1e-9)


def test_deterministic():
    a = generate_synthetic_region(SMALL, 5)
    b = generate_synthetic_region(SMALL, 5)
    c = generate_synthetic_region(SMALL, 6)
    assert a.listings.frame.equals(b.listings.frame)
    assert not a.listings.frame.equals(c.listings.frame)


def test_truth_features_match_network_computation():
    r = generate_synthetic_region(SMALL, 2)
    walk, drive, layers, listings = r
    table = build_features(listings, walk, drive, layers, DEFAULT_FEATURE_SPEC)
    for name in DEFAULT_FEATURE_SPEC.names:
        np.testing.assert_array_equal(table.column(name), r.truth.features[name])


def test_default_coefficients_cover_all_rows():
    assert set(DEFAULT_COEFFICIENTS) == {"res_sqft_per_unit", *DEFAULT_FEATURE_SPEC.names}
    assert DEFAULT_COEFFICIENTS["res_sqft_per_unit"] < 0
    assert all(DEFAULT_COEFFICIENTS[k] > 0 for k in ("jobs_500_walk", "jobs_10000", "jobs_25000"))


def test_files_round_trip(tmp_path):
    r = generate_synthetic_region(SMALL, 3)
    r.listings.to_csv(tmp_path / "l.csv")
    r.truth.save(tmp_path / "gt.json")
    assert load_listings(tmp_path / "l.csv").frame.equals(r.listings.frame)
    data = json.loads((tmp_path / "gt.json").read_text())
    assert data["coefficients"]["intercept"] == pytest.approx(r.truth.beta[0])


def test_spec_validation():
    with pytest.raises(DegenerateInputError):
        RegionSpec(n_nodes=3)
    with pytest.raises(DegenerateInputError):
        RegionSpec(noise_sigma=-1)
    with pytest.raises(DegenerateInputError):
        RegionSpec(coefficients={"bogus": 1.0})
