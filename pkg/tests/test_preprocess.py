import math

import numpy as np
import pytest

from hedonic_rent.dataset import ListingTable
from hedonic_rent.exceptions import DegenerateInputError, MissingColumnError
from hedonic_rent.preprocess import (
    INTERCEPT,
    DesignMatrix,
    HedonicPreprocessor,
    TransformRecord,
    apply_transform,
    build_design,
    clip_upper,
    fit_transform_record,
    log1p_column,
)
from hedonic_rent.synth import RegionSpec, generate_synthetic_region


def small_table(n=40, seed=0):
    rng = np.random.default_rng(seed)
    return ListingTable.from_arrays(
        np.arange(n), np.zeros(n), np.zeros(n), rng.uniform(500, 4000, n), rng.uniform(300, 2000, n),
        {"jobs": rng.exponential(100.0, n), "units": rng.integers(0, 50, n).astype(float)},
    )


def test_clip_one_to_hundred():
    clipped, thr = clip_upper(np.arange(1.0, 101.0), 0.99)
    assert thr == pytest.approx(99.01, abs=1e-12)
    assert clipped[-1] == thr
    np.testing.assert_array_equal(clipped[:99], np.arange(1.0, 100.0))


def test_clip_all_equal():
    clipped, thr = clip_upper([4.0] * 6)
    assert thr == 4.0
    assert clipped.tolist() == [4.0] * 6


def test_clip_errors():
    with pytest.raises(ValueError):
        clip_upper([], 0.99)
    with pytest.raises(ValueError):
        clip_upper([1.0, 2.0], 1.0)


def test_clip_frozen_threshold():
    clipped, thr = clip_upper([1.0, 5.0, 9.0], threshold=6.0)
    assert thr == 6.0 and clipped.tolist() == [1.0, 5.0, 6.0]


def test_log1p_values():
    assert log1p_column([0.0])[0] == 0.0
    assert log1p_column([math.e - 1])[0] == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        log1p_column([1.0, -0.5])


def test_two_features_give_p_three():
    design = build_design(small_table(), features=("jobs", "units"))
    assert design.p == 3
    assert design.column_names == (INTERCEPT, "jobs", "units")
    assert np.all(design.X[:, 0] == 1.0)


def test_build_design_is_deterministic():
    a = build_design(small_table(), features=("jobs", "units"))
    b = build_design(small_table(), features=("jobs", "units"))
    assert a.X.tobytes() == b.X.tobytes() and a.y.tobytes() == b.y.tobytes()


def test_only_accessibility_columns_clipped():
    design = build_design(small_table(), features=("res_sqft_per_unit", "jobs"))
    assert set(design.record.clip_thresholds) == {"jobs"}


def test_build_design_errors():
    table = small_table(n=3)
    with pytest.raises(MissingColumnError):
        build_design(table, features=("nope",))
    with pytest.raises(ValueError):
        build_design(table, features=("rent_sqft",))
    with pytest.raises(DegenerateInputError):
        build_design(table, features=("jobs", "units"))


def test_design_invariants():
    with pytest.raises(ValueError):
        DesignMatrix(np.ones((5, 1)), np.zeros(5), (INTERCEPT,))
    with pytest.raises(DegenerateInputError):
        DesignMatrix.from_arrays([[np.nan]] * 5, np.zeros(5))
    X = np.column_stack([np.full(5, 2.0), np.arange(5.0)])
    with pytest.raises(ValueError):
        DesignMatrix(X, np.zeros(5), (INTERCEPT, "x"))


def test_record_round_trip_and_reuse(tmp_path):
    table = small_table()
    record = fit_transform_record(table, features=("jobs", "units"))
    record.save(tmp_path / "t.json")
    back = TransformRecord.load(tmp_path / "t.json")
    assert back == record
    other = small_table(seed=9)
    a = apply_transform(other, back)
    b = apply_transform(other, record)
    assert a.X.tobytes() == b.X.tobytes()
    np.testing.assert_allclose(record.inverse_target(a.y), other.column("rent_sqft"), rtol=1e-12)


def test_preprocessor_estimator():
    table = small_table()
    pre = HedonicPreprocessor(features=("jobs", "units")).fit(table)
    X = pre.transform(table)
    assert X.shape == (40, 3)
    assert list(pre.get_feature_names_out()) == [INTERCEPT, "jobs", "units"]
    assert pre.get_params()["clip_percentile"] == 0.99


def test_noise_free_region_is_exactly_linear():
    region = generate_synthetic_region(RegionSpec(n_listings=800, n_nodes=900, noise_sigma=0.0), seed=3)
    truth = region.truth
    design = build_design(region.listings.with_features(truth.features), features=truth.column_names[1:])
    np.testing.assert_array_equal(design.X, truth.X)
    np.testing.assert_allclose(design.y, design.X @ truth.beta, rtol=0, atol=1e-12)
