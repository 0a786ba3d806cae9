import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secagg_sim.errors import EmptyDataset
from secagg_sim.network import (
    DEFAULT_NOISE,
    DEFAULT_SERVER,
    NO_NOISE,
    ConstantLatency,
    DenseLatency,
    EndpointSample,
    NoiseModel,
    constant_matrix,
    default_dataset_path,
    empirical_matrix,
    great_circle_m,
    load_endpoints,
    load_matrix,
    sample_delay,
    save_matrix,
    zero_matrix,
)

MS = 1_000_000


def test_constant_matrix_examples():
    assert not zero_matrix(3).to_array().any()
    m = constant_matrix(3, 5_000_000_000).to_array()
    assert m.shape == (4, 4)
    assert np.all(m[~np.eye(4, dtype=bool)] == 5_000_000_000)
    assert np.all(np.diag(m) == 0)
    assert constant_matrix(1, 7).to_array().tolist() == [[0, 7], [7, 0]]
    with pytest.raises(ValueError):
        constant_matrix(2, -1)


def test_geo_examples():
    same = [EndpointSample(10.0, 20.0, 10 * MS)]
    m = empirical_matrix(same, 2, np.random.default_rng(0), server_sample=same[0], noise=NO_NOISE)
    assert m.delay(1, 2) == 20 * MS
    antipodal = empirical_matrix(
        [EndpointSample(0.0, 180.0, 0)], 1, np.random.default_rng(0), EndpointSample(0.0, 0.0, 0), NO_NOISE
    )
    expected_ns = math.pi * 6_371_000 / 2e8 * 1e9
    assert antipodal.delay(0, 1) == pytest.approx(expected_ns, abs=1)
    assert antipodal.delay(0, 1) == pytest.approx(100.07 * MS, rel=1e-4)
    with pytest.raises(EmptyDataset):
        empirical_matrix([], 3, np.random.default_rng(0))


def test_great_circle_known_distance():
    # London to Paris is about 344 km
    assert great_circle_m(51.5074, -0.1278, 48.8566, 2.3522) == pytest.approx(343_500, rel=0.01)


def test_geo_dense_form_matches_pointwise_and_is_deterministic():
    samples = load_endpoints(default_dataset_path())
    assert len(samples) == 1000
    a = empirical_matrix(samples, 30, np.random.default_rng(5))
    b = empirical_matrix(samples, 30, np.random.default_rng(5))
    dense = a.to_array()
    assert np.array_equal(dense, b.to_array())
    for i, j in [(0, 1), (3, 17), (29, 30), (5, 5)]:
        assert dense[i, j] == a.delay(i, j)
    assert np.all(dense >= 0) and np.all(np.diag(dense) == 0)
    assert np.array_equal(dense, dense.T)
    # server is the datacenter profile
    assert a.latitude[0] == DEFAULT_SERVER.latitude


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**9), st.integers(0, 2**32))
def test_noise_never_undercuts_the_floor(base, seed):
    rng = np.random.default_rng(seed)
    m = ConstantLatency(2, base, DEFAULT_NOISE)
    assert all(sample_delay(m, 0, 1, rng) >= base for _ in range(20))


def test_zero_noise_is_exact():
    m = constant_matrix(2, 1234)
    rng = np.random.default_rng(0)
    assert sample_delay(m, 1, 2, rng) == 1234
    assert sample_delay(m, 1, 1, rng) == 0


@pytest.mark.parametrize("kind", ["lognormal", "exponential"])
def test_noise_mean(kind):
    base = 10 * MS
    noise = NoiseModel(kind, scale_ns=2 * MS, relative=0.1)
    m = ConstantLatency(1, base, noise)
    rng = np.random.default_rng(1)
    draws = np.array([sample_delay(m, 0, 1, rng) for _ in range(10_000)])
    assert draws.mean() == pytest.approx(base + 2 * MS + 0.1 * base, rel=0.05)


def test_default_noise_tail_under_twenty_percent():
    rng = np.random.default_rng(2)
    base = 50 * MS
    extra = np.array([DEFAULT_NOISE.sample(base, rng) for _ in range(20_000)])
    assert np.percentile(extra, 99) <= 0.2 * base


def test_noise_validation():
    with pytest.raises(ValueError):
        NoiseModel("gaussian")
    with pytest.raises(ValueError):
        NoiseModel("lognormal", scale_ns=-1)


def test_endpoint_validation():
    with pytest.raises(ValueError):
        EndpointSample(91, 0, 0)
    with pytest.raises(ValueError):
        EndpointSample(0, 0, -5)


def test_dense_validation():
    with pytest.raises(ValueError):
        DenseLatency(np.ones((2, 3), dtype=np.int64))
    with pytest.raises(ValueError):
        DenseLatency(np.ones((2, 2), dtype=np.int64))
    d = DenseLatency(np.array([[0, 3], [4, 0]]))
    assert d.delay(0, 1) == 3 and d.delay(1, 0) == 4 and d.n_parties == 1


@pytest.mark.parametrize("suffix", [".npy", ".csv"])
def test_matrix_round_trip(tmp_path, suffix):
    m = empirical_matrix(load_endpoints(default_dataset_path()), 6, np.random.default_rng(3))
    path = tmp_path / f"lat{suffix}"
    save_matrix(m, path)
    assert np.array_equal(load_matrix(path).to_array(), m.to_array())


def test_load_endpoints_errors(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("lat,lon,latency_ms\n")
    with pytest.raises(EmptyDataset):
        load_endpoints(empty)
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n1,2\n")
    with pytest.raises(ValueError):
        load_endpoints(bad)
