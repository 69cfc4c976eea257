import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from poisson_ddrm.noise import (BridgeSpec, NoiseSchedule, bridge_at, bridge_variance, make_schedule,
                                sample_bridge_coeffs, sample_brownian_bridge, sample_iid_gaussian)
from poisson_ddrm.spectral import dst_forward


def test_iid_zero_sigma(grid16):
    assert not sample_iid_gaussian(grid16, 0.0, 1).any()


def test_iid_moments(grid64):
    sigma = 1e-6
    z = sample_iid_gaussian(grid64, sigma, 7, size=245)  # just over 10^6 values
    assert z.size >= 10**6
    assert abs(z.mean()) < 4 * sigma / 1e3
    assert abs(z.std() / sigma - 1) < 0.01


def test_iid_determinism(grid16):
    a = sample_iid_gaussian(grid16, 1.0, 99)
    b = sample_iid_gaussian(grid16, 1.0, 99)
    assert a.tobytes() == b.tobytes()
    with pytest.raises(ValueError):
        sample_iid_gaussian(grid16, -1.0, 0)


def test_single_mode_bridge(grid16):
    s = np.zeros((16, 16))
    s[0, 0] = 0.3
    spec = BridgeSpec(s)
    w = sample_bridge_coeffs(grid16, spec, 5)
    z = sample_brownian_bridge(grid16, spec, 5)
    assert np.count_nonzero(w) == 1
    assert np.allclose(z, w[0, 0] * oracles.mode_field(16, 1, 1), atol=1e-15)


def test_bridge_coefficients_recovered(grid64):
    spec = BridgeSpec.constant(grid64, 1e-6)
    w = sample_bridge_coeffs(grid64, spec, 3)
    z = sample_brownian_bridge(grid64, spec, 3)
    assert np.max(np.abs(dst_forward(z) - w)) < 1e-12


def test_bridge_centre_variance(grid64):
    spec = BridgeSpec.constant(grid64, 1e-6)
    assert bridge_variance(spec, 0.5, 0.5) == pytest.approx(1024e-12, rel=1e-12)
    rng = np.random.default_rng(0)
    vals = np.concatenate([bridge_at(sample_bridge_coeffs(grid64, spec, rng, size=1000), 0.5, 0.5)
                           for _ in range(10)])
    assert abs(vals.var(ddof=1) / 1024e-12 - 1) < 0.05


def test_bridge_variance_matches_grid_formula(grid16):
    spec = BridgeSpec(np.random.default_rng(1).random((16, 16)))
    x = grid16.coords()
    S = oracles.sine_table(16)
    direct = np.einsum("nm,n,m->", spec.sigma_nm**2, S[:, 4] ** 2, S[:, 9] ** 2)
    assert bridge_variance(spec, x[4], x[9]) == pytest.approx(direct, rel=1e-12)


def test_bridge_spec_validation(grid16):
    with pytest.raises(ValueError):
        BridgeSpec(-np.ones((4, 4)))
    with pytest.raises(ValueError):
        BridgeSpec(np.ones((4, 5)))
    with pytest.raises(ValueError):
        sample_bridge_coeffs(grid16, BridgeSpec(np.ones((4, 4))), 0)


def test_schedule_examples():
    assert np.allclose(make_schedule(2, 0.01, 1.0).sigmas, [0, 0.01, 1.0])
    assert make_schedule(3, 0.01, 1.0).sigmas[2] == pytest.approx(0.1)
    s = make_schedule()
    assert s.T == 100 and s.sigmas[0] == 0 and s.sigma_max == pytest.approx(2.0)
    assert s.sigmas[1] == pytest.approx(0.01)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 300), st.floats(1e-4, 1.0), st.floats(1.01, 100.0))
def test_schedule_monotone(T, lo, factor):
    s = make_schedule(T, lo, lo * factor).sigmas
    assert s[0] == 0 and np.all(np.diff(s) > 0) and len(s) == T + 1


@pytest.mark.parametrize("bad", [[0.1, 0.2], [0.0, 0.2, 0.2], [0.0], [[0.0, 1.0]]])
def test_schedule_validation(bad):
    with pytest.raises(ValueError):
        NoiseSchedule(bad)


def test_make_schedule_validation():
    for args in [(0, 0.01, 1), (10, 1.0, 0.5), (10, 0.0, 1.0)]:
        with pytest.raises(ValueError):
            make_schedule(*args)
    with pytest.raises(ValueError):
        make_schedule(10, 0.01, 1.0, "linear")
