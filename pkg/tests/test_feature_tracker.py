import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairtrack.feature_tracker import (
    GroupTrackerBank,
    NiwState,
    niw_predict_reset,
    niw_update,
    sample_features,
    sample_features_sobol,
    with_intercept,
)

SAMPLERS = [sample_features, sample_features_sobol]


def test_lambda_increment_from_beta():
    post = niw_update(NiwState.default_prior(2, 49.0, 4.0), np.array([0.3, -0.2]))
    assert post.lam == 50.0
    assert post.nu == 5.0


def test_update_arithmetic():
    phi = np.array([[2.0, 0.5], [0.5, 1.0]])
    post = niw_update(NiwState(np.zeros(2), 1.0, phi, 5.0), np.array([2.0, 2.0]))
    np.testing.assert_array_equal(post.m, [1.0, 1.0])
    np.testing.assert_allclose(post.phi, phi + 0.5 * np.array([[4.0, 4.0], [4.0, 4.0]]))
    assert post.nu == 6.0


def test_zero_residual_leaves_location_and_scatter():
    prior = NiwState(np.array([0.5, -1.5]), 10.0, np.eye(2) * 3, 7.0)
    post = niw_update(prior, prior.m.copy())
    np.testing.assert_array_equal(post.m, prior.m)
    np.testing.assert_array_equal(post.phi, prior.phi)


def test_reset():
    post = NiwState(np.array([1.0, 2.0]), 50.0, np.eye(2), 9.0)
    prior = niw_predict_reset(post, 49.0)
    assert prior.lam == 49.0
    assert prior.nu == post.nu
    np.testing.assert_array_equal(prior.m, post.m)
    np.testing.assert_array_equal(prior.phi, post.phi)
    assert niw_predict_reset(post, 50.0) == post or niw_predict_reset(post, 50.0).lam == 50.0


@settings(max_examples=30, deadline=None)
@given(st.floats(1.5, 500.0), st.integers(0, 2**32 - 1))
def test_update_reset_cycles_bound_lambda_and_keep_phi_pd(beta, seed):
    rng = np.random.default_rng(seed)
    s = NiwState.default_prior(3, beta)
    for _ in range(40):
        s = niw_update(s, rng.standard_normal(3) * 10)
        assert beta <= s.lam <= beta + 1
        np.linalg.cholesky(s.phi)
        assert np.max(np.abs(s.phi - s.phi.T)) == 0.0
        s = niw_predict_reset(s, beta)
        assert s.lam == beta


def test_invalid_states_rejected():
    with pytest.raises(ValueError):
        NiwState(np.zeros(2), 0.0, np.eye(2), 4.0)
    with pytest.raises(ValueError):
        NiwState(np.zeros(3), 1.0, np.eye(3), 1.5)


@pytest.mark.parametrize("sampler", SAMPLERS)
def test_sampling_requires_nu_above_n(sampler):
    state = NiwState(np.zeros(2), 5.0, np.eye(2), 3.0)  # N = 3
    with pytest.raises(ValueError):
        sampler(state, 10, np.random.default_rng(0))


@pytest.mark.parametrize("sampler", SAMPLERS)
def test_gaussian_limit_sample_mean(sampler):
    m = np.array([1.5, -2.0])
    state = NiwState(m, 1e6, np.eye(2) * 1e6, 1e6)
    draws = sampler(state, 100_000, np.random.default_rng(1))
    np.testing.assert_allclose(draws.mean(axis=0), m, atol=0.05)


@pytest.mark.parametrize("sampler", SAMPLERS)
def test_multivariate_t_covariance(sampler):
    lam, nu = 49.0, 100.0
    state = NiwState(np.zeros(2), lam, np.eye(2), nu)
    draws = sampler(state, 100_000, np.random.default_rng(2))
    # N = 3: df = nu - 1, scale = (lam+1)/(lam df) phi, cov = df/(df-2) scale
    df = nu - 1
    expected = df / (df - 2) * (lam + 1) / (lam * df) * np.eye(2)
    got = np.cov(draws, rowvar=False)
    np.testing.assert_allclose(np.diag(got), np.diag(expected), rtol=0.05)
    assert abs(got[0, 1]) < 0.05 * expected[0, 0]


def test_intercept_extension():
    xs = with_intercept(sample_features(NiwState.default_prior(2, 5.0, 6.0), 7,
                                        np.random.default_rng(0)))
    assert xs.shape == (7, 3)
    assert np.all(xs[:, -1] == 1.0)


def test_bank_isolates_groups_and_initialises_new_ones():
    prior = NiwState.default_prior(2, 49.0, 4.0)
    bank = GroupTrackerBank.for_groups((0, 1), prior, 49.0)
    bank.observe(0, np.array([3.0, 4.0]))
    assert bank.states[1] is prior
    assert bank.states[0].lam == 50.0
    bank.observe(5, np.array([1.0, 1.0]))
    assert bank.states[5].nu == prior.nu + 1
    bank.rollover()
    assert all(s.lam == 49.0 for s in bank.states.values())


def test_bank_rejects_unknown_sampler():
    with pytest.raises(ValueError):
        GroupTrackerBank(NiwState.default_prior(2, 1.0), 1.0, sampler="magic")
