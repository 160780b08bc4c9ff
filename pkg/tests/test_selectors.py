import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ldp_select.mech_local import LocalMechConfig, privatize_local
from ldp_select.noise import make_gaussian
from ldp_select.selectors import (PolicyKind, ThresholdSelector, resolve_policy, select_abs,
                                  select_plus, threshold_means)
from ldp_select.sparse_model import generate, hamming, worst_case_theta

GAUSS = make_gaussian()


def _with_means(means, n=4):
    # n identical rows give exactly these column means
    return np.tile(np.asarray(means, dtype=float), (n, 1))


def test_select_plus_examples():
    np.testing.assert_array_equal(select_plus(_with_means([0.9, 0.1]), 0.5).eta_hat, [1, 0])
    np.testing.assert_array_equal(select_plus(_with_means([0.9, 0.1]), 5.0).eta_hat, [0, 0])
    np.testing.assert_array_equal(select_plus(_with_means([0.9, 0.1]), math.inf).eta_hat, [0, 0])


def test_select_abs_example():
    np.testing.assert_array_equal(select_abs(_with_means([-0.9, 0.1]), 0.5).eta_hat, [1, 0])


@pytest.mark.parametrize("tau", [0.0, -1.0, math.nan])
def test_tau_must_be_positive(tau):
    with pytest.raises(ValueError):
        select_plus(_with_means([1.0]), tau)


matrices = arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 8)),
                  elements=st.floats(-5, 5, allow_subnormal=False))
taus = st.floats(1e-3, 4.0)


@given(matrices, taus, taus)
def test_threshold_monotone(Z, t1, t2):
    lo, hi = sorted((t1, t2))
    assert np.all(select_plus(Z, hi).eta_hat <= select_plus(Z, lo).eta_hat)


@given(matrices, taus)
def test_abs_dominates_plus_and_is_sign_invariant(Z, tau):
    abs_out = select_abs(Z, tau).eta_hat
    assert np.all(abs_out >= select_plus(Z, tau).eta_hat)
    np.testing.assert_array_equal(select_abs(-Z, tau).eta_hat, abs_out)


@given(matrices, taus, st.data())
def test_separable(Z, tau, data):
    j = data.draw(st.integers(0, Z.shape[1] - 1))
    noise = data.draw(arrays(np.float64, Z.shape, elements=st.floats(-5, 5, allow_subnormal=False)))
    Z2 = noise.copy()
    Z2[:, j] = Z[:, j]
    assert select_plus(Z, tau).eta_hat[j] == select_plus(Z2, tau).eta_hat[j]
    assert select_abs(Z, tau).eta_hat[j] == select_abs(Z2, tau).eta_hat[j]


@given(matrices, taus, st.randoms())
def test_exchangeable(Z, tau, rnd):
    perm = list(range(Z.shape[1]))
    rnd.shuffle(perm)
    np.testing.assert_array_equal(select_plus(Z[:, perm], tau).eta_hat, select_plus(Z, tau).eta_hat[perm])


def test_threshold_means_matches_matrix_path():
    Z = np.random.default_rng(0).normal(size=(30, 5))
    np.testing.assert_array_equal(threshold_means(Z.mean(axis=0), 0.1, True), select_abs(Z, 0.1).eta_hat)


def test_abs_beats_plus_on_signed_supports():
    d, s, n = 8, 4, 4000
    cfg = LocalMechConfig(8.0, d)
    theta = worst_case_theta(d, s, 3.0, "SIGNED", (1, -1, 1, -1))
    rng = np.random.default_rng(12)
    loss_abs = loss_plus = 0
    for _ in range(20):
        Z = privatize_local(generate(theta, n, 1.0, GAUSS, rng), cfg, rng)
        loss_abs += hamming(select_abs(Z.Z, 0.48).eta_hat, theta.support)
        loss_plus += hamming(select_plus(Z.Z, 0.48).eta_hat, theta.support)
    assert loss_abs <= loss_plus
    assert loss_plus >= 20 * 2  # the negative signals are always missed


def test_policy_large_a():
    pol = resolve_policy("LARGE_A", "LOCAL", GAUSS, a=2.0, sigma=1.0, alpha=1.0, d=10)
    assert pol.tau == pytest.approx(0.47725, abs=1e-5)
    assert pol.valid


def test_policy_small_a():
    pol = resolve_policy(PolicyKind.SMALL_A, "GLOBAL", GAUSS, a=1.0, sigma=1.0, alpha=1.0, d=5)
    assert pol.tau == pytest.approx(0.053991, abs=1e-6)
    assert pol.valid


def test_policy_regime_mismatch_flag():
    pol = resolve_policy("SMALL_A", "LOCAL", GAUSS, a=3.0, sigma=1.0, alpha=1.0, d=10)
    assert "tau < 2a/sigma*p(2) holds but regime mismatched (a >= 2*sigma)" in pol.validity_flags
    pol = resolve_policy("LARGE_A", "LOCAL", GAUSS, a=1.0, sigma=1.0, alpha=1.0, d=10)
    assert not pol.valid


def test_policy_local_budget_flags():
    pol = resolve_policy("LARGE_A", "LOCAL", GAUSS, a=3.0, sigma=1.0, alpha=100.0, d=1)
    assert "tau*alpha/(8d) <= 1 fails" in pol.validity_flags


def test_policy_auto_and_manual():
    assert resolve_policy("AUTO", "LOCAL", GAUSS, 3.0, 1.0, 1.0, 10).kind is PolicyKind.LARGE_A
    assert resolve_policy("AUTO", "LOCAL", GAUSS, 0.5, 1.0, 1.0, 10).kind is PolicyKind.SMALL_A
    assert resolve_policy("MANUAL", "GLOBAL", GAUSS, 3.0, 1.0, 1.0, 3, tau=0.2).tau == 0.2
    with pytest.raises(ValueError):
        resolve_policy("MANUAL", "GLOBAL", GAUSS, 3.0, 1.0, 1.0, 3)
    pol = resolve_policy("MANUAL", "GLOBAL", GAUSS, 3.0, 1.0, 1.0, 3, tau=math.inf)
    assert "tau is infinite: selector never fires" in pol.validity_flags


def test_selector_estimator():
    Z = _with_means([0.9, 0.1, -0.8])
    sel = ThresholdSelector(tau=0.5).fit(Z)
    np.testing.assert_array_equal(sel.get_support(), [True, False, False])
    assert sel.transform(Z).shape == (4, 1)
    sel = ThresholdSelector(tau=0.5, absolute=True).fit(Z)
    np.testing.assert_array_equal(sel.get_support(indices=True), [0, 2])
    assert sel.get_params() == {"tau": 0.5, "absolute": True}
