import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldp_select._base import sgn
from ldp_select.mech_global import (GlobalMechConfig, HypercubeSignMechanism, _log_inv_kd, compute_kd,
                                    conditional_mean_exact, dp_certificate_global, enumerate_pmf,
                                    even_rescale_factor, half_cube_membership, kd_exact,
                                    privatize_global, sample_half_cube)


def test_kd_small_values():
    assert kd_exact(1) == 1
    assert kd_exact(3) == 2
    assert kd_exact(4) == 4
    assert kd_exact(5) == Fraction(8, 3)
    assert compute_kd(5) == pytest.approx(8 / 3, rel=1e-15)


@pytest.mark.parametrize("d", [2, 0, -4])
def test_kd_rejects(d):
    with pytest.raises(ValueError):
        compute_kd(d)


def test_d2_error_names_degeneracy():
    with pytest.raises(ValueError, match="K_d"):
        GlobalMechConfig(1.0, 2)


def test_kd_exact_vs_log_gamma():
    for d in [1, 3, 4, 5, 17, 32, 63, 64]:
        assert math.exp(-_log_inv_kd(d)) == pytest.approx(float(kd_exact(d)), rel=1e-12)


def test_kd_asymptotics():
    for d in [10_000, 10_001]:
        assert compute_kd(d) / math.sqrt(math.pi / 2 * d) == pytest.approx(1.0, abs=0.01)


def test_kd_square_growth():
    # K_10 = 32/7 breaks K_d^2 <= 2d; from d = 11 on it holds
    assert kd_exact(10) ** 2 > 20
    for d in list(range(11, 200)) + [1000, 5001]:
        assert compute_kd(d) ** 2 <= 2 * d


def test_config_fields():
    cfg = GlobalMechConfig(math.log(3), 3)
    assert cfg.pi_alpha == pytest.approx(0.75, rel=1e-15)
    assert cfg.B == pytest.approx(4.0, rel=1e-14)
    assert GlobalMechConfig(1.0, 3, b_scale=2.0).B == pytest.approx(2 * GlobalMechConfig(1.0, 3).B)
    assert GlobalMechConfig(800.0, 3).pi_alpha == 1.0


def test_d1_two_point_law():
    cfg = GlobalMechConfig(1.0, 1)
    pmf = enumerate_pmf([0.3], cfg)
    assert pmf[(cfg.B,)] == pytest.approx(cfg.pi_alpha)
    assert pmf[(-cfg.B,)] == pytest.approx(1 - cfg.pi_alpha)
    assert conditional_mean_exact([-0.3], cfg)[0] == pytest.approx(-1.0, abs=1e-15)


def test_release_values_d3():
    cfg = GlobalMechConfig(math.log(3), 3)
    Z = privatize_global(np.random.default_rng(0).normal(size=(500, 3)), cfg, 1).Z
    assert np.unique(Z).size == 2
    np.testing.assert_allclose(np.abs(Z), 4.0, rtol=1e-14)


def test_membership_checked_on_every_draw():
    rng = np.random.default_rng(1)
    for d in [1, 3, 4, 6, 9]:
        cfg = GlobalMechConfig(1.0, d)
        privatize_global(rng.normal(size=(2000, d)), cfg, rng, check_membership=True)


def test_half_cube_tie_break_d2():
    rng = np.random.default_rng(0)
    draws = np.array([sample_half_cube([1, 1], "A", 1.0, rng) for _ in range(4000)])
    seen = {tuple(r) for r in draws}
    assert seen == {(1.0, 1.0), (1.0, -1.0)}
    assert abs(np.mean(draws[:, 1] > 0) - 0.5) < 4 * 0.5 / math.sqrt(4000)


def test_half_cube_cardinality():
    for d in range(1, 11):
        codes = np.arange(2**d)[:, None]
        verts = 2 * ((codes >> np.arange(d)) & 1) - 1
        for x in verts[:: max(1, 2**d // 16)]:
            assert half_cube_membership(verts, x).sum() == 2 ** (d - 1)


def test_half_cube_uniform_frequencies():
    d, n = 4, 10**5
    rng = np.random.default_rng(7)
    x = np.array([1, -1, 1, 1], dtype=np.int8)
    z = sample_half_cube(np.tile(x, (n, 1)), np.ones(n, bool), 1.0, rng)
    assert np.all(half_cube_membership(z.astype(np.int8), x))
    codes = ((z > 0).astype(int) << np.arange(d)).sum(axis=1)
    counts = np.bincount(codes, minlength=2**d)
    p = 1 / 2 ** (d - 1)
    sd = math.sqrt(n * p * (1 - p))
    hit = counts[counts > 0]
    assert hit.size == 2 ** (d - 1)
    assert np.all(np.abs(hit - n * p) < 4 * sd)


def test_sample_half_cube_orientation_validation():
    with pytest.raises(ValueError):
        sample_half_cube([1, 1, 1], "B", 1.0, np.random.default_rng())


@pytest.mark.parametrize("d", [3, 4, 5])
def test_pmf_values_and_normalization(d):
    cfg = GlobalMechConfig(0.7, d)
    pmf = enumerate_pmf(np.random.default_rng(d).normal(size=d), cfg)
    allowed = np.array([cfg.pi_alpha, 1 - cfg.pi_alpha]) / 2 ** (d - 1)
    vals = np.array(list(pmf.values()))
    assert len(pmf) == 2**d
    assert np.all(np.min(np.abs(vals[:, None] - allowed), axis=1) < 1e-15)
    assert vals.sum() == pytest.approx(1.0, abs=1e-12)


def test_pmf_ratio_d3():
    cfg = GlobalMechConfig(math.log(3), 3)
    vals = list(enumerate_pmf([1, 1, 1], cfg).values())
    assert max(vals) / min(vals) == pytest.approx(3.0, rel=1e-14)


def test_enumeration_budget():
    with pytest.raises(ValueError):
        enumerate_pmf(np.ones(21), GlobalMechConfig(1.0, 21))


def test_dp_certificate_examples():
    cfg = GlobalMechConfig(1.0, 4)
    x = np.array([0.5, -1, 2, 3])
    assert dp_certificate_global(cfg, x, x) == 1.0
    assert dp_certificate_global(cfg, np.ones(4), -np.ones(4)) == pytest.approx(math.e, rel=1e-14)
    rng = np.random.default_rng(0)
    for d in [3, 4, 5]:
        cfg = GlobalMechConfig(1.3, d)
        worst = max(dp_certificate_global(cfg, rng.normal(size=d), rng.normal(size=d)) for _ in range(1000))
        assert worst <= math.exp(1.3) + 1e-12


@pytest.mark.parametrize("d", [1, 3, 4, 5, 6, 7, 8])
def test_conditional_mean_is_sign(d):
    rng = np.random.default_rng(d)
    for alpha in [0.5, 1.0, math.log(3)]:
        cfg = GlobalMechConfig(alpha, d)
        for _ in range(20):
            x = rng.normal(size=d)
            np.testing.assert_allclose(conditional_mean_exact(x, cfg), sgn(x), atol=1e-10, rtol=0)


def test_even_rescale_factor():
    assert even_rescale_factor(4) == pytest.approx(1 / 3)
    assert even_rescale_factor(5) == 1.0


def test_tampered_scale_breaks_unbiasedness():
    cfg = GlobalMechConfig(1.0, 3, b_scale=2.0)
    x = np.array([1.0, -1.0, 0.5])
    np.testing.assert_allclose(conditional_mean_exact(x, cfg), 2 * sgn(x))


def test_monte_carlo_mean_matches_exact():
    d, n = 5, 10**5
    cfg = GlobalMechConfig(1.0, d)
    x = np.array([0.2, -0.4, 1.0, -3.0, 0.1])
    Z = privatize_global(np.tile(x, (n, 1)), cfg, np.random.default_rng(3)).Z
    se = Z.std(axis=0) / math.sqrt(n)
    assert np.all(np.abs(Z.mean(axis=0) - conditional_mean_exact(x, cfg)) < 4 * se)
    # per-coordinate variance is at most B^2
    assert np.all(Z.var(axis=0) <= cfg.B**2 * (1 + 1e-12))


def test_even_monte_carlo_mean():
    d, n = 4, 10**5
    cfg = GlobalMechConfig(1.0, d)
    x = np.array([-1.0, 2.0, 0.0, -0.5])
    Z = privatize_global(np.tile(x, (n, 1)), cfg, np.random.default_rng(5)).Z
    se = Z.std(axis=0) / math.sqrt(n)
    assert np.all(np.abs(Z.mean(axis=0) - sgn(x)) < 4 * se)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 9).filter(lambda d: d != 2), st.floats(0.05, 5.0), st.integers(0, 2**32 - 1))
def test_dp_certificate_property(d, alpha, seed):
    cfg = GlobalMechConfig(alpha, d)
    rng = np.random.default_rng(seed)
    x, xp = rng.normal(size=(2, d))
    assert dp_certificate_global(cfg, x, xp) <= math.exp(alpha) * (1 + 1e-12)
    assert dp_certificate_global(cfg, x, -x) == pytest.approx(math.exp(alpha), rel=1e-10)


def test_estimator_api():
    X = np.random.default_rng(0).normal(size=(30, 5))
    mech = HypercubeSignMechanism(alpha=1.0, random_state=0).fit(X)
    assert mech.kd_ == pytest.approx(8 / 3)
    assert mech.bound_ == pytest.approx(8 / 3 / math.tanh(0.5))
    Z = mech.transform(X)
    assert np.allclose(np.abs(Z), mech.bound_)
    with pytest.raises(ValueError):
        HypercubeSignMechanism().fit(np.zeros((3, 2)))
