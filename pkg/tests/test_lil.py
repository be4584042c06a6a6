import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elephantwalk.bvn import normal_sf
from elephantwalk.lil import (GeometricGrid, alpha_diagnostic, block_quantities, borell_tis_bound,
                              delta_corr, delta_decay_check, delta_sequence, er_ratio, er_ratio_table,
                              event_prob, expected_event_count, gamma_block, l_coefficient,
                              lil_statistic, threshold)
from elephantwalk.rng import StreamKey
from elephantwalk.sgp import ERWDiff, FBM, Kernel, RLFBM, StableSpectral, kernel_eval, sample_paths

VARIANTS = [FBM(0.7), RLFBM(1.0, 0.5), ERWDiff(0.5, 0.6), StableSpectral(1.0)]


def direct_increment_cov(kern, alpha, k, l):
    """Cov(X(t_{k+1}) - X(t_k), X(t_{l+1}) - X(t_l)) straight from the kernel."""
    R = lambda i, j: kernel_eval(kern, alpha ** i, alpha ** j)
    return R(k + 1, l + 1) - R(k + 1, l) - R(k, l + 1) + R(k, l)


def test_grid():
    g = GeometricGrid(2.0, 5)
    np.testing.assert_array_equal(g.times, [2, 4, 8, 16, 32])
    assert GeometricGrid.reaching(1.5, 1e6).times[-1] >= 1e6
    assert GeometricGrid.reaching(1.5, 1e6).times[-2] < 1e6
    with pytest.raises(ValueError):
        GeometricGrid(1.0, 5)


def test_gamma_brownian():
    assert gamma_block(FBM(0.5), GeometricGrid(2.0, 6), 3) == pytest.approx(8.0, rel=1e-14)


@pytest.mark.parametrize("H", [0.2, 0.5, 0.8])
def test_gamma_stationary_increments(H):
    g = GeometricGrid(3.0, 8)
    for k in range(1, 8):
        assert gamma_block(FBM(H), g, k) == pytest.approx((g.t(k + 1) - g.t(k)) ** (2 * H), rel=1e-12)


def test_gamma_block_range():
    with pytest.raises(ValueError):
        gamma_block(FBM(0.5), GeometricGrid(2.0, 4), 4)


@pytest.mark.parametrize("kern", VARIANTS, ids=repr)
def test_gamma_matches_covariance_matrix(kern):
    g = GeometricGrid(16.0, 8)
    cov = kern.cov_matrix(g.times)
    for k in range(1, 8):
        i = k - 1
        direct = cov[i + 1, i + 1] - 2 * cov[i + 1, i] + cov[i, i]
        assert gamma_block(kern, g, k) == pytest.approx(direct, rel=1e-10)


@pytest.mark.parametrize("kern", VARIANTS, ids=repr)
def test_gamma_order(kern):
    alpha = 16.0
    g = GeometricGrid(alpha, 31)
    band = 3 * alpha ** -kern.rho
    for k in range(10, 31):
        ratio = gamma_block(kern, g, k) / (kern.variance_at_one * g.t(k + 1) ** (2 * kern.rho))
        assert 1 - band <= ratio <= 1 + band


def test_thresholds():
    for alpha in (1.5, math.e, 16.0):
        k = np.arange(2, 200)
        a = threshold(alpha, k)
        np.testing.assert_allclose(a ** 2, 2 * (np.log(k + 1) + math.log(math.log(alpha))), rtol=1e-12)
        assert np.all(np.diff(a) > 0)
    with pytest.raises(ValueError):
        threshold(1.2, 1)


def test_block_quantities():
    bq = block_quantities(ERWDiff(0.5, 0.6), GeometricGrid(16.0, 10))
    assert bq.gamma.size == 9 and np.all(bq.gamma > 0)
    assert bq.sigma == pytest.approx(math.sqrt(1 + 5 / 3))


def test_delta_trivial_cases():
    assert delta_corr(FBM(0.5), 3.0, 1) == pytest.approx(0.0, abs=1e-15)
    for kern in VARIANTS:
        assert delta_corr(kern, 16.0, 0) == 1.0
    np.testing.assert_allclose(delta_sequence(FBM(0.5), 16.0, 50)[1:], 0.0, atol=1e-12)


def test_delta_fbm_direct_oracle():
    kern, alpha, j = FBM(0.7), 4.0, 2
    k = 3
    direct = direct_increment_cov(kern, alpha, k + 2, k) / math.sqrt(
        direct_increment_cov(kern, alpha, k + 2, k + 2) * direct_increment_cov(kern, alpha, k, k))
    assert delta_corr(kern, alpha, j) == pytest.approx(direct, rel=1e-10)


@pytest.mark.parametrize("kern", VARIANTS, ids=repr)
def test_delta_matches_increment_correlations(kern):
    alpha = 16.0
    deltas = delta_sequence(kern, alpha, 6)
    for k, l in [(2, 2), (2, 5), (4, 8), (7, 3)]:
        c = direct_increment_cov(kern, alpha, k, l)
        corr = c / math.sqrt(direct_increment_cov(kern, alpha, k, k) * direct_increment_cov(kern, alpha, l, l))
        assert deltas[abs(k - l)] == pytest.approx(corr, rel=1e-8, abs=1e-13)
    assert np.all(np.abs(deltas[1:]) < 1)


def test_l_coefficient_values():
    kern = ERWDiff(0.5, 0.6)
    r = 16.0 ** -0.5
    h = lambda x: kern.h(x)
    expected = h(16.0 ** 3) - r * (h(16.0 ** 4) + h(16.0 ** 2)) + r * r * h(16.0 ** 3)
    assert l_coefficient(kern, 16.0, 3) == pytest.approx(expected, rel=1e-12)
    assert alpha_diagnostic(FBM(0.5), 16.0) == pytest.approx(l_coefficient(FBM(0.5), 16.0, 0) - 1.0)


def test_decay_checks():
    assert delta_decay_check(FBM(0.5), 16.0, range(1, 40), 1.0).max < 1e-10
    chk = delta_decay_check(ERWDiff(0.5, 0.6), 16.0, range(1, 51), 1.0)
    assert np.isfinite(chk.max)
    tail = chk.scaled[10:]
    assert np.all(np.diff(tail) < 0)
    assert np.isfinite(delta_decay_check(StableSpectral(1.0), 16.0, range(1, 31), 2.0).max)
    with pytest.raises(ValueError):
        delta_decay_check(FBM(0.5), 16.0, [0, 1], 1.0)


def test_event_prob():
    lower, upper, value = event_prob(1.0)
    assert value == pytest.approx(0.158655253931457, rel=1e-12)
    assert lower == pytest.approx(0.5 * math.exp(-0.5) / math.sqrt(2 * math.pi), rel=1e-14)
    assert upper == pytest.approx(math.exp(-0.5) / math.sqrt(2 * math.pi), rel=1e-14)
    assert (lower, upper) == pytest.approx((0.120985, 0.241971), abs=1e-6)
    assert lower <= value <= upper
    _, upper8, value8 = event_prob(8.0)
    assert value8 / upper8 == pytest.approx(1.0, abs=0.02)
    with pytest.raises(ValueError):
        event_prob(0.9)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(1.0, 30.0))
def test_event_sandwich(a):
    lower, upper, value = event_prob(a)
    assert lower <= value <= upper


def test_event_prob_k_scaling():
    k = np.arange(10, 10_001)
    scaled = k * np.sqrt(np.log(k)) * normal_sf(threshold(math.e, k))
    assert 0.1 < scaled.min() and scaled.max() < 0.5


@pytest.mark.slow
def test_er_ratio_brownian():
    kern = FBM(0.5)
    rep = er_ratio(kern, math.e, 100)
    p = normal_sf(threshold(math.e, np.arange(1, 101)))
    assert rep.numerator == pytest.approx(np.sum(p - p * p), rel=1e-10)
    assert rep.denominator == pytest.approx(p.sum() ** 2, rel=1e-14)
    assert rep.ratio < 1 / p.sum()
    ratios = [r.ratio for r in er_ratio_table(kern, math.e, [100, 1000, 10_000])]
    assert ratios[0] > ratios[1] > ratios[2]


@pytest.mark.slow
def test_er_ratio_denominator_sandwich():
    n = 10_000
    a = threshold(math.e, np.arange(1, n + 1))
    bounds = np.array([event_prob(x)[:2] for x in a])
    rep = er_ratio(FBM(0.5), math.e, n)
    s = math.sqrt(rep.denominator)
    assert bounds[:, 0].sum() <= s <= bounds[:, 1].sum()
    # both sandwich sums grow like sqrt(log n)
    c1, c2 = bounds[:, 0].sum() / math.sqrt(math.log(n)), bounds[:, 1].sum() / math.sqrt(math.log(n))
    assert c1 <= s / math.sqrt(math.log(n)) <= c2


def test_er_ratio_table_consistent_with_single():
    kern = ERWDiff(0.5, 0.6)
    table = er_ratio_table(kern, 16.0, [5, 40])
    single = er_ratio(kern, 16.0, 40)
    assert table[1].numerator == pytest.approx(single.numerator, rel=1e-14)
    assert table[0].n == 5


def test_er_ratio_brute_force_small_n():
    from elephantwalk.bvn import phi

    kern, alpha, n = RLFBM(0.5, 0.5), 16.0, 12
    k = np.arange(1, n + 1)
    a = threshold(alpha, k)
    p = normal_sf(a)
    num = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                num += p[i] - p[i] ** 2
            else:
                num += phi(delta_corr(kern, alpha, abs(i - j)), a[i], a[j])
    rep = er_ratio(kern, alpha, n)
    assert rep.numerator == pytest.approx(num, rel=1e-12)


@pytest.mark.slow
@pytest.mark.parametrize("kern", VARIANTS, ids=repr)
def test_er_numerator_growth_bounded(kern):
    reps = er_ratio_table(kern, 16.0, [100, 1000, 10_000])
    scaled = [r.numerator / math.sqrt(math.log(r.n)) for r in reps]
    assert max(scaled) / min(scaled) < 10
    assert reps[0].ratio > reps[1].ratio > reps[2].ratio


class _FlatKernel(Kernel):
    """h = 1: perfectly correlated increments, an invalid input for the ratio."""

    rho = 0.5

    def h_log(self, y):
        return 1.0

    def cov(self, s, t):
        return math.sqrt(s * t)


def test_er_ratio_rejects_unit_correlation():
    with pytest.raises(ValueError):
        er_ratio(_FlatKernel(), 16.0, 10)
    with pytest.raises(ValueError):
        er_ratio(FBM(0.5), 16.0, 1)


def test_borell_tis_bound():
    assert borell_tis_bound(0.0, 1.0, 2.0) == pytest.approx(math.exp(-2.0), rel=1e-15)
    with pytest.raises(ValueError):
        borell_tis_bound(1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        borell_tis_bound(0.0, 0.0, 1.0)


def test_lil_statistic_zero_path():
    g = GeometricGrid(2.0, 20)
    st_ = lil_statistic(FBM(0.5), g, np.zeros((3, 20)))
    assert np.all(st_.running_max_plus == 0) and np.all(st_.running_max_minus == 0)
    assert not st_.events.any()
    assert np.all(np.diff(st_.running_max_plus, axis=1) >= 0)


def test_lil_statistic_shape_checks():
    with pytest.raises(ValueError):
        lil_statistic(FBM(0.5), GeometricGrid(2.0, 5), np.zeros((2, 4)))
    with pytest.raises(ValueError):
        lil_statistic(FBM(0.5), GeometricGrid(2.0, 5), np.zeros((2, 5)), t_min=2.0)


def test_lil_statistic_brownian_bands():
    kern = FBM(0.5)
    g = GeometricGrid.reaching(1.5, 1e6)
    reps = 200
    x = sample_paths(kern, g.times, reps, StreamKey(20240701))
    st_ = lil_statistic(kern, g, x)
    sigma = 1.0
    mean_max = st_.running_max_plus[:, -1].mean()
    assert 0.6 * sigma <= mean_max <= 1.0 * sigma
    # block events: compare with their exact expected count
    counts = st_.event_counts[:, -1]
    expected = expected_event_count(kern, g)
    assert abs(counts.mean() - expected) < 4 * counts.std(ddof=1) / math.sqrt(reps)
    late = lil_statistic(kern, g, x, t_min=1e3)
    assert np.mean(late.running_max_plus[:, -1] > 1.3 * sigma) <= 0.05


def test_event_indicator_definition():
    kern = FBM(0.5)
    g = GeometricGrid(4.0, 8)
    x = sample_paths(kern, g.times, 50, StreamKey(3))
    st_ = lil_statistic(kern, g, x)
    for col, k in enumerate(st_.block_k):
        thr = math.sqrt(gamma_block(kern, g, int(k))) * threshold(4.0, int(k))
        np.testing.assert_array_equal(st_.events[:, col], x[:, k] - x[:, k - 1] > thr)
