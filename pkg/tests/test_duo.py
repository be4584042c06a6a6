import math

import numpy as np
import pytest

from elephantwalk.duo import (CollisionRecord, DistanceStat, PairParams, collide_replica, collisions,
                              default_grid, distance_statistic, divergence_ratio, lil_constant_theory,
                              normalizer, pair_keys, simulate_pair)
from elephantwalk.erw import Regime, WalkParams, exact_law, exact_moments, simulate_many
from elephantwalk.rng import StreamKey


def srw_difference_collision_mean(n_max):
    """sum_{n<=N} P(D_n = 0) for two simple random walks, by exact convolution.

    D changes by -2, 0, +2 with probabilities 1/4, 1/2, 1/4; index i holds D = 2(i - n).
    """
    law = np.array([1.0])
    total = 0.0
    for n in range(1, n_max + 1):
        nxt = np.zeros(law.size + 2)
        nxt[:-2] += 0.25 * law
        nxt[1:-1] += 0.5 * law
        nxt[2:] += 0.25 * law
        law = nxt
        total += law[n]
    return total


def pair_collision_mean(pair, n_max):
    """sum_{n<=N} P(S_n = S'_n) from the two exact marginal laws."""
    total = 0.0
    for n in range(1, n_max + 1):
        a, b = exact_law(pair.first, n), exact_law(pair.second, n)
        total += float(np.dot(a.pmf, b.pmf))
    return total


def test_convolution_oracle_asymptotics():
    assert srw_difference_collision_mean(10_000) == pytest.approx(2 * math.sqrt(10_000 / math.pi), rel=0.01)
    pair = PairParams.of(0.5, 0.5, 0.5, 0.5)
    assert pair_collision_mean(pair, 200) == pytest.approx(srw_difference_collision_mean(200), rel=1e-10)


def test_pair_keys_disjoint():
    k1, k2 = pair_keys(StreamKey(3, 4, 5))
    assert (k1.stream, k2.stream) == (10, 11)
    assert k1.seed == k2.seed == 3 and k1.replica == k2.replica == 4


def test_identical_deterministic_walks():
    pair = PairParams.of(1, 1, 1, 1)
    paths = simulate_pair(pair, 500, StreamKey(1))
    assert np.all(paths[0] == paths[1])
    rec = collisions(paths)
    assert rec.count == 500 and rec.last == 500
    stats = distance_statistic(paths, pair, default_grid(500))
    assert all(s.running_max_plus == 0 and s.running_max_minus == 0 for s in stats)


def test_opposite_deterministic_walks():
    pair = PairParams.of(1, 1, 1, 0)
    paths = simulate_pair(pair, 500, StreamKey(1))
    np.testing.assert_array_equal(paths[0] - paths[1], 2 * np.arange(501))
    rec = collisions(paths)
    assert rec.count == 0 and rec.last is None


def test_pair_independence():
    n, reps = 1000, 10_000
    key = StreamKey(99)
    k1, k2 = pair_keys(key)
    a = simulate_many(WalkParams(0.5), [n], reps, k1)[:, 0]
    b = simulate_many(WalkParams(0.5), [n], reps, k2)[:, 0]
    assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(reps)
    # simulate_pair uses the same streams
    pa, pb = simulate_pair(PairParams.of(0.5, 0.5, 0.5, 0.5), n, key)
    assert (pa[-1], pb[-1]) == (a[0], b[0])


def test_parity_and_monotone_counts():
    pair = PairParams.of(0.3, 0.5, 0.7, 0.2)
    paths = simulate_pair(pair, 20_000, StreamKey(4))
    d = paths[0] - paths[1]
    assert np.all(d % 2 == 0)
    counts = [collisions(paths, h).count for h in (100, 1000, 5000, 20_000)]
    assert counts == sorted(counts)
    rec = collisions(paths)
    assert isinstance(rec, CollisionRecord)
    assert np.all(np.diff(rec.collision_times) > 0) and np.all(rec.collision_times <= rec.horizon)
    np.testing.assert_array_equal(rec.collision_times, np.flatnonzero(d == 0)[1:] if d[0] == 0 else [])


def test_collision_errors():
    with pytest.raises(ValueError):
        collisions((np.zeros(5, dtype=np.int64), np.zeros(6, dtype=np.int64)))
    with pytest.raises(ValueError):
        collisions((np.zeros(5, dtype=np.int64),) * 2, horizon=9)


def test_srw_mean_collisions():
    pair = PairParams.of(0.5, 0.5, 0.5, 0.5)
    n, reps = 10_000, 1000
    counts = np.array([collisions(simulate_pair(pair, n, StreamKey(2024, r))).count for r in range(reps)])
    oracle = srw_difference_collision_mean(n)
    assert oracle == pytest.approx(2 * math.sqrt(n / math.pi), rel=0.01)
    assert abs(counts.mean() - oracle) <= 0.10 * oracle


def test_general_pair_collisions_against_exact_laws():
    pair = PairParams.of(0.6, 0.5, 0.3, 0.5)
    n, reps = 400, 4000
    counts = np.array([collisions(simulate_pair(pair, n, StreamKey(8, r))).count for r in range(reps)])
    oracle = pair_collision_mean(pair, n)
    assert abs(counts.mean() - oracle) < 4 * counts.std(ddof=1) / math.sqrt(reps)


def test_superdiffusive_last_collision_stabilises():
    pair = PairParams.of(0.9, 0.5, 0.5, 0.5)
    same = 0
    for r in range(200):
        paths = simulate_pair(pair, 200_000, StreamKey(20240612, r))
        same += collisions(paths, 100_000).last == collisions(paths).last
    assert same / 200 >= 0.9


def test_regime_collision_contrast():
    n = 100_000
    mean = {}
    for pr in [(0.5, 0.5, 0.5, 0.5), (0.9, 0.5, 0.5, 0.5)]:
        pair = PairParams.of(*pr)
        mean[pr[0]] = np.mean([collisions(simulate_pair(pair, n, StreamKey(606, r))).count for r in range(200)])
    assert mean[0.5] >= 10 * mean[0.9]


def test_lil_constant_theory():
    assert lil_constant_theory(PairParams.of(0.5, 0.5, 0.5, 0.5)) == math.sqrt(2)
    assert lil_constant_theory(PairParams.of(0.5, 0.5, 0.25, 0.5)) == pytest.approx(math.sqrt(1.5), rel=1e-15)
    assert lil_constant_theory(PairParams.of(1e-12, 0.5, 1e-12, 0.5)) == pytest.approx(math.sqrt(2 / 3), rel=1e-9)
    # equal parameters reduce to sqrt(2) / sqrt(3 - 4p)
    for p in (0.1, 0.4, 0.7):
        assert lil_constant_theory(PairParams.of(p, 0.5, p, 0.5)) == pytest.approx(
            math.sqrt(2) / math.sqrt(3 - 4 * p), rel=1e-14)
    for bad in [(0.75, 0.5, 0.5, 0.5), (0.5, 0.5, 0.8, 0.5)]:
        with pytest.raises(ValueError):
            lil_constant_theory(PairParams.of(*bad))


def test_normalizer_regimes():
    n = np.array([16.0, 1e6])
    assert PairParams.of(0.5, 0.5, 0.7, 0.5).regime is Regime.DIFFUSIVE
    np.testing.assert_allclose(normalizer(PairParams.of(0.5, 0.5, 0.7, 0.5), n),
                               np.sqrt(2 * n * np.log(np.log(n))))
    crit = PairParams.of(0.75, 0.5, 0.75, 0.5)
    np.testing.assert_allclose(normalizer(crit, n), np.sqrt(2 * n * np.log(n) * np.log(np.log(np.log(n)))))
    assert PairParams.of(0.75, 0.5, 0.5, 0.5).regime is Regime.CRITICAL
    np.testing.assert_allclose(normalizer(PairParams.of(0.9, 0.5, 0.5, 0.5), n), n ** 0.8)
    with pytest.raises(ValueError):
        normalizer(crit, [15])


def test_distance_statistic_properties():
    pair = PairParams.of(0.5, 0.5, 0.6, 0.5)
    paths = simulate_pair(pair, 100_000, StreamKey(12))
    grid = default_grid(100_000)
    stats = distance_statistic(paths, pair, grid)
    assert [s.horizon for s in stats] == grid
    assert all(isinstance(s, DistanceStat) for s in stats)
    plus = [s.running_max_plus for s in stats]
    minus = [s.running_max_minus for s in stats]
    assert plus == sorted(plus) and minus == sorted(minus)
    d = paths[0] - paths[1]
    r = d[grid] / np.sqrt(2 * np.array(grid) * np.log(np.log(grid)))
    assert plus[-1] == pytest.approx(r.max(), rel=1e-15)
    with pytest.raises(ValueError):
        distance_statistic(paths, pair, [8, 32])
    with pytest.raises(ValueError):
        distance_statistic(paths, pair, [32, 16])


def test_distance_statistic_doubling_monotone_per_replica():
    pair = PairParams.of(0.5, 0.5, 0.5, 0.5)
    for r in range(20):
        paths = simulate_pair(pair, 2 ** 14, StreamKey(31, r))
        a = distance_statistic(paths, pair, default_grid(2 ** 13))[-1]
        b = distance_statistic(paths, pair, default_grid(2 ** 14))[-1]
        assert b.running_max_plus >= a.running_max_plus
        assert b.running_max_minus >= a.running_max_minus


@pytest.mark.slow
def test_difference_variance_identity():
    pair = PairParams.of(0.5, 0.5, 0.6, 0.5)
    n, reps = 1000, 100_000
    k1, k2 = pair_keys(StreamKey(5150))
    d = (simulate_many(pair.first, [n], reps, k1)[:, 0] - simulate_many(pair.second, [n], reps, k2)[:, 0]).astype(float)
    var = exact_moments(pair.first, n)[1] + exact_moments(pair.second, n)[1]
    se = var * math.sqrt(2 / (reps - 1))
    assert abs(d.var(ddof=1) - var) < 4 * se


def test_divergence_ratio():
    pair = PairParams.of(0.9, 0.5, 0.5, 0.5)
    paths = simulate_pair(pair, 10 ** 6, StreamKey(77))
    ratio = divergence_ratio(paths, pair, [10 ** 4, 10 ** 5, 10 ** 6])
    assert ratio[-1] > 0
    assert abs(ratio[-1] - ratio[-2]) < 0.1 * ratio[-1]
    with pytest.raises(ValueError):
        divergence_ratio(paths, PairParams.of(0.5, 0.5, 0.5, 0.5), [10])


@pytest.mark.slow
def test_critical_band():
    # p' < p = 3/4: two-sided running maximum under the critical normaliser,
    # taken on a doubling grid from 1024 where log log log n is no longer tiny
    pair = PairParams.of(0.75, 0.5, 0.5, 0.5)
    grid = [1024 * 2 ** i for i in range(10)] + [10 ** 6]
    stats = []
    for r in range(200):
        row = collide_replica(pair, 10 ** 6, StreamKey(31, r), grid)
        stats.append(max(row.stat_plus, row.stat_minus))
    assert 0.3 <= np.median(stats) <= 1.3


def test_collide_replica_rows():
    pair = PairParams.of(0.9, 0.5, 0.5, 0.5)
    row = collide_replica(pair, 1000, StreamKey(1, 4))
    paths = simulate_pair(pair, 1000, StreamKey(1, 4))
    stat = distance_statistic(paths, pair, default_grid(1000))[-1]
    assert (row.replica, row.horizon) == (4, 1000)
    assert row.count == collisions(paths).count and row.last_collision == collisions(paths).last
    assert row.stat_plus == stat.running_max_plus and row.stat_minus == stat.running_max_minus
    assert math.isnan(collide_replica(pair, 10, StreamKey(1)).stat_plus)
