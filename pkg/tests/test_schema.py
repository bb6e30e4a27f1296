import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ugaparity.errors import CapabilityError
from ugaparity.schema import (
    IndexSet,
    all_points,
    count_partitions,
    fitness_table,
    parity_table,
    partition_effect,
    schema_mean,
    schema_means,
    with_noise,
)


def _brute_mean(fn, n, idx, pattern):
    vals = [fn(x) for x in itertools.product((0, 1), repeat=n) if all(x[i - 1] == b for i, b in zip(idx, pattern))]
    return sum(vals) / len(vals)


def _brute_effect(fn, n, idx):
    means = [_brute_mean(fn, n, idx, p) for p in itertools.product((0, 1), repeat=len(idx))]
    mu = sum(means) / len(means)
    return sum((v - mu) ** 2 for v in means) / len(means)


def test_table_order_locus_one_is_msb():
    pts = all_points(3)
    assert pts[1].tolist() == [0, 0, 1] and pts[4].tolist() == [1, 0, 0]


def test_constant_fitness():
    t = np.full(2**5, 0.3)
    assert schema_mean(t, (2, 4), "10") == pytest.approx(0.3)
    for r in range(6):
        for idx in itertools.combinations(range(1, 6), r):
            assert partition_effect(t, idx).effect == pytest.approx(0.0, abs=1e-15)


def test_parity_three_bits():
    assert schema_mean(parity_table(3), (1,), "1") == 0.5


def test_singleton_schema_is_point():
    t = np.random.default_rng(1).random(2**4)
    assert schema_mean(t, (1, 2, 3, 4), "0110") == t[0b0110]


def test_empty_index_set():
    t = np.random.default_rng(2).random(2**4)
    pe = partition_effect(t, ())
    assert pe.effect == 0.0
    assert pe.schema_means == {"": pytest.approx(t.mean())}


def test_parity7_effects_exact():
    t = parity_table(7)
    assert partition_effect(t, range(1, 8)).effect == 0.25
    for r in range(1, 7):
        for idx in itertools.combinations(range(1, 8), r):
            assert partition_effect(t, idx).effect == 0.0


def test_parity7_noisy_effect():
    assert abs(partition_effect(parity_table(7), range(1, 8), eta="1/5").effect - 0.09) < 1e-12


def test_brute_force_agreement():
    rng = np.random.default_rng(3)
    t = rng.random(2**5)
    fn = lambda x: t[int("".join(map(str, x)), 2)]
    for idx in [(1,), (2, 5), (1, 3, 4), (1, 2, 3, 4, 5)]:
        assert partition_effect(t, idx).effect == pytest.approx(_brute_effect(fn, 5, idx), abs=1e-12)
        for p in itertools.product((0, 1), repeat=len(idx)):
            assert schema_mean(t, idx, p) == pytest.approx(_brute_mean(fn, 5, idx, p), abs=1e-12)


def test_fitness_table_from_function():
    t = fitness_table(lambda rows: rows[:, 0] & rows[:, 2], 3)
    assert t.tolist() == [0, 0, 0, 0, 0, 1, 0, 1]


def test_schema_means_pattern_order():
    t = fitness_table(lambda rows: rows[:, 1], 3)
    assert schema_means(t, (2, 3)).tolist() == [0, 0, 1, 1]
    assert list(partition_effect(t, (2, 3)).schema_means) == ["00", "01", "10", "11"]


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8).flatmap(lambda n: st.tuples(st.just(n), st.lists(st.floats(0, 1), min_size=2**n, max_size=2**n), st.permutations(range(1, n + 1)))))
def test_monotone_along_chains(case):
    n, vals, order = case
    t = np.array(vals)
    prev = -1.0
    for r in range(n + 1):
        eff = partition_effect(t, sorted(order[:r])).effect
        assert eff >= prev - 1e-12
        prev = eff


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6).flatmap(lambda n: st.tuples(st.just(n), st.permutations(range(n)), st.integers(0, 2**32 - 1))))
def test_relabel_invariance(case):
    n, perm, seed = case
    t = np.random.default_rng(seed).random(2**n)
    # locus i of the relabelled function is locus perm[i] of the original
    t2 = t.reshape((2,) * n).transpose(perm).reshape(-1)
    idx = sorted(np.random.default_rng(seed + 1).choice(n, size=n // 2, replace=False) + 1)
    mapped = sorted(perm.index(i - 1) + 1 for i in idx)
    assert partition_effect(t2, mapped).effect == pytest.approx(partition_effect(t, idx).effect, abs=1e-12)


def test_with_noise():
    assert with_noise(np.array([0.0, 1.0]), "1/5").tolist() == pytest.approx([0.2, 0.8])


def test_count_partitions():
    assert count_partitions(10**6, 2) == 499999500000
    assert 10**11 <= count_partitions(10**6, 2) < 10**12
    assert count_partitions(9, 0) == 1 and count_partitions(9, 1) == 9
    with pytest.raises(ValueError):
        count_partitions(3, 4)


def test_capability_and_argument_errors():
    with pytest.raises(CapabilityError):
        all_points(25)
    with pytest.raises(ValueError):
        partition_effect(np.zeros(6), (1,))
    with pytest.raises(ValueError):
        partition_effect(np.zeros(8), (4,))
    with pytest.raises(ValueError):
        IndexSet((2, 1))
    with pytest.raises(ValueError):
        schema_mean(np.zeros(8), (1, 2), "1")
