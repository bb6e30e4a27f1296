import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ugaparity.chromo import Population, bits_to_str
from ugaparity.oracle import OracleSpec, target_concept
from ugaparity.learner import (
    FAST,
    STANDARD,
    approx_learn,
    attributewise_learn,
    boost_plan,
    failure_probability,
    hypothesis_from_population,
    ideal_learner,
    is_validated_regime,
    majority3,
    query_bound,
    recursive_majority,
    recursive_majority_rows,
)


def _pop_with_counts(counts, m):
    rows = np.zeros((m, len(counts)), dtype=np.uint8)
    for j, c in enumerate(counts):
        rows[:c, j] = 1
    return Population.from_rows(rows)


def test_band_readout():
    pop = _pop_with_counts([750, 0, 75, 76, 1424, 1425, 1500], 1500)
    assert bits_to_str(hypothesis_from_population(pop)) == "0110011"


@pytest.mark.parametrize(
    "bits,expected",
    [((1, 1, 0), 1), ((0, 0, 1), 0), ((1, 1, 1), 1), ((0, 1, 1), 1), ((1, 0, 1), 1),
     ((0, 0, 0), 0), ((1, 0, 0), 0), ((0, 1, 0), 0)],
)
def test_majority3_table(bits, expected):
    assert majority3(*bits) == expected


def test_recursive_majority_examples():
    assert recursive_majority(1, (0, 1, 1)) == 1
    assert recursive_majority(2, (0,) * 9) == 0
    assert recursive_majority(2, (1, 1, 0, 0, 0, 1, 1, 0, 1)) == 1


def test_recursive_majority_length_checks():
    with pytest.raises(ValueError):
        recursive_majority(2, (1, 0, 1))
    with pytest.raises(ValueError):
        recursive_majority(0, (1,))
    with pytest.raises(ValueError):
        recursive_majority_rows(2, np.zeros((8, 3)))


@settings(max_examples=60)
@given(st.integers(1, 4).flatmap(lambda l: st.tuples(st.just(l), st.lists(st.integers(0, 1), min_size=3**l, max_size=3**l))))
def test_recursive_majority_symmetries(case):
    ell, xs = case
    out = recursive_majority(ell, xs)
    third = 3 ** (ell - 1)
    parts = [xs[:third], xs[third : 2 * third], xs[2 * third :]]
    for order in itertools.permutations(range(3)):
        assert recursive_majority(ell, sum((parts[i] for i in order), [])) == out
    assert recursive_majority(ell, [1 - x for x in xs]) == 1 - out
    assert recursive_majority_rows(ell, np.array(xs)[:, None])[0] == out


def test_recursive_majority_rows_matches_scalar():
    rng = np.random.default_rng(0)
    votes = rng.integers(0, 2, size=(81, 50))
    fast = recursive_majority_rows(4, votes)
    assert fast.tolist() == [recursive_majority(4, votes[:, j].tolist()) for j in range(50)]


def _enumerated_failure(ell, p):
    """Sum P(outcome) over every outcome of 3**ell votes where the majority errs."""
    p = Fraction(p)
    total = Fraction(0)
    for outcome in itertools.product((0, 1), repeat=3**ell):
        wrong = sum(outcome)
        if recursive_majority(ell, outcome):
            total += p**wrong * (1 - p) ** (3**ell - wrong)
    return total


@pytest.mark.parametrize("p", [Fraction(1, 100), Fraction(1, 20), Fraction(1, 8), Fraction(3, 10)])
@pytest.mark.parametrize("ell", [1, 2])
def test_failure_dp_matches_enumeration(ell, p):
    assert failure_probability(ell, p) == _enumerated_failure(ell, p)


@pytest.mark.parametrize("p", [Fraction(1, 1000), Fraction(1, 50), Fraction(1, 8), Fraction(1, 4)])
def test_three_way_bound(p):
    assert failure_probability(1, p) == p**3 + 3 * p**2 * (1 - p)
    assert failure_probability(1, p) < 4 * p**2


@pytest.mark.parametrize("ell", [1, 2, 3])
def test_depth_bound(ell):
    assert failure_probability(ell, Fraction(1, 8)) < Fraction(1, 2 ** (2**ell))


@pytest.mark.parametrize(
    "n,eps,ell,runs", [(8, Fraction(1, 8), 4, 81), (2, Fraction(1, 8), 3, 27), (64, Fraction(1, 8), 5, 243)]
)
def test_boost_plan_examples(n, eps, ell, runs):
    plan = boost_plan(n, eps)
    assert (plan.ell, plan.runs) == (ell, runs)
    assert Fraction(n, 2 ** (2**plan.ell)) < eps


def _float_formula(n, eps):
    return math.ceil(math.log2(math.log2(n) + math.log2(1 / eps))) + 1


@settings(max_examples=300)
@given(st.integers(2, 10**9), st.fractions(min_value=Fraction(1, 10**12), max_value=Fraction(1, 8)))
def test_boost_plan_agrees_with_float_formula(n, eps):
    if eps <= 0:
        return
    plan = boost_plan(n, eps)
    assert Fraction(n, 2 ** (2**plan.ell)) < eps
    # the float formula may only differ when log2 n + log2 1/eps is within rounding of a power of 2
    inner = math.log2(n) + math.log2(1 / eps)
    if abs(math.log2(inner) - round(math.log2(inner))) > 1e-9:
        assert plan.ell == _float_formula(n, eps)


@pytest.mark.parametrize("eps", [0, Fraction(1, 7), -1, "1/2"])
def test_boost_plan_rejects_epsilon(eps):
    with pytest.raises(ValueError):
        boost_plan(8, eps)


def test_boost_plan_rejects_small_n():
    with pytest.raises(ValueError):
        boost_plan(1, Fraction(1, 8))


def test_query_bound_dominates_plan():
    for n in (2, 8, 64, 4096, 10**6):
        plan = boost_plan(n, Fraction(1, 8))
        assert plan.runs * STANDARD.queries_per_run <= query_bound(n, Fraction(1, 8), STANDARD.queries_per_run)


def test_approx_learn_constant_votes():
    spec = OracleSpec(n=8, K=range(1, 8))
    c = target_concept(spec)
    res = approx_learn(spec, Fraction(1, 8), seed=0, sub_learner=lambda s, r: c.copy())
    assert np.array_equal(res.hypothesis, c)
    assert res.votes.shape == (81, 8)
    h, q = res
    assert q == 0


def test_mock_boosting_small_sample():
    spec = OracleSpec(n=8, K=range(1, 8))
    c = target_concept(spec)
    failures = sum(
        not np.array_equal(approx_learn(spec, Fraction(1, 8), 0, sub_learner=ideal_learner(Fraction(1, 8), t)).hypothesis, c)
        for t in range(200)
    )
    assert failures <= 2


def test_ideal_learner_error_rate():
    spec = OracleSpec(n=64, K=(1, 2, 3))
    c = target_concept(spec)
    learn = ideal_learner(Fraction(1, 8), 5)
    errs = np.mean([np.mean(learn(spec, r) != c) for r in range(2000)])
    # 128000 bits: sd 9e-4
    assert abs(errs - 0.125) < 0.005


def test_validated_regime():
    spec = OracleSpec(n=8, K=range(1, 8))
    assert is_validated_regime(spec, STANDARD)
    assert not is_validated_regime(spec, FAST)
    assert not is_validated_regime(OracleSpec(n=8, K=range(1, 7)), STANDARD)


def test_attributewise_and_approx_queries_fast_preset():
    spec = OracleSpec(n=4, K=(1, 2, 3), eta=Fraction(1, 5))
    from ugaparity.oracle import QueryCounter
    counter = QueryCounter()
    h = attributewise_learn(spec, seed=1, preset=FAST, counter=counter)
    assert h.shape == (4,) and counter.count == FAST.queries_per_run
    res = approx_learn(spec, Fraction(1, 8), seed=1, preset=FAST)
    assert res.plan.ell == 4 and res.queries == 81 * FAST.queries_per_run
    # sub-run r of approx_learn is exactly attributewise_learn with run index r
    assert np.array_equal(res.votes[0], attributewise_learn(spec, 1, run_index=0, preset=FAST))
    assert np.array_equal(res.votes[13], attributewise_learn(spec, 1, run_index=13, preset=FAST))
