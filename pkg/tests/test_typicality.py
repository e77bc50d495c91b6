import itertools
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from outage_cr.source import dsbs, sample
from outage_cr.typicality import (
    TypeClass,
    TypicalityParams,
    default_epsilon,
    is_jointly_typical,
    is_typical,
    jointly_typical_rows,
    quantize_to_type,
    sample_from_type,
    type_of,
)


def test_type_of_examples():
    t = type_of([0, 1, 1, 0])
    assert t.as_dict() == {0: 2, 1: 2} and t.n == 4
    assert type_of([2] * 5).as_dict() == {2: 5}
    seq = np.random.default_rng(0).integers(0, 4, 37)
    assert type_of(seq).n == 37
    with pytest.raises(ValueError):
        type_of([])


def test_type_class_validation():
    with pytest.raises(ValueError):
        TypeClass((1, -1))
    with pytest.raises(ValueError):
        TypicalityParams(-0.1)


def test_quantize_examples():
    assert quantize_to_type([0.5, 0.5], 4).counts == (2, 2)
    for n in (1, 7, 100):
        assert quantize_to_type([1.0, 0.0], n).counts == (n, 0)
    assert quantize_to_type([0.3, 0.7], 10).counts == (3, 7)


def _closest_by_enumeration(p, n):
    best = None
    for c0 in range(n + 1):
        for c1 in range(n + 1 - c0):
            counts = (c0, c1, n - c0 - c1)
            tv = 0.5 * np.abs(np.array(counts) / n - p).sum()
            if best is None or tv < best[0] - 1e-12:
                best = (tv, counts)
    return best[0]


@pytest.mark.parametrize("seed", range(20))
def test_quantize_minimizes_total_variation(seed):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(3))
    n = int(rng.integers(1, 30))
    t = quantize_to_type(p, n)
    assert t.n == n
    tv = 0.5 * np.abs(t.distribution() - p).sum()
    assert tv <= _closest_by_enumeration(p, n) + 1e-12


def test_is_typical_examples():
    assert is_typical([0, 1, 1, 0], [0.5, 0.5], TypicalityParams(0.0))
    assert not is_typical([0, 1, 2], [0.5, 0.5, 0.0], TypicalityParams(0.9))
    six_zeros = [0] * 6 + [1] * 4
    assert not is_typical(six_zeros, [0.5, 0.5], TypicalityParams(0.05))
    assert is_typical(six_zeros, [0.5, 0.5], TypicalityParams(0.1))


def test_exact_typicality_matches_type():
    p = np.array([0.25, 0.5, 0.25])
    for seq in itertools.product(range(3), repeat=4):
        expected = type_of(seq, 3) == quantize_to_type(p, 4)
        assert is_typical(seq, p, TypicalityParams(0.0)) == expected


def test_joint_typicality_examples():
    x = np.array([0, 1, 0, 1])
    diag = np.diag([0.5, 0.5])
    assert is_jointly_typical(x, x, diag, TypicalityParams(0.0))
    a = np.array([0, 0, 0, 1, 1, 1, 1, 0, 1, 1])
    b = np.array([0, 0, 0, 1, 1, 1, 1, 1, 0, 1])
    p_ab = np.array([[0.3, 0.1], [0.1, 0.5]])
    assert is_jointly_typical(a, b, p_ab, TypicalityParams(0.0))
    with pytest.raises(ValueError):
        is_jointly_typical(a, b[:-1], p_ab, TypicalityParams(0.1))


def test_dsbs_sample_concentrates():
    src = dsbs(0.1)
    params = TypicalityParams(0.02)
    hits = 0
    for seed in range(1000):
        s = sample(src, 10_000, seed)
        hits += is_jointly_typical(s.x_seq, s.y_seq, src.joint, params)
    assert hits / 1000 >= 0.99


def test_rows_agree_with_scalar(rng):
    p_ab = rng.dirichlet(np.ones(6)).reshape(3, 2)
    p_ab[2, 0] = 0.0
    p_ab /= p_ab.sum()
    words = rng.integers(0, 3, (200, 12))
    seq = rng.integers(0, 2, 12)
    params = TypicalityParams(0.15)
    expected = [is_jointly_typical(w, seq, p_ab, params) for w in words]
    np.testing.assert_array_equal(jointly_typical_rows(words, seq, p_ab, params), expected)


def test_sample_from_type_examples():
    assert sample_from_type(TypeClass((0, 0, 3)), 5).tolist() == [2, 2, 2]
    seq = sample_from_type(TypeClass((2, 2)), 1)
    assert sorted(seq.tolist()) == [0, 0, 1, 1]
    np.testing.assert_array_equal(sample_from_type(TypeClass((3, 4)), 9), sample_from_type(TypeClass((3, 4)), 9))


def test_sample_from_type_uniform():
    seeds = 30_000
    counts = Counter(tuple(sample_from_type(TypeClass((1, 2)), s).tolist()) for s in range(seeds))
    assert set(counts) == {(0, 1, 1), (1, 0, 1), (1, 1, 0)}
    for c in counts.values():
        assert abs(c / seeds - 1 / 3) <= 0.02


def test_default_epsilon_schedule():
    assert default_epsilon(10) == default_epsilon(200) == 0.05
    assert default_epsilon(1600) == pytest.approx(0.025)
    assert default_epsilon(400) < 0.05


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 20), min_size=1, max_size=5).filter(lambda c: sum(c) > 0), st.integers(0, 2**32 - 1))
def test_sample_round_trip(counts, seed):
    t = TypeClass(tuple(counts))
    assert type_of(sample_from_type(t, seed), t.alphabet_size) == t


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(5, 60), st.floats(0.0, 0.3))
def test_joint_implies_marginal(seed, n, eps):
    rng = np.random.default_rng(seed)
    p_ab = rng.dirichlet(np.ones(6)).reshape(2, 3)
    a = rng.integers(0, 2, n)
    b = rng.integers(0, 3, n)
    params = TypicalityParams(eps)
    if is_jointly_typical(a, b, p_ab, params):
        # marginal slack accumulates over the other coordinate
        assert is_typical(a, p_ab.sum(1), TypicalityParams(eps * 3))
        assert is_typical(b, p_ab.sum(0), TypicalityParams(eps * 2))


def test_same_slack_marginal_counterexample():
    # absolute per-pair slack lets marginal errors add up across the other coordinate
    p_ab = np.full((2, 2), 0.25)
    a = np.array([0] * 6 + [1] * 4)
    b = np.array([0, 1] * 5)
    params = TypicalityParams(0.05)
    assert is_jointly_typical(a, b, p_ab, params)
    assert not is_typical(a, [0.5, 0.5], params)
    assert is_typical(a, [0.5, 0.5], TypicalityParams(0.1))
