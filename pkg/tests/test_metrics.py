import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarcoord.metrics import (EmpiricalType, coordination_probability, kl_divergence, pinsker_bound,
                                type_of, variational_distance)


def test_type_of_pairs():
    t = type_of({"A": [0, 0, 0, 0], "B": [0, 1, 0, 1]}, {"A": 2, "B": 2})
    np.testing.assert_allclose(t.normalized(), [[0.5, 0.5], [0.0, 0.0]])
    assert t.total == 4


def test_pooling_identical_blocks_is_idempotent():
    s = [0, 1, 1, 2, 0, 1]
    x = [1, 0, 0, 1, 1, 1]
    one = type_of({"S": s, "X": x}, {"S": 3, "X": 2})
    many = type_of({"S": [s] * 5, "X": [x] * 5}, {"S": 3, "X": 2})
    np.testing.assert_allclose(many.normalized(), one.normalized())


def test_type_of_rejects_misaligned_blocks():
    with pytest.raises(ValueError):
        type_of({"S": [[0, 1], [0]], "X": [[0, 1], [1, 1]]}, {"S": 2, "X": 2})
    with pytest.raises(ValueError):
        type_of({"S": [[0, 1]], "X": [[0, 1], [1, 1]]}, {"S": 2, "X": 2})
    with pytest.raises(ValueError):
        type_of({"S": [0, 3]}, {"S": 2})


def test_mixing_two_blocks_halves_the_distance(rng):
    p = np.array([[0.4, 0.1], [0.2, 0.3]])
    for _ in range(50):
        b = [rng.integers(0, 2, (2, 20)) for _ in range(2)]
        t1 = type_of({"A": b[0][0], "B": b[0][1]}, {"A": 2, "B": 2})
        t2 = type_of({"A": b[1][0], "B": b[1][1]}, {"A": 2, "B": 2})
        pooled = t1 + t2
        assert variational_distance(pooled, p) <= 0.5 * (variational_distance(t1, p)
                                                          + variational_distance(t2, p)) + 1e-12


def test_variational_distance_examples():
    assert variational_distance([0.2, 0.8], [0.2, 0.8]) == 0.0
    assert variational_distance([0.5, 0.5], [1.0, 0.0]) == 1.0
    assert variational_distance([0.7, 0.3], [0.3, 0.7]) == pytest.approx(0.8)
    with pytest.raises(ValueError):
        variational_distance([0.5, 0.5], [1.0, 0.0, 0.0])


def test_kl_examples():
    assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0
    want = 0.5 * math.log2(0.5 / 0.75) + 0.5 * math.log2(0.5 / 0.25)
    assert kl_divergence([0.5, 0.5], [0.75, 0.25]) == pytest.approx(want, abs=1e-15)
    assert want == pytest.approx(0.2075, abs=1e-4)
    assert kl_divergence([0.5, 0.5], [1.0, 0.0]) == math.inf


probs = st.integers(2, 6).flatmap(lambda m: st.tuples(*[st.integers(0, 2**32 - 1)] * 3).map(
    lambda seeds: [np.random.default_rng(s).dirichlet(np.ones(m)) for s in seeds]))


@settings(max_examples=200, deadline=None)
@given(probs)
def test_variational_distance_is_a_metric(triple):
    p, q, r = triple
    assert variational_distance(p, q) == pytest.approx(variational_distance(q, p))
    assert variational_distance(p, r) <= variational_distance(p, q) + variational_distance(q, r) + 1e-12
    assert variational_distance(p, p) == 0.0
    assert 0.0 <= variational_distance(p, q) <= 2.0


def test_pinsker_holds_on_many_random_pairs():
    g = np.random.default_rng(2024)
    for _ in range(10**4):
        m = int(g.integers(2, 6))
        alpha = g.choice([0.2, 1.0, 5.0])
        p, q = g.dirichlet(np.full(m, alpha), size=2)
        assert variational_distance(p, q) <= pinsker_bound(kl_divergence(p, q)) + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_marginal_distance_never_exceeds_joint(seed):
    g = np.random.default_rng(seed)
    counts = g.integers(0, 20, (2, 3, 2))
    t = EmpiricalType(("X", "Y", "Z"), counts + 1)
    p = g.dirichlet(np.ones(12)).reshape(2, 3, 2)
    vx = variational_distance(t.marginal(["X"]), p.sum(axis=(1, 2)))
    vxz = variational_distance(t.marginal(["X", "Z"]), p.sum(axis=1))
    vall = variational_distance(t, p)
    assert vx <= vxz + 1e-12 <= vall + 2e-12


def test_marginal_respects_requested_order():
    t = EmpiricalType(("A", "B"), np.array([[1, 2, 3], [4, 5, 6]]))
    np.testing.assert_array_equal(t.marginal(["B", "A"]).counts, t.counts.T)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_type_is_permutation_invariant(seed):
    g = np.random.default_rng(seed)
    a, b = g.integers(0, 3, 40), g.integers(0, 2, 40)
    perm = g.permutation(40)
    t1 = type_of({"A": a, "B": b}, {"A": 3, "B": 2})
    t2 = type_of({"A": a[perm], "B": b[perm]}, {"A": 3, "B": 2})
    np.testing.assert_array_equal(t1.counts, t2.counts)


def test_coordination_probability_examples():
    est = coordination_probability([0.01] * 10, 0.1)
    assert est.probability == 0.0 and est.ci_low == 0.0 and est.ci_high > 0
    assert coordination_probability([0.3, 1.9, 2.0], 2.0).probability == 0.0
    est = coordination_probability([0.2, 0.05, 0.3, 0.01], 0.1)
    assert est.probability == 0.5 and est.ci_low < 0.5 < est.ci_high
    with pytest.raises(ValueError):
        coordination_probability([], 0.1)
