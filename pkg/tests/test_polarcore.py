import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarcoord.polarcore import (ScModel, ZeroProbabilityError, generator_matrix, polar_transform,
                                  sc_conditionals, sc_decide, sc_llr, sc_pass, sc_prefix_probability)
from polarcoord.probmodel import CondDist
from polarcoord.validation import all_bit_vectors, brute_sc_probability


def bern_bsc_model():
    px = np.array([0.89, 0.11])
    t = (px[:, None] * np.array([[0.9, 0.1], [0.1, 0.9]])).T
    return ScModel(CondDist(t / t.sum(axis=1, keepdims=True), (2,)))


def test_transform_small_cases():
    assert polar_transform([1]).tolist() == [1]
    assert polar_transform([1, 0]).tolist() == [1, 0]
    assert polar_transform([0, 1]).tolist() == [1, 1]


def test_transform_rejects_bad_length_and_values():
    with pytest.raises(ValueError):
        polar_transform([0, 1, 1])
    with pytest.raises(ValueError):
        polar_transform([0, 2])


def test_transform_matches_generator_matrix(rng):
    for m in range(7):
        n = 2**m
        x = rng.integers(0, 2, (5, n)).astype(np.uint8)
        np.testing.assert_array_equal(polar_transform(x), (x.astype(int) @ generator_matrix(n)) % 2)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10), st.integers(0, 2**32 - 1))
def test_transform_involution_and_linearity(m, seed):
    g = np.random.default_rng(seed)
    x, y = g.integers(0, 2, (2, 2**m)).astype(np.uint8)
    np.testing.assert_array_equal(polar_transform(polar_transform(x)), x)
    np.testing.assert_array_equal(polar_transform(x ^ y), polar_transform(x) ^ polar_transform(y))


def test_sc_n1_and_n2_closed_forms():
    p = 0.23
    m = ScModel.bernoulli(p)
    assert sc_prefix_probability(m, [0], [], 1) == pytest.approx(1 - p, abs=1e-15)
    assert sc_prefix_probability(m, [0, 0], [], 1) == pytest.approx(p**2 + (1 - p) ** 2, abs=1e-15)


def test_sc_n4_matches_frozen_oracle(oracle):
    model = bern_bsc_model()
    side = oracle["sc_n4_side"]
    for key, want in oracle["sc_n4_bern_bsc"].items():
        j, prefix = key.split(":")
        got = sc_prefix_probability(model, side, [int(c) for c in prefix], int(j))
        assert got == pytest.approx(want, abs=1e-12), key


def test_sc_llr_examples(oracle):
    assert sc_llr(ScModel.bernoulli(0.5), [0] * 4, [1, 0], 3) == 1.0
    certain = ScModel.bernoulli(0.0)
    assert sc_llr(certain, [0, 0], [], 1) == float("inf")
    model = bern_bsc_model()
    for z1, v in oracle["sc_n2_bern_bsc"].items():
        assert sc_llr(model, oracle["sc_n2_side"], [int(z1)], 2) == pytest.approx(v["llr"], rel=1e-12)


def test_zero_probability_prefix_raises():
    certain = ScModel.bernoulli(0.0)
    with pytest.raises(ZeroProbabilityError):
        sc_prefix_probability(certain, [0, 0], [1], 2)
    with pytest.raises(ValueError):
        sc_prefix_probability(certain, [0, 0], [1, 0], 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_chain_rule_matches_brute_joint(m, seed):
    g = np.random.default_rng(seed)
    n = 2**m
    lik = g.dirichlet([0.8, 0.8], size=n)
    xs = all_bit_vectors(n)
    zs = (xs.astype(int) @ generator_matrix(n)) % 2
    weights = np.prod(lik[np.arange(n), xs], axis=1)
    z = zs[g.integers(len(zs))]
    brute = weights[(zs == z).all(axis=1)].sum()
    p0 = sc_conditionals(lik, z)
    prod = np.prod(np.where(z == 0, p0, 1 - p0))
    assert prod == pytest.approx(brute, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_pairs_sum_to_one_and_engine_matches_oracle(m, seed):
    g = np.random.default_rng(seed)
    n = 2**m
    model = ScModel(CondDist(g.dirichlet([1, 1], size=3), (3,)))
    side = g.integers(0, 3, n)
    j = int(g.integers(1, n + 1))
    prefix = g.integers(0, 2, j - 1)
    p = sc_prefix_probability(model, side, prefix, j)
    assert 0.0 <= p <= 1.0
    assert p == pytest.approx(brute_sc_probability(model, side, prefix, j), abs=1e-9)


def test_uniform_input_gives_one_half(rng):
    n = 64
    z = rng.integers(0, 2, n)
    np.testing.assert_allclose(sc_conditionals(np.full((n, 2), 0.5), z), 0.5, atol=1e-12)


def test_sc_pass_matches_batch_conditionals(rng):
    n = 128
    lik = rng.dirichlet([1, 1], size=n)
    frozen = rng.random(n) < 0.3
    values = rng.integers(0, 2, n)
    z, p0 = sc_pass(lik, frozen, values, uniforms=rng.random(n))
    np.testing.assert_array_equal(z[frozen], values[frozen])
    ref = sc_conditionals(lik, z)
    seen = ~np.isnan(p0)
    np.testing.assert_allclose(p0[seen], ref[seen], atol=1e-12)


def test_randomized_rounding_rule():
    lik = np.array([[0.3, 0.7]])
    no = np.zeros(1, dtype=bool)
    assert sc_pass(lik, no, [0], uniforms=np.array([0.29]))[0][0] == 0
    assert sc_pass(lik, no, [0], uniforms=np.array([0.3]))[0][0] == 1


def test_hard_decision_tie_decides_zero():
    n = 8
    z, retried = sc_decide(np.full((n, 2), 0.5), np.zeros(n, dtype=bool), np.zeros(n))
    assert not retried and z.tolist() == [0] * n


def test_sc_decide_retries_on_impossible_frozen_bits():
    lik = np.array([[1.0, 0.0], [1.0, 0.0]])
    frozen = np.array([True, False])
    with pytest.raises(ZeroProbabilityError):
        sc_pass(lik, frozen, [1, 0])
    z, retried = sc_decide(lik, frozen, [1, 0])
    assert retried and z[0] == 1


def test_log_domain_fallback_keeps_precision():
    # a long run of near-certain evidence drives pair mass below the underflow guard
    n = 1024
    lik = np.tile([1 - 1e-300, 1e-300], (n, 1))
    z = np.zeros(n, dtype=np.uint8)
    p0 = sc_conditionals(lik, z)
    assert np.all(np.isfinite(p0)) and np.all(p0 > 0.5)
