import math

import numpy as np
import pytest

from polarcoord.channelsim import RandomnessStreams, sample_source, transmit, transmit_with_uniforms
from polarcoord.probmodel import CondDist, FiniteDist, JointDist, mutual_information


def test_point_source_is_constant():
    s = sample_source(FiniteDist.point(3, 2), 50, np.random.default_rng(0))
    assert s.tolist() == [2] * 50


def test_empty_source_block():
    assert sample_source(FiniteDist.bernoulli(0.5), 0, np.random.default_rng(0)).size == 0


def test_source_frequency_within_binomial_band():
    n = 10**5
    s = sample_source(FiniteDist.bernoulli(0.5), n, RandomnessStreams(3).generator("source", 0))
    assert abs(s.mean() - 0.5) <= 3 / (2 * math.sqrt(n))


def test_zero_probability_symbols_never_drawn():
    s = sample_source(FiniteDist(np.array([0.0, 1.0, 0.0])), 1000, np.random.default_rng(1))
    assert set(s.tolist()) == {1}


def test_identity_channel():
    x = np.random.default_rng(2).integers(0, 2, 100)
    np.testing.assert_array_equal(transmit(x, CondDist.bsc(0.0), np.random.default_rng(5)), x)


def test_bsc_flip_fraction():
    n = 10**5
    x = np.zeros(n, dtype=np.int64)
    y = transmit(x, CondDist.bsc(0.1), RandomnessStreams(4).generator("channel", 1))
    assert abs(y.mean() - 0.1) <= 3 * math.sqrt(0.09 / n)


def test_useless_channel_has_no_information():
    g = np.random.default_rng(6)
    n = 10**5
    x = g.integers(0, 2, n)
    y = transmit(x, CondDist.bsc(0.5), g)
    counts = np.zeros((2, 2))
    np.add.at(counts, (x, y), 1)
    assert mutual_information(JointDist(("X", "Y"), counts / n), ["X"], ["Y"]) < 1e-3


def test_channel_is_memoryless_under_permutation():
    g = np.random.default_rng(7)
    n = 256
    x = g.integers(0, 2, n)
    u = g.random(n)
    perm = g.permutation(n)
    ch = CondDist.bsc(0.2)
    y = transmit_with_uniforms(x, ch, u)
    y_perm = transmit_with_uniforms(x[perm], ch, u[perm])
    np.testing.assert_array_equal(y_perm, y[perm])


def test_streams_are_reproducible_and_independent():
    a = RandomnessStreams(11)
    first = a.generator("channel", 2).random(5)
    # draining other substreams must not shift this one
    a.generator("source", 2).random(1000)
    a.generator("channel", 3).random(1000)
    np.testing.assert_array_equal(a.generator("channel", 2).random(5), first)
    assert not np.array_equal(a.generator("channel", 3).random(5), first)
    assert not np.array_equal(a.generator("source", 2).random(5), first)
    np.testing.assert_array_equal(RandomnessStreams(11).generator("channel", 2).random(5), first)
    with pytest.raises(KeyError):
        a.generator("nope")
