import math

import numpy as np
import pytest

from polarcoord.channelsim import RandomnessStreams, sample_source, transmit
from polarcoord.construction import construct, layout_from_sets
from polarcoord.encoder import (ChannelCode, CommonRandomness, decode_extra_block, encode_chain,
                                encode_extra_block, one_time_pad)
from polarcoord.polarcore import polar_transform
from polarcoord.presets import bsc_scenario, noiseless
from polarcoord.probmodel import CoordinationSpec, FiniteDist
from polarcoord.validation import exact_encoder_distribution


@pytest.fixture(scope="module")
def small(bsc):
    layout, _ = construct(bsc, 64, samples=1000, seed=0)
    return bsc, layout, ChannelCode(bsc, layout)


@pytest.fixture(scope="module")
def chained(bsc):
    # explicit sets so that both transported pieces are non-empty
    layout = layout_from_sets(16, v_x=tuple(range(4, 16)), h_x_given_y=(0, 1, 4, 5, 6),
                              v_u_given_xs=tuple(range(8, 16)), h_u_given_x=tuple(range(2, 16)))
    assert layout.a3 and layout.b3 and layout.feasible
    return bsc, layout, ChannelCode(bsc, layout)


def _run(spec, layout, code, k, seed, cr=None, sources=None, offset=0):
    streams = RandomnessStreams(seed)
    if sources is None:
        sources = [sample_source(spec.p_s, layout.n, streams.generator("source", i)) for i in range(k + 1)]
    if cr is None:
        cr = CommonRandomness.draw(layout, streams.generator("common_C"))
    return encode_chain(spec, layout, sources, cr, streams, code, offset=offset), cr, sources


def test_one_time_pad_examples():
    assert one_time_pad([1, 0, 1], [1, 1, 0]).tolist() == [0, 1, 1]
    key = np.array([1, 0, 1, 1], dtype=np.uint8)
    bits = np.array([0, 0, 1, 0], dtype=np.uint8)
    np.testing.assert_array_equal(one_time_pad(one_time_pad(bits, key), key), bits)
    with pytest.raises(ValueError):
        one_time_pad([1, 0], [1])


def test_padded_bits_uniform():
    n = 10**5
    g = RandomnessStreams(77)
    data = np.zeros(n, dtype=np.uint8)  # worst case: constant input
    padded = one_time_pad(data, g.generator("common_C").integers(0, 2, n, dtype=np.uint8))
    assert abs(padded.mean() - 0.5) <= 3 / (2 * math.sqrt(n))


def test_common_randomness_sizes(chained):
    _, layout, _ = chained
    cr = CommonRandomness.draw(layout, np.random.default_rng(0))
    assert (len(cr.c1), len(cr.k1), len(cr.c2), len(cr.k2)) == (
        len(layout.a1), len(layout.a3), len(layout.b1), len(layout.b3))
    bad = CommonRandomness(cr.c1, cr.k1[:-1], cr.c2, cr.k2)
    with pytest.raises(ValueError):
        bad.check(layout)


def test_single_block_imposes_c1(small):
    spec, layout, code = small
    out, cr, _ = _run(spec, layout, code, 1, seed=3)
    np.testing.assert_array_equal(out.z_blocks[0][list(layout.a1)], cr.c1)
    np.testing.assert_array_equal(out.x_blocks[0], polar_transform(out.z_blocks[0]))


def test_frozen_values_reused_in_every_block(chained):
    spec, layout, code = chained
    out, cr, _ = _run(spec, layout, code, 5, seed=4)
    for z, v in zip(out.z_blocks, out.v_blocks):
        np.testing.assert_array_equal(z[list(layout.a1)], cr.c1)
        np.testing.assert_array_equal(v[list(layout.b1)], cr.c2)


def test_zero_keys_copy_bits_verbatim(chained):
    spec, layout, code = chained
    g = np.random.default_rng(1)
    cr = CommonRandomness(c1=g.integers(0, 2, len(layout.a1), dtype=np.uint8),
                          k1=np.zeros(len(layout.a3), dtype=np.uint8),
                          c2=g.integers(0, 2, len(layout.b1), dtype=np.uint8),
                          k2=np.zeros(len(layout.b3), dtype=np.uint8))
    out, _, _ = _run(spec, layout, code, 3, seed=5, cr=cr)
    for i in range(1, 3):
        np.testing.assert_array_equal(out.z_blocks[i][list(layout.a3_prime)], out.z_blocks[i - 1][list(layout.a3)])
        np.testing.assert_array_equal(out.z_blocks[i][list(layout.b3_prime)], out.v_blocks[i - 1][list(layout.b3)])
    np.testing.assert_array_equal(out.payload, np.concatenate([out.z_blocks[-1][list(layout.a3)],
                                                               out.v_blocks[-1][list(layout.b3)]]))


@pytest.mark.parametrize("offset", [0, 1])
def test_strict_causality(small, offset):
    spec, layout, code = small
    k = 4
    out, cr, sources = _run(spec, layout, code, k, seed=6, offset=offset)
    for j in range(1, k + 1):
        # block i draws its U chain against S_{i - offset}; later sources must not reach X~_{1..i}
        changed = [s.copy() for s in sources]
        for t in range(j, k + 1):
            changed[t] = 1 - changed[t]
        alt, _, _ = _run(spec, layout, code, k, seed=6, cr=cr, sources=changed, offset=offset)
        for i in range(1, min(k, j + offset) + 1):
            np.testing.assert_array_equal(alt.x_blocks[i - 1], out.x_blocks[i - 1])


def test_pad_positions_uniform_over_runs(chained):
    spec, layout, code = chained
    runs = 600
    pos = list(layout.a3_prime) + list(layout.b3_prime)
    ones = np.zeros(len(pos))
    for seed in range(runs):
        out, _, _ = _run(spec, layout, code, 2, seed=1000 + seed)
        ones += out.z_blocks[1][pos]
    band = 3 * math.sqrt(0.25 / runs)
    assert np.all(np.abs(ones / runs - 0.5) <= band)


def test_encoder_law_matches_exact_enumeration(bsc):
    # X ~ Bern(0.11) at n = 4 with two uniform positions: empirical law of Z~_1 vs the exact one
    spec = CoordinationSpec(bsc.p_s, FiniteDist.bernoulli(0.11), bsc.p_u_given_xs, bsc.p_y_given_x,
                            bsc.p_shat_given_uy)
    layout = layout_from_sets(4, v_x=(0, 1), h_x_given_y=(0,), h_u_given_x=(), allow_infeasible=True)
    code = ChannelCode(spec, layout)
    c1 = np.array([1], dtype=np.uint8)
    exact = exact_encoder_distribution(spec, layout, c1=c1).p_z_tilde
    runs = 4000
    counts = np.zeros(16)
    weights = 1 << np.arange(3, -1, -1)
    for seed in range(runs):
        cr = CommonRandomness(c1=c1, k1=np.zeros(0, np.uint8), c2=np.zeros(0, np.uint8), k2=np.zeros(0, np.uint8))
        out, _, _ = _run(spec, layout, code, 1, seed=seed, cr=cr)
        counts[int(out.z_blocks[0] @ weights)] += 1
    freq = counts / runs
    sigma = np.sqrt(exact * (1 - exact) / runs)
    assert np.all(np.abs(freq - exact) <= 4 * sigma + 1e-12)
    assert exact.sum() == pytest.approx(1.0)


def test_extra_block_noiseless_and_empty():
    spec = noiseless()
    layout, _ = construct(spec, 64, samples=200)
    code = ChannelCode(spec, layout)
    assert code.capacity == 64
    payload = np.random.default_rng(2).integers(0, 2, 60, dtype=np.uint8)
    got, _ = decode_extra_block(encode_extra_block(payload, code), code, 60)
    np.testing.assert_array_equal(got, payload)
    x = encode_extra_block(np.zeros(0, dtype=np.uint8), code)
    assert x.shape == (64,)
    assert decode_extra_block(x, code, 0)[0].size == 0
    with pytest.raises(ValueError):
        encode_extra_block(np.zeros(65, dtype=np.uint8), code)


def test_extra_block_bsc_quarter_rate():
    spec = bsc_scenario()
    n = 1024
    layout, _ = construct(spec, n, delta=0.05, samples=2000)
    code = ChannelCode(spec, layout)
    k = n // 4
    errors = 0
    for t in range(100):
        g = RandomnessStreams(t)
        payload = g.generator("local_M", 0).integers(0, 2, k, dtype=np.uint8)
        y = transmit(encode_extra_block(payload, code), spec.p_y_given_x, g.generator("channel", 0))
        errors += not np.array_equal(decode_extra_block(y, code, k)[0], payload)
    assert errors / 100 < 0.05
