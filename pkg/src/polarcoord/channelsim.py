"""Seeded sources, memoryless channels and named randomness substreams."""

from __future__ import annotations

import numpy as np

from .probmodel import CondDist, FiniteDist

# Fixed labels; the integer is part of every derived seed.
STREAM_LABELS = {
    "source": 1,
    "local_M": 2,
    "common_C": 3,
    "channel": 4,
    "decoder": 5,
    "profile": 6,
}


class RandomnessStreams:
    """Independent generators derived from one master seed.

    ``streams.generator("channel", block)`` always returns a generator in
    the same initial state for the same ``(master_seed, label, counters)``,
    so draws made for one block or label never shift draws made for
    another, whatever the order of consumption.
    """

    def __init__(self, master_seed: int):
        self.master_seed = int(master_seed) & (2**64 - 1)

    def generator(self, label: str, *counters: int) -> np.random.Generator:
        if label not in STREAM_LABELS:
            raise KeyError(f"unknown stream label {label!r}")
        key = (STREAM_LABELS[label],) + tuple(int(c) for c in counters)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=key)
        return np.random.Generator(np.random.Philox(seq))

    def __repr__(self):
        return f"RandomnessStreams({self.master_seed})"


def _draw(rows: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling: position ``t`` draws from ``rows[t]`` with ``uniforms[t]``."""
    cdf = np.cumsum(rows, axis=-1)
    cdf[..., -1] = 1.0
    out = (uniforms[..., None] >= cdf).sum(axis=-1)
    return np.minimum(out, rows.shape[-1] - 1).astype(np.int64)


def sample_source(p_s: FiniteDist, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. draws from ``p_s``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    u = rng.random(n)
    return _draw(np.broadcast_to(p_s.probs, (n, p_s.alphabet_size)), u)


def transmit_with_uniforms(x, channel: CondDist, uniforms) -> np.ndarray:
    """Channel output when position ``t`` uses the uniform variate ``uniforms[t]``."""
    x = np.asarray(x, dtype=np.int64)
    rows = channel.rows()
    if x.size and (x.min() < 0 or x.max() >= rows.shape[0]):
        raise ValueError("channel input out of range")
    return _draw(rows[x], np.asarray(uniforms, dtype=float))


def transmit(x, channel: CondDist, rng: np.random.Generator) -> np.ndarray:
    """Send ``x`` through the memoryless channel ``channel``."""
    x = np.asarray(x)
    return transmit_with_uniforms(x, channel, rng.random(x.shape))
