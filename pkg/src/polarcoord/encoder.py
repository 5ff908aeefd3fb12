"""Node 1: block-chained randomized-rounding encoder and the final-block code."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channelsim import RandomnessStreams
from .construction import IndexLayout
from .polarcore import polar_transform, sc_decide, sc_pass
from .probmodel import CoordinationSpec


@dataclass
class CommonRandomness:
    """Bits shared by both nodes: frozen values ``c1``/``c2`` and pad keys ``k1``/``k2``."""

    c1: np.ndarray
    k1: np.ndarray
    c2: np.ndarray
    k2: np.ndarray

    @classmethod
    def draw(cls, layout: IndexLayout, rng: np.random.Generator) -> "CommonRandomness":
        def bits(count):
            return rng.integers(0, 2, count, dtype=np.uint8)
        # keys cover only what the chain actually transports
        return cls(c1=bits(len(layout.a1)), k1=bits(len(layout.a3_carried)),
                   c2=bits(len(layout.b1)), k2=bits(len(layout.b3_carried)))

    def check(self, layout: IndexLayout) -> None:
        want = {"c1": len(layout.a1), "k1": len(layout.a3_carried),
                "c2": len(layout.b1), "k2": len(layout.b3_carried)}
        for name, size in want.items():
            if len(getattr(self, name)) != size:
                raise ValueError(f"{name} has {len(getattr(self, name))} bits, layout needs {size}")

    @property
    def total_bits(self) -> int:
        return len(self.c1) + len(self.k1) + len(self.c2) + len(self.k2)


@dataclass
class EncoderOutput:
    z_blocks: list
    v_blocks: list
    x_blocks: list
    u_blocks: list
    extra_block: np.ndarray
    payload: np.ndarray


def one_time_pad(bits, key) -> np.ndarray:
    """Bitwise XOR of ``bits`` with an equal-length ``key``."""
    bits = np.asarray(bits, dtype=np.uint8)
    key = np.asarray(key, dtype=np.uint8)
    if bits.shape != key.shape:
        raise ValueError(f"pad length {key.shape} does not match {bits.shape}")
    return bits ^ key


class ChannelCode:
    """Polar channel code for the final block, built on the uniform-input profile.

    Information bits go to the most reliable positions of
    ``layout.code_order``; all other positions are frozen to pseudo-random
    values drawn from the public ``seed``.
    """

    def __init__(self, spec: CoordinationSpec, layout: IndexLayout, seed: int = 0):
        self.n = layout.n
        self.order = np.asarray(layout.code_order, dtype=np.int64)
        self.rows = spec.x_given_y_rows(p_x=[0.5, 0.5])
        self.frozen_values = np.random.default_rng([int(seed), 0xC0DE]).integers(0, 2, self.n, dtype=np.uint8)

    @property
    def capacity(self) -> int:
        return len(self.order)

    def positions(self, k: int) -> np.ndarray:
        if k > self.capacity:
            raise ValueError(f"payload of {k} bits exceeds the {self.capacity} reliable positions")
        return np.sort(self.order[:k])

    def encode(self, payload) -> np.ndarray:
        payload = np.asarray(payload, dtype=np.uint8)
        z = self.frozen_values.copy()
        z[self.positions(payload.size)] = payload
        return polar_transform(z)

    def decode(self, y, k: int):
        """Return ``(payload_estimate, retried)``; see :func:`sc_decide`."""
        pos = self.positions(k)
        frozen = np.ones(self.n, dtype=bool)
        frozen[pos] = False
        z, retried = sc_decide(self.rows[np.asarray(y)], frozen, self.frozen_values)
        return z[pos], retried


def encode_extra_block(payload, code: ChannelCode) -> np.ndarray:
    """Channel input carrying ``payload`` in the final block."""
    return code.encode(payload)


def decode_extra_block(y, code: ChannelCode, k: int):
    """Recover ``k`` payload bits from the final block; also reports an SC retry."""
    return code.decode(y, k)


def _source_for_block(sources, i: int, offset: int):
    return sources[i - offset]


def encode_chain(spec: CoordinationSpec, layout: IndexLayout, sources, cr: CommonRandomness,
                 streams: RandomnessStreams, code: ChannelCode, offset: int = 0) -> EncoderOutput:
    """Run the block-chained encoder over ``k = len(sources) - 1`` blocks.

    ``sources[i]`` is the source block ``S_i`` for ``i = 0..k``; block ``i``
    draws its ``U`` chain against ``S_{i - offset}``. Local randomness comes
    from the ``local_M`` substream indexed by block, so changing a source
    block never shifts the randomness used elsewhere.
    """
    if offset not in (0, 1):
        raise ValueError("source offset must be 0 or 1")
    if layout.b2:
        raise ValueError("B2 must be empty")
    cr.check(layout)
    n = layout.n
    k = len(sources) - 1
    if k < 1:
        raise ValueError("need at least one source block besides S_0")
    ns = spec.p_s.alphabet_size
    for s in sources:
        if len(s) != n:
            raise ValueError("every source block must have length n")

    x_lik = np.broadcast_to(spec.p_x.probs, (n, 2))
    u_rows = spec.u_given_xs_rows()

    z_frozen = layout.mask("a1") | layout.mask("a2")
    v_frozen = layout.mask("b1")
    a1, a2 = list(layout.a1), list(layout.a2)
    a3c, b3c = list(layout.a3_carried), list(layout.b3_carried)
    a3p, b3p = list(layout.a3_prime), list(layout.b3_prime)

    z_blocks, v_blocks, x_blocks, u_blocks = [], [], [], []
    for i in range(1, k + 1):
        z_vals = np.zeros(n, dtype=np.uint8)
        z_vals[a1] = cr.c1
        z_vals[a2] = streams.generator("local_M", i, 0).integers(0, 2, len(a2), dtype=np.uint8)
        if i >= 2:
            z_vals[a3p] = one_time_pad(z_blocks[-1][a3c], cr.k1)
            z_vals[b3p] = one_time_pad(v_blocks[-1][b3c], cr.k2)
        z, _ = sc_pass(x_lik, z_frozen, z_vals, streams.generator("local_M", i, 1).random(n))
        x = polar_transform(z)

        s = np.asarray(_source_for_block(sources, i, offset), dtype=np.int64)
        v_vals = np.zeros(n, dtype=np.uint8)
        v_vals[list(layout.b1)] = cr.c2
        v, _ = sc_pass(u_rows[x.astype(np.int64) * ns + s], v_frozen, v_vals,
                       streams.generator("local_M", i, 2).random(n))
        z_blocks.append(z)
        v_blocks.append(v)
        x_blocks.append(x)
        u_blocks.append(polar_transform(v))

    payload = np.concatenate([z_blocks[-1][a3c], v_blocks[-1][b3c]]).astype(np.uint8)
    extra = encode_extra_block(payload, code)
    return EncoderOutput(z_blocks=z_blocks, v_blocks=v_blocks, x_blocks=x_blocks,
                         u_blocks=u_blocks, extra_block=extra, payload=payload)
