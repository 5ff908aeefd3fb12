"""Node 2: reverse-order chained SC decoder and symbol-wise action synthesis."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channelsim import RandomnessStreams, _draw
from .construction import IndexLayout
from .encoder import ChannelCode, CommonRandomness, decode_extra_block, one_time_pad
from .polarcore import polar_transform, sc_decide
from .probmodel import CondDist, CoordinationSpec


@dataclass
class DecoderOutput:
    z_hat_blocks: list
    v_hat_blocks: list
    s_hat_blocks: list
    s_hat_extra: np.ndarray
    payload: np.ndarray
    sc_failure: list = field(default_factory=list)
    extra_failure: bool = False


def synthesize_s_hat(u_hat, y, cond: CondDist, rng: np.random.Generator) -> np.ndarray:
    """Draw each ``shat^t`` independently from ``cond[u^t, y^t]``."""
    u_hat = np.asarray(u_hat, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if u_hat.shape != y.shape:
        raise ValueError("u_hat and y must have equal length")
    rows = cond.table[u_hat, y]
    return _draw(rows, rng.random(u_hat.shape))


def decode_chain(spec: CoordinationSpec, layout: IndexLayout, y_blocks, cr: CommonRandomness,
                 streams: RandomnessStreams, code: ChannelCode) -> DecoderOutput:
    """Decode blocks ``k, k-1, ..., 1`` from ``y_blocks`` (``k + 1`` channel outputs).

    The last entry of ``y_blocks`` is the final block carrying the
    transported bits of block ``k``. Actions for that block are drawn from
    ``P(shat | y)`` since no auxiliary sequence exists there.
    """
    cr.check(layout)
    k = len(y_blocks) - 1
    if k < 1:
        raise ValueError("need at least one data block plus the final block")
    n = layout.n
    y_blocks = [np.asarray(y, dtype=np.int64) for y in y_blocks]
    a3c, b3c = list(layout.a3_carried), list(layout.b3_carried)
    a3p, b3p = list(layout.a3_prime), list(layout.b3_prime)

    payload, extra_failure = decode_extra_block(y_blocks[k], code, len(a3c) + len(b3c))

    z_frozen = layout.mask("a1")
    z_frozen[a3c] = True
    v_frozen = layout.mask("b1")
    v_frozen[b3c] = True
    x_rows = spec.x_given_y_rows()
    u_rows = spec.u_given_x_rows()

    z_hat = [None] * k
    v_hat = [None] * k
    s_hat = [None] * k
    failed = [False] * k
    for i in range(k, 0, -1):
        z_vals = np.zeros(n, dtype=np.uint8)
        v_vals = np.zeros(n, dtype=np.uint8)
        z_vals[list(layout.a1)] = cr.c1
        v_vals[list(layout.b1)] = cr.c2
        if i == k:
            z_vals[a3c] = payload[: len(a3c)]
            v_vals[b3c] = payload[len(a3c):]
        else:
            nxt = z_hat[i]
            z_vals[a3c] = one_time_pad(nxt[a3p], cr.k1)
            v_vals[b3c] = one_time_pad(nxt[b3p], cr.k2)
        y = y_blocks[i - 1]
        z, bad_z = sc_decide(x_rows[y], z_frozen, z_vals)
        x_hat = polar_transform(z).astype(np.int64)
        v, bad_v = sc_decide(u_rows[x_hat], v_frozen, v_vals)
        u_hat = polar_transform(v)
        z_hat[i - 1] = z
        v_hat[i - 1] = v
        failed[i - 1] = bad_z or bad_v
        s_hat[i - 1] = synthesize_s_hat(u_hat, y, spec.p_shat_given_uy, streams.generator("decoder", i))

    rows = spec.shat_given_y_rows()[y_blocks[k]]
    s_extra = _draw(rows, streams.generator("decoder", k + 1).random(n))
    return DecoderOutput(z_hat_blocks=z_hat, v_hat_blocks=v_hat, s_hat_blocks=s_hat,
                         s_hat_extra=s_extra, payload=payload, sc_failure=failed, extra_failure=extra_failure)
