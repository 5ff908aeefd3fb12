"""Polarization transform over GF(2) and the successive-cancellation engine.

Bits are indexed in natural order (no bit-reversal), so that for
``z = x G_n`` with ``G_n = [[1, 0], [1, 1]]^{(x) m}`` the first half of ``z``
is the transform of ``x_a XOR x_b`` and the second half is the transform of
``x_b``. Every SC computation below follows that split.

Per-position evidence is passed as a likelihood array ``lik`` of shape
``(..., n, 2)`` holding ``P(x_t = b | w_t)`` for the pre-transform bit ``x_t``
given its side-information symbol ``w_t``. The same code therefore serves
source sampling (no side info), channel decoding (side info ``y``) and the
``U`` chain (side info ``(x, s)`` or ``x``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .probmodel import CondDist

# Below this total mass the pair is recomputed in the log domain.
UNDERFLOW = 1e-300
# Likelihood floor used to retry a hard-decision pass after a zero-probability path.
RETRY_FLOOR = 1e-15


class ZeroProbabilityError(ValueError):
    """Raised when an SC path goes through a zero-probability prefix."""


def check_block_length(n: int) -> int:
    """Return ``log2(n)``, raising ``ValueError`` unless ``n`` is a power of two."""
    n = int(n)
    if n < 1 or n & (n - 1):
        raise ValueError(f"block length must be a power of two, got {n}")
    return n.bit_length() - 1


def polar_transform(bits) -> np.ndarray:
    """Compute ``bits @ G_n`` over GF(2) along the last axis.

    The transform is an involution, so the same call inverts it.
    """
    x = np.array(bits, dtype=np.uint8, copy=True)
    if x.ndim == 0:
        raise ValueError("expected at least one axis")
    n = x.shape[-1]
    check_block_length(n)
    if np.any(x > 1):
        raise ValueError("bits must be 0 or 1")
    lead = x.shape[:-1]
    h = n // 2
    while h >= 1:
        v = x.reshape(lead + (n // (2 * h), 2, h))
        v[..., 0, :] ^= v[..., 1, :]
        h //= 2
    return x


def generator_matrix(n: int) -> np.ndarray:
    """Explicit ``G_n`` as a dense 0/1 matrix (Kronecker power of the kernel)."""
    m = check_block_length(n)
    kernel = np.array([[1, 0], [1, 1]], dtype=np.uint8)
    g = np.ones((1, 1), dtype=np.uint8)
    for _ in range(m):
        g = np.kron(g, kernel)
    return g


@dataclass(frozen=True)
class ScModel:
    """Per-letter law ``P(bit | w)`` driving the SC recursion.

    ``cond`` has a single conditioning variable of size ``w`` and a binary
    output; ``w = 1`` means there is no side information.
    """

    cond: CondDist

    def __post_init__(self):
        if self.cond.output_size != 2:
            raise ValueError("SC model must have a binary output")
        if len(self.cond.input_sizes) > 1:
            raise ValueError("SC model takes a single (flattened) side-info variable")

    @property
    def side_alphabet(self) -> int:
        return int(np.prod(self.cond.input_sizes)) if self.cond.input_sizes else 1

    @classmethod
    def bernoulli(cls, p_one: float) -> "ScModel":
        return cls(CondDist.from_table([[1.0 - p_one, p_one]], input_sizes=(1,)))

    def likelihoods(self, side_info) -> np.ndarray:
        """Likelihood pairs for every position of ``side_info``."""
        w = np.asarray(side_info, dtype=np.int64)
        if w.size and (w.min() < 0 or w.max() >= self.side_alphabet):
            raise ValueError("side-info symbol out of range")
        return self.cond.rows()[w]


def _f(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Law of ``a XOR b`` for independent bits given as probability pairs."""
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]
    out[..., 1] = a[..., 0] * b[..., 1] + a[..., 1] * b[..., 0]
    out /= out.sum(axis=-1, keepdims=True)
    return out


def _g(a: np.ndarray, b: np.ndarray, u: np.ndarray, strict: bool) -> np.ndarray:
    """Law of bit ``b`` given ``a XOR b = u``.

    Exact zeros either raise (``strict``) or yield NaN. Pairs whose total mass
    underflows are recomputed from logarithms.
    """
    u = u.astype(bool)
    au = np.where(u, a[..., 1], a[..., 0])
    av = np.where(u, a[..., 0], a[..., 1])
    t0 = au * b[..., 0]
    t1 = av * b[..., 1]
    s = t0 + t1
    low = s < UNDERFLOW
    if np.any(low):
        dead = low & ((au == 0) | (b[..., 0] == 0)) & ((av == 0) | (b[..., 1] == 0))
        if strict and np.any(dead):
            raise ZeroProbabilityError("zero-probability prefix in SC recursion")
        tiny = low & ~dead
        if np.any(tiny):
            with np.errstate(divide="ignore"):
                l0 = np.log(au[tiny]) + np.log(b[..., 0][tiny])
                l1 = np.log(av[tiny]) + np.log(b[..., 1][tiny])
            top = np.maximum(l0, l1)
            t0[tiny] = np.exp(l0 - top)
            t1[tiny] = np.exp(l1 - top)
        s = t0 + t1
        if np.any(dead):
            t0[dead] = np.nan
            t1[dead] = np.nan
            s[dead] = 1.0
    out = np.empty(t0.shape + (2,))
    out[..., 0] = t0 / s
    out[..., 1] = t1 / s
    return out


def sc_conditionals(lik, z) -> np.ndarray:
    """``P(Z^j = 0 | Z^{1:j-1} = z^{1:j-1}, w)`` for every ``j`` along a known ``z``.

    Runs the recursion level by level, vectorized over any leading batch
    axes. Positions reached through a zero-probability prefix come back NaN.
    """
    return sc_pairs(lik, z)[..., 0]


def sc_pairs(lik, z) -> np.ndarray:
    """Same as :func:`sc_conditionals` but returns both entries of each pair."""
    lik = np.asarray(lik, dtype=float)
    z = np.asarray(z, dtype=np.uint8)
    n = z.shape[-1]
    check_block_length(n)
    if lik.shape[-2:] != (n, 2):
        raise ValueError("likelihoods must have shape (..., n, 2)")
    lead = np.broadcast_shapes(lik.shape[:-2], z.shape[:-1])
    probs = np.broadcast_to(lik, lead + (n, 2)).reshape(lead + (1, n, 2))
    bits = np.broadcast_to(polar_transform(z), lead + (n,)).reshape(lead + (1, n))
    m = n
    while m > 1:
        h = m // 2
        pa, pb = probs[..., :h, :], probs[..., h:, :]
        xa, xb = bits[..., :h], bits[..., h:]
        u = xa ^ xb
        left = _f(pa, pb)
        right = _g(pa, pb, u, strict=False)
        nb = probs.shape[-3]
        probs = np.stack([left, right], axis=-3).reshape(lead + (2 * nb, h, 2))
        bits = np.stack([u, xb], axis=-2).reshape(lead + (2 * nb, h))
        m = h
    return probs[..., 0, :]


def sc_pass(lik, frozen, values, uniforms=None):
    """One sequential SC pass over a block.

    Parameters
    ----------
    lik : array (n, 2)
        Per-position likelihood pairs.
    frozen : bool array (n,)
        Positions whose bit is imposed from ``values``.
    values : int array (n,)
        Imposed bits (entries at non-frozen positions are ignored).
    uniforms : float array (n,), optional
        When given, free positions are drawn by randomized rounding
        (bit 0 iff ``uniforms[j] < P(Z^j = 0 | .)``). Otherwise they are hard
        decisions, 0 iff the likelihood ratio is at least 1.

    Returns
    -------
    z : uint8 array (n,)
        The resulting synthetic bits.
    p0 : float array (n,)
        ``P(Z^j = 0 | z^{1:j-1}, w)`` where it was evaluated, NaN inside
        fully frozen sub-blocks (which are skipped).
    """
    lik = np.asarray(lik, dtype=float)
    n = lik.shape[0]
    check_block_length(n)
    frozen = np.asarray(frozen, dtype=bool)
    values = np.asarray(values, dtype=np.uint8)
    free_before = np.concatenate([[0], np.cumsum(~frozen)])
    z = np.zeros(n, dtype=np.uint8)
    p0 = np.full(n, np.nan)

    def needs(lo, m):
        return free_before[lo + m] > free_before[lo]

    def node(probs, lo, m):
        if probs is None:
            z[lo:lo + m] = values[lo:lo + m]
            return polar_transform(values[lo:lo + m])
        if m == 1:
            q0, q1 = probs[0]
            p0[lo] = q0
            if frozen[lo]:
                bit = int(values[lo])
                if probs[0, bit] == 0:
                    raise ZeroProbabilityError(f"imposed bit at index {lo + 1} has probability 0")
            elif uniforms is not None:
                bit = int(uniforms[lo] >= q0)
            else:
                bit = 0 if q0 >= q1 else 1
            z[lo] = bit
            return np.array([bit], dtype=np.uint8)
        h = m // 2
        a, b = probs[:h], probs[h:]
        u = node(_f(a, b) if needs(lo, h) else None, lo, h)
        v = node(_g(a, b, u, strict=True) if needs(lo + h, h) else None, lo + h, h)
        return np.concatenate([u ^ v, v])

    node(lik if needs(0, n) else None, 0, n)
    return z, p0


def sc_decide(lik, frozen, values):
    """Hard-decision SC pass that survives inconsistent imposed bits.

    Returns ``(z, retried)``; ``retried`` is True when the exact pass hit a
    zero-probability path and the block was redone with likelihoods floored
    at ``RETRY_FLOOR``.
    """
    try:
        z, _ = sc_pass(lik, frozen, values)
        return z, False
    except ZeroProbabilityError:
        soft = np.clip(np.asarray(lik, dtype=float), RETRY_FLOOR, 1.0)
        soft = soft / soft.sum(axis=-1, keepdims=True)
        z, _ = sc_pass(soft, frozen, values)
        return z, True


def _prefix_pair(model: ScModel, side_info, z_prefix, j: int) -> np.ndarray:
    lik = model.likelihoods(side_info)
    n = lik.shape[0]
    check_block_length(n)
    prefix = np.asarray(z_prefix, dtype=np.uint8).reshape(-1)
    if not 1 <= j <= n:
        raise ValueError(f"index j={j} outside [1, {n}]")
    if prefix.size != j - 1:
        raise ValueError(f"prefix has length {prefix.size}, expected {j - 1}")
    z = np.zeros(n, dtype=np.uint8)
    z[: j - 1] = prefix
    pairs = sc_pairs(lik, z)
    along = pairs[np.arange(j - 1), prefix]
    if np.any(np.isnan(pairs[:j])) or np.any(along == 0):
        raise ZeroProbabilityError("prefix has zero probability under the model")
    return pairs[j - 1]


def sc_prefix_probability(model: ScModel, side_info, z_prefix, j: int) -> float:
    """``P(Z^j = 0 | Z^{1:j-1} = z_prefix, side_info)`` with 1-based ``j``."""
    return float(_prefix_pair(model, side_info, z_prefix, j)[0])


def sc_llr(model: ScModel, side_info, z_prefix, j: int) -> float:
    """Likelihood ratio ``P(Z^j=0|.) / P(Z^j=1|.)``; ``inf`` when the bit is surely 0."""
    q0, q1 = _prefix_pair(model, side_info, z_prefix, j)
    if q1 == 0:
        return float("inf")
    return float(q0 / q1)
