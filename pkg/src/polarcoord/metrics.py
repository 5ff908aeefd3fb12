"""Empirical types, distances between laws and coordination statistics.

The variational distance here is the plain L1 distance ``sum |p - q|``,
which ranges over ``[0, 2]`` (twice the total-variation distance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import binomtest


@dataclass
class EmpiricalType:
    """Joint histogram of aligned symbol sequences."""

    roles: tuple[str, ...]
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def sizes(self) -> tuple[int, ...]:
        return self.counts.shape

    def normalized(self) -> np.ndarray:
        total = self.total
        if total == 0:
            raise ValueError("empty type")
        return self.counts / total

    def marginal(self, roles: Sequence[str]) -> "EmpiricalType":
        keep = [self.roles.index(r) for r in roles]
        drop = tuple(i for i in range(len(self.roles)) if i not in keep)
        c = self.counts.sum(axis=drop)
        order = sorted(keep)
        return EmpiricalType(tuple(roles), np.transpose(c, [order.index(i) for i in keep]))

    def __add__(self, other: "EmpiricalType") -> "EmpiricalType":
        if self.roles != other.roles or self.sizes != other.sizes:
            raise ValueError("can only merge types over the same roles and alphabets")
        return EmpiricalType(self.roles, self.counts + other.counts)


def type_of(blocks: Mapping[str, Sequence], sizes: Mapping[str, int]) -> EmpiricalType:
    """Pooled type of aligned sequences.

    ``blocks[role]`` is a list of per-block symbol arrays (all roles must
    list the same number of blocks with matching lengths), or a single
    array. ``sizes[role]`` is the alphabet size.
    """
    roles = tuple(blocks)
    if not roles:
        raise ValueError("need at least one role")
    seqs = {}
    for r in roles:
        b = blocks[r]
        parts = [np.asarray(p, dtype=np.int64).reshape(-1) for p in (b if isinstance(b, (list, tuple)) else [b])]
        seqs[r] = parts
    nblocks = {len(p) for p in seqs.values()}
    if len(nblocks) != 1:
        raise ValueError("roles disagree on the number of blocks")
    for i in range(nblocks.pop()):
        lengths = {len(seqs[r][i]) for r in roles}
        if len(lengths) != 1:
            raise ValueError(f"block {i}: misaligned lengths {sorted(lengths)}")
    shape = tuple(int(sizes[r]) for r in roles)
    flat = [np.concatenate(seqs[r]) for r in roles]
    for r, f in zip(roles, flat):
        if f.size and (f.min() < 0 or f.max() >= sizes[r]):
            raise ValueError(f"symbol of role {r} out of range")
    if flat[0].size == 0:
        return EmpiricalType(roles, np.zeros(shape, dtype=np.int64))
    idx = np.ravel_multi_index(flat, shape)
    counts = np.bincount(idx, minlength=int(np.prod(shape))).reshape(shape)
    return EmpiricalType(roles, counts)


def variational_distance(p, q) -> float:
    """``sum |p - q|`` over a common alphabet (max 2)."""
    p = _as_probs(p)
    q = _as_probs(q)
    if p.shape != q.shape:
        raise ValueError(f"alphabet mismatch {p.shape} vs {q.shape}")
    return float(np.abs(p - q).sum())


def kl_divergence(p, q) -> float:
    """``D(p || q)`` in bits; ``inf`` when ``p`` puts mass outside the support of ``q``."""
    p = _as_probs(p).reshape(-1)
    q = _as_probs(q).reshape(-1)
    if p.shape != q.shape:
        raise ValueError(f"alphabet mismatch {p.shape} vs {q.shape}")
    on = p > 0
    if np.any(q[on] == 0):
        return math.inf
    return max(float((p[on] * np.log2(p[on] / q[on])).sum()), 0.0)


def pinsker_bound(d_bits: float) -> float:
    """Largest L1 distance compatible with a divergence of ``d_bits`` bits."""
    return math.sqrt(2.0 * math.log(2.0) * d_bits)


def _as_probs(p) -> np.ndarray:
    if isinstance(p, EmpiricalType):
        return p.normalized()
    if hasattr(p, "table"):
        return np.asarray(p.table, dtype=float)
    if hasattr(p, "probs"):
        return np.asarray(p.probs, dtype=float)
    return np.asarray(p, dtype=float)


@dataclass
class CoordinationEstimate:
    probability: float
    exceed: int
    runs: int
    ci_low: float
    ci_high: float


def coordination_probability(distances: Sequence[float], epsilon: float,
                             confidence: float = 0.95) -> CoordinationEstimate:
    """Fraction of runs whose type is farther than ``epsilon`` from the target.

    The interval is the Wilson score interval at ``confidence``.
    """
    d = np.asarray(distances, dtype=float)
    if d.size < 1:
        raise ValueError("need at least one run")
    exceed = int((d > epsilon).sum())
    ci = binomtest(exceed, d.size).proportion_ci(confidence, method="wilson")
    return CoordinationEstimate(exceed / d.size, exceed, int(d.size), float(ci.low), float(ci.high))
