"""Finite-alphabet distributions, information measures and the region check.

All alphabets are integer ranges ``[0, m)``. Information quantities are in
bits, with ``0 log 0 = 0``.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Row sums closer than this to 1 are renormalized silently.
SILENT_TOL = 1e-12
# Row sums further than this from 1 are rejected.
REJECT_TOL = 1e-6

VARIABLES = ("S", "X", "U", "Y", "Shat")


def _normalize_rows(table: np.ndarray, what: str) -> np.ndarray:
    table = np.array(table, dtype=float)
    if not np.all(np.isfinite(table)) or np.any(table < 0):
        raise ValueError(f"{what}: probabilities must be finite and nonnegative")
    sums = table.sum(axis=-1, keepdims=True)
    err = float(np.max(np.abs(sums - 1.0))) if table.size else 0.0
    if err > REJECT_TOL:
        raise ValueError(f"{what}: rows sum to 1 only within {err:.3g}")
    if err > SILENT_TOL:
        warnings.warn(f"{what}: renormalizing rows off by {err:.3g}", stacklevel=3)
    return table / sums


@dataclass(frozen=True, eq=False)
class FiniteDist:
    """A probability vector on ``[0, alphabet_size)``."""

    probs: np.ndarray

    def __post_init__(self):
        p = _normalize_rows(np.asarray(self.probs, dtype=float).reshape(-1), "FiniteDist")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def alphabet_size(self) -> int:
        return self.probs.size

    @classmethod
    def bernoulli(cls, p_one: float) -> "FiniteDist":
        return cls(np.array([1.0 - p_one, p_one]))

    @classmethod
    def uniform(cls, m: int) -> "FiniteDist":
        return cls(np.full(m, 1.0 / m))

    @classmethod
    def point(cls, m: int, symbol: int) -> "FiniteDist":
        p = np.zeros(m)
        p[symbol] = 1.0
        return cls(p)

    def entropy(self) -> float:
        return entropy(self.probs)

    def to_list(self) -> list[float]:
        return self.probs.tolist()


@dataclass(frozen=True, eq=False)
class CondDist:
    """Row-stochastic table ``P(out | inputs)``.

    ``table`` has shape ``input_sizes + (output_size,)``; every trailing row
    is a distribution.
    """

    table: np.ndarray
    input_sizes: tuple[int, ...] = field(default=())

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        sizes = tuple(int(s) for s in self.input_sizes) or t.shape[:-1]
        if any(s < 1 for s in sizes):
            raise ValueError("alphabet sizes must be positive")
        t = _normalize_rows(t.reshape(sizes + (t.shape[-1],)), "CondDist")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "input_sizes", sizes)

    @classmethod
    def from_table(cls, table, input_sizes: Sequence[int] = ()) -> "CondDist":
        return cls(np.asarray(table, dtype=float), tuple(input_sizes))

    @classmethod
    def bsc(cls, flip: float) -> "CondDist":
        return cls(np.array([[1 - flip, flip], [flip, 1 - flip]]))

    @classmethod
    def deterministic(cls, input_sizes: Sequence[int], output_size: int, fn) -> "CondDist":
        """Table with ``P(fn(*inputs) | inputs) = 1``."""
        t = np.zeros(tuple(input_sizes) + (output_size,))
        for idx in np.ndindex(*input_sizes):
            t[idx + (fn(*idx),)] = 1.0
        return cls(t, tuple(input_sizes))

    @property
    def output_size(self) -> int:
        return self.table.shape[-1]

    def rows(self) -> np.ndarray:
        """The table flattened to ``(prod(input_sizes), output_size)``."""
        return self.table.reshape(-1, self.output_size)

    def to_list(self) -> list:
        return self.table.tolist()


def entropy(p) -> float:
    """Shannon entropy in bits of an array of probabilities (any shape)."""
    p = np.asarray(p, dtype=float).reshape(-1)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def binary_entropy(p: float) -> float:
    return entropy([p, 1.0 - p])


@dataclass(frozen=True, eq=False)
class JointDist:
    """A joint law over named variables, stored as a dense table."""

    names: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim != len(self.names) or len(set(self.names)) != len(self.names):
            raise ValueError("one distinct name per table axis is required")
        total = t.sum()
        if abs(total - 1.0) > REJECT_TOL:
            raise ValueError(f"joint table sums to {total}")
        t = t / total
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def _axes(self, names: Iterable[str]) -> list[int]:
        out = []
        for name in names:
            if name not in self.names:
                raise KeyError(f"unknown variable {name!r}; have {self.names}")
            out.append(self.names.index(name))
        return out

    def marginal(self, names: Sequence[str]) -> "JointDist":
        keep = self._axes(names)
        drop = tuple(i for i in range(len(self.names)) if i not in keep)
        t = self.table.sum(axis=drop)
        # sum() leaves kept axes in original order; reorder to requested order
        order = sorted(keep)
        t = np.transpose(t, [order.index(k) for k in keep])
        return JointDist(tuple(names), t)

    def entropy(self, names: Sequence[str] = None) -> float:
        if names is None:
            return entropy(self.table)
        if not names:
            return 0.0
        return entropy(self.marginal(names).table)


def mutual_information(joint: JointDist, a: Sequence[str], b: Sequence[str],
                       given: Sequence[str] = ()) -> float:
    """``I(A; B | C)`` in bits for disjoint variable groups of ``joint``."""
    a, b, c = list(a), list(b), list(given)
    groups = a + b + c
    joint._axes(groups)
    if len(set(groups)) != len(groups):
        raise ValueError("variable groups must be disjoint")
    value = (joint.entropy(a + c) + joint.entropy(b + c)
             - joint.entropy(a + b + c) - joint.entropy(c))
    if value < -1e-12:
        raise ArithmeticError(f"negative mutual information {value}")
    return max(value, 0.0)


@dataclass(frozen=True, eq=False)
class CoordinationSpec:
    """Target law ``P_S P_X P_{U|XS} P_{Y|X} P_{Shat|UY}`` with binary ``X`` and ``U``.

    ``p_u_given_xs.table`` is indexed ``[x, s, u]``, ``p_y_given_x`` is
    ``[x, y]`` and ``p_shat_given_uy`` is ``[u, y, shat]``. Because the
    source and the signal enter as separate factors, targets with dependent
    ``(S, X)`` cannot be expressed.
    """

    p_s: FiniteDist
    p_x: FiniteDist
    p_u_given_xs: CondDist
    p_y_given_x: CondDist
    p_shat_given_uy: CondDist

    def __post_init__(self):
        ns, ny = self.p_s.alphabet_size, self.p_y_given_x.output_size
        if self.p_x.alphabet_size != 2:
            raise ValueError("X must be binary")
        if self.p_u_given_xs.input_sizes != (2, ns) or self.p_u_given_xs.output_size != 2:
            raise ValueError(f"P(U|X,S) must have shape (2, {ns}, 2)")
        if self.p_y_given_x.input_sizes != (2,):
            raise ValueError("P(Y|X) must have two rows")
        if self.p_shat_given_uy.input_sizes != (2, ny):
            raise ValueError(f"P(Shat|U,Y) must have inputs (2, {ny})")

    @property
    def sizes(self) -> dict[str, int]:
        return {
            "S": self.p_s.alphabet_size,
            "X": 2,
            "U": 2,
            "Y": self.p_y_given_x.output_size,
            "Shat": self.p_shat_given_uy.output_size,
        }

    # Per-letter evidence rows used by the SC engine.

    def u_given_xs_rows(self) -> np.ndarray:
        """``P(u | w)`` with ``w = x * |S| + s``."""
        return self.p_u_given_xs.rows()

    def u_given_x_rows(self) -> np.ndarray:
        t = np.einsum("s,xsu->xu", self.p_s.probs, self.p_u_given_xs.table)
        return t / t.sum(axis=1, keepdims=True)

    def x_given_y_rows(self, p_x=None) -> np.ndarray:
        """Posterior ``P(x | y)``, rows indexed by ``y``; ``p_x`` defaults to the target's."""
        px = self.p_x.probs if p_x is None else np.asarray(p_x, dtype=float)
        t = (px[:, None] * self.p_y_given_x.table).T
        sums = t.sum(axis=1, keepdims=True)
        # unreachable outputs get a flat row, never consulted on valid paths
        return np.where(sums > 0, t / np.where(sums > 0, sums, 1.0), 0.5)

    def shat_given_y_rows(self) -> np.ndarray:
        """``P(shat | y)`` under the target law (U marginalized out)."""
        t = joint(self).marginal(["Y", "Shat"]).table
        sums = t.sum(axis=1, keepdims=True)
        flat = np.full_like(t, 1.0 / t.shape[1])
        return np.where(sums > 0, t / np.where(sums > 0, sums, 1.0), flat)

    def to_dict(self) -> dict:
        return {
            "p_s": self.p_s.to_list(),
            "p_x": self.p_x.to_list(),
            "p_u_given_xs": self.p_u_given_xs.to_list(),
            "p_y_given_x": self.p_y_given_x.to_list(),
            "p_shat_given_uy": self.p_shat_given_uy.to_list(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CoordinationSpec":
        return cls(
            p_s=FiniteDist(np.asarray(d["p_s"], dtype=float)),
            p_x=FiniteDist(np.asarray(d["p_x"], dtype=float)),
            p_u_given_xs=CondDist(np.asarray(d["p_u_given_xs"], dtype=float)),
            p_y_given_x=CondDist(np.asarray(d["p_y_given_x"], dtype=float)),
            p_shat_given_uy=CondDist(np.asarray(d["p_shat_given_uy"], dtype=float)),
        )

    def digest(self) -> str:
        """Stable short hash of the tables (rounded to 15 significant digits)."""
        def rounded(v):
            if isinstance(v, list):
                return [rounded(x) for x in v]
            return float(f"{v:.15g}")
        blob = json.dumps({k: rounded(v) for k, v in self.to_dict().items()}, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def joint(spec: CoordinationSpec) -> JointDist:
    """The product law over ``(S, X, U, Y, Shat)``."""
    table = np.einsum(
        "s,x,xsu,xy,uyt->sxuyt",
        spec.p_s.probs,
        spec.p_x.probs,
        spec.p_u_given_xs.table,
        spec.p_y_given_x.table,
        spec.p_shat_given_uy.table,
    )
    return JointDist(VARIABLES, table)


@dataclass
class RegionReport:
    """Outcome of :func:`check_region`."""

    s_x_independent: bool
    markov_u_x_y: bool
    i_us_given_x: float
    i_xy: float
    rate_ok: bool
    u_cardinality: int
    cardinality_bound: int
    cardinality_ok: bool
    violations: list[str]

    @property
    def member(self) -> bool:
        return not self.violations


def check_region(spec: CoordinationSpec) -> RegionReport:
    """Check whether the target lies in the strictly-causal coordination region.

    Independence of ``S`` and ``X`` and the chain ``U - X - Y`` hold by
    construction of :class:`CoordinationSpec`; they are still evaluated
    numerically so the report shows them.
    """
    pj = joint(spec)
    i_sx = mutual_information(pj, ["S"], ["X"])
    i_uy_x = mutual_information(pj, ["U", "S"], ["Y"], ["X"])
    i_us_x = mutual_information(pj, ["U"], ["S"], ["X"])
    i_xy = mutual_information(pj, ["X"], ["Y"])
    sz = spec.sizes
    bound = sz["S"] * sz["X"] * sz["Y"] * sz["Shat"] + 1
    violations = []
    if i_sx > 1e-12:
        violations.append(f"S and X dependent (I={i_sx:.3g})")
    if i_uy_x > 1e-12:
        violations.append(f"U-X-Y is not a Markov chain (I={i_uy_x:.3g})")
    rate_ok = i_us_x <= i_xy + 1e-12
    if not rate_ok:
        violations.append(f"I(U;S|X)={i_us_x:.4f} exceeds I(X;Y)={i_xy:.4f}")
    card_ok = sz["U"] <= bound
    if not card_ok:
        violations.append("auxiliary alphabet exceeds the cardinality bound")
    return RegionReport(
        s_x_independent=i_sx <= 1e-12,
        markov_u_x_y=i_uy_x <= 1e-12,
        i_us_given_x=i_us_x,
        i_xy=i_xy,
        rate_ok=rate_ok,
        u_cardinality=sz["U"],
        cardinality_bound=bound,
        cardinality_ok=card_ok,
        violations=violations,
    )
