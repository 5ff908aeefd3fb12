"""Entropy profiles of the synthetic bits and the index layout built from them.

Index sets are stored 0-based (position ``j`` here is position ``j + 1`` in
one-based notation).
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channelsim import RandomnessStreams, _draw
from .polarcore import check_block_length, polar_transform, sc_pairs
from .probmodel import CoordinationSpec

# Which conditional entropy each profile estimates.
TARGETS = {
    "x": "H(Z^j | Z^{1:j-1})",
    "x_given_y": "H(Z^j | Z^{1:j-1}, Y^{1:n})",
    "u_given_xs": "H(V^j | V^{1:j-1}, X^{1:n}, S^{1:n})",
    "u_given_x": "H(V^j | V^{1:j-1}, X^{1:n})",
    # uniform channel input, used to build the code for the final block
    "channel": "H(Z^j | Z^{1:j-1}, Y^{1:n}) with X uniform",
}
LAYOUT_TARGETS = ("x", "x_given_y", "u_given_xs", "u_given_x")

EXACT_MAX_N = 16
EXACT_MAX_SIDE = 4
# 2^n * w^n cells beyond which the exhaustive oracle is refused
EXACT_MAX_CELLS = 2**26
PROB_FLOOR = 1e-12
CHUNK = 250
DEFAULT_SAMPLES = 10_000


class InfeasibleLayoutError(ValueError):
    """``|A2| < |A3| + |B3|``: the chaining does not fit at this ``(n, delta)``."""


def letter_law(spec: CoordinationSpec, target: str) -> np.ndarray:
    """Per-letter joint ``P(w, bit)`` as a ``(side_alphabet, 2)`` array."""
    if target == "x":
        return spec.p_x.probs[None, :].copy()
    if target in ("x_given_y", "channel"):
        px = spec.p_x.probs if target == "x_given_y" else np.array([0.5, 0.5])
        return (px[:, None] * spec.p_y_given_x.table).T
    if target == "u_given_xs":
        pxs = np.outer(spec.p_x.probs, spec.p_s.probs).reshape(-1)
        return pxs[:, None] * spec.u_given_xs_rows()
    if target == "u_given_x":
        return spec.p_x.probs[:, None] * spec.u_given_x_rows()
    raise KeyError(f"unknown profile target {target!r}; choose from {sorted(TARGETS)}")


def likelihood_rows(law: np.ndarray) -> np.ndarray:
    """``P(bit | w)`` rows from a letter law; unreachable ``w`` get a flat row."""
    sums = law.sum(axis=1, keepdims=True)
    return np.where(sums > 0, law / np.where(sums > 0, sums, 1.0), 0.5)


@dataclass
class EntropyProfile:
    n: int
    h: np.ndarray
    std_err: np.ndarray
    method: str
    sample_count: int
    target: str = ""

    def __post_init__(self):
        self.h = np.asarray(self.h, dtype=float)
        self.std_err = np.asarray(self.std_err, dtype=float)
        if self.h.shape != (self.n,) or self.std_err.shape != (self.n,):
            raise ValueError("profile vectors must have length n")
        if np.any(self.h < -1e-9) or np.any(self.h > 1 + 1e-9):
            raise ValueError("conditional entropies must lie in [0, 1]")
        if self.method == "exact" and np.any(self.std_err != 0):
            raise ValueError("exact profiles carry no standard error")

    @property
    def mean(self) -> float:
        return float(self.h.mean())

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "target": self.target,
            "method": self.method,
            "sample_count": self.sample_count,
            "h": self.h.tolist(),
            "std_err": self.std_err.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EntropyProfile":
        return cls(n=d["n"], h=np.array(d["h"]), std_err=np.array(d["std_err"]),
                   method=d["method"], sample_count=d["sample_count"], target=d.get("target", ""))


def _chunk_sums(law: np.ndarray, n: int, count: int, seed: int, target_id: int, chunk: int):
    rng = RandomnessStreams(seed).generator("profile", target_id, chunk)
    w_size = law.shape[0]
    flat = _draw(np.broadcast_to(law.reshape(-1), (count, n, 2 * w_size)), rng.random((count, n)))
    w, bits = np.divmod(flat, 2)
    lik = likelihood_rows(law)[w]
    z = polar_transform(bits.astype(np.uint8))
    pairs = sc_pairs(lik, z)
    p = np.take_along_axis(pairs, z[..., None].astype(np.int64), axis=-1)[..., 0]
    info = -np.log2(np.maximum(np.nan_to_num(p, nan=PROB_FLOOR), PROB_FLOOR))
    return info.sum(axis=0), (info**2).sum(axis=0)


def _chunk_job(args):
    return _chunk_sums(*args)


def monte_carlo_profile(law: np.ndarray, n: int, samples: int, seed: int,
                        target_id: int = 0, workers: int = 1) -> EntropyProfile:
    """Estimate ``H(Z^j | Z^{1:j-1}, W^{1:n})`` by the mean of ``-log2 P(z^j | .)``.

    Samples are split into fixed-size chunks, each with its own substream,
    and merged in chunk order, so the result does not depend on ``workers``.
    """
    check_block_length(n)
    if samples < 1:
        raise ValueError("need at least one sample")
    jobs = []
    done = 0
    c = 0
    while done < samples:
        count = min(CHUNK, samples - done)
        jobs.append((law, n, count, seed, target_id, c))
        done += count
        c += 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_chunk_job, jobs))
    else:
        parts = [_chunk_job(j) for j in jobs]
    total = np.zeros(n)
    total_sq = np.zeros(n)
    for s, sq in parts:
        total += s
        total_sq += sq
    mean = total / samples
    if samples > 1:
        var = np.maximum(total_sq - samples * mean**2, 0.0) / (samples - 1)
        se = np.sqrt(var / samples)
    else:
        se = np.zeros(n)
    return EntropyProfile(n=n, h=np.clip(mean, 0.0, 1.0), std_err=se,
                          method="monte_carlo", sample_count=samples)


def profile_entropies(spec: CoordinationSpec, n: int, target: str, method: str = "monte_carlo",
                      samples: int = DEFAULT_SAMPLES, seed: int = 0, workers: int = 1) -> EntropyProfile:
    """Per-index conditional entropy of the polarized bits for ``target``."""
    law = letter_law(spec, target)
    if method == "exact":
        from .validation import exact_entropy_profile

        return exact_entropy_profile(spec, n, target)
    if method != "monte_carlo":
        raise ValueError(f"unknown method {method!r}")
    prof = monte_carlo_profile(law, n, samples, seed, list(TARGETS).index(target), workers)
    prof.target = target
    return prof


def default_delta(n: int, beta: float = 0.25) -> float:
    """``2^(-n^beta)`` clamped to ``[0.05, 0.45]``."""
    return float(np.clip(2.0 ** (-(n**beta)), 0.05, 0.45))


def _ix(mask) -> tuple[int, ...]:
    return tuple(int(i) for i in np.flatnonzero(mask))


SET_NAMES = (
    "v_x", "h_x", "h_x_given_y", "v_u_given_xs", "h_u_given_xs", "h_u_given_x",
    "a1", "a2", "a3", "a4", "b1", "b2", "b3", "b4",
    "a3_prime", "b3_prime", "a2_prime", "a3_carried", "b3_carried", "code_order",
)


@dataclass
class IndexLayout:
    """Entropy sets, their partitions and the chaining allocation inside ``a2``.

    ``a3_carried`` / ``b3_carried`` are the parts of ``a3`` / ``b3`` that the
    chain transports; they equal ``a3`` / ``b3`` whenever the layout is
    feasible. ``code_order`` lists the reliable positions of the final-block
    channel code, most reliable first.
    """

    n: int
    delta: float
    v_x: tuple = ()
    h_x: tuple = ()
    h_x_given_y: tuple = ()
    v_u_given_xs: tuple = ()
    h_u_given_xs: tuple = ()
    h_u_given_x: tuple = ()
    a1: tuple = ()
    a2: tuple = ()
    a3: tuple = ()
    a4: tuple = ()
    b1: tuple = ()
    b2: tuple = ()
    b3: tuple = ()
    b4: tuple = ()
    a3_prime: tuple = ()
    b3_prime: tuple = ()
    a2_prime: tuple = ()
    a3_carried: tuple = ()
    b3_carried: tuple = ()
    code_order: tuple = ()
    d_proxy: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return len(self.a2) >= len(self.a3) + len(self.b3)

    def mask(self, name: str) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[list(getattr(self, name))] = True
        return m

    def to_dict(self) -> dict:
        d = {"n": self.n, "delta": self.delta, "d_proxy": self.d_proxy}
        d.update({name: list(getattr(self, name)) for name in SET_NAMES})
        return d

    @classmethod
    def from_dict(cls, d: dict, meta: dict | None = None) -> "IndexLayout":
        kwargs = {name: tuple(d[name]) for name in SET_NAMES}
        return cls(n=d["n"], delta=d["delta"], d_proxy=d["d_proxy"], meta=meta or {}, **kwargs)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def build_layout(profiles: dict[str, EntropyProfile], delta: float,
                 allow_infeasible: bool = False) -> IndexLayout:
    """Threshold the profiles at ``delta`` / ``1 - delta`` and partition ``[0, n)``.

    ``profiles`` must hold ``"x"``, ``"x_given_y"``, ``"u_given_xs"`` and
    ``"u_given_x"``; ``"channel"`` is optional (defaults to ``"x_given_y"``)
    and orders the final-block code.
    """
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    missing = [t for t in LAYOUT_TARGETS if t not in profiles]
    if missing:
        raise KeyError(f"missing profiles: {missing}")
    ns = {profiles[t].n for t in profiles}
    if len(ns) != 1:
        raise ValueError("profiles disagree on n")
    n = ns.pop()
    hx = profiles["x"].h
    hxy = profiles["x_given_y"].h
    huxs = profiles["u_given_xs"].h
    hux = profiles["u_given_x"].h
    hch = profiles.get("channel", profiles["x_given_y"]).h

    v_x = hx > 1 - delta
    h_x = hx > delta
    h_xy = hxy > delta
    v_uxs = huxs > 1 - delta
    h_uxs = huxs > delta
    h_ux = hux > delta

    b2 = v_uxs & ~h_ux
    if b2.any():
        raise ValueError(f"B2 must be empty but holds {_ix(b2)}; profiles are inconsistent")

    a2 = _ix(v_x & ~h_xy)
    a3 = _ix(~v_x & h_xy)
    b3 = _ix(~v_uxs & h_ux)
    feasible = len(a2) >= len(a3) + len(b3)
    if not feasible and not allow_infeasible:
        raise InfeasibleLayoutError(
            f"n={n}, delta={delta:.3g}: |A2|={len(a2)} < |A3|+|B3|={len(a3)}+{len(b3)}")
    a3_carried = a3[: len(a2)]
    b3_carried = b3[: len(a2) - len(a3_carried)]
    a3p = a2[: len(a3_carried)]
    b3p = a2[len(a3p): len(a3p) + len(b3_carried)]

    reliable = np.flatnonzero(hch <= delta)
    code_order = tuple(int(i) for i in reliable[np.argsort(hch[reliable], kind="stable")])

    a12 = v_x
    d_proxy = float((1 - hx[a12]).sum() + (1 - huxs[v_uxs]).sum())
    return IndexLayout(
        n=n, delta=float(delta),
        v_x=_ix(v_x), h_x=_ix(h_x), h_x_given_y=_ix(h_xy),
        v_u_given_xs=_ix(v_uxs), h_u_given_xs=_ix(h_uxs), h_u_given_x=_ix(h_ux),
        a1=_ix(v_x & h_xy), a2=a2, a3=a3, a4=_ix(~v_x & ~h_xy),
        b1=_ix(v_uxs), b2=(), b3=b3, b4=_ix(~h_ux),
        a3_prime=a3p, b3_prime=b3p, a2_prime=a2[len(a3p) + len(b3p):],
        a3_carried=a3_carried, b3_carried=b3_carried,
        code_order=code_order, d_proxy=d_proxy,
    )


def layout_from_sets(n: int, v_x, h_x_given_y, v_u_given_xs=(), h_u_given_x=None,
                     delta: float = 0.1, allow_infeasible: bool = False) -> IndexLayout:
    """Build a layout from explicit (0-based) entropy sets instead of profiles."""
    def prof(high, very):
        h = np.zeros(n)
        h[list(high)] = 0.5
        h[list(very)] = 1.0
        return EntropyProfile(n=n, h=h, std_err=np.zeros(n), method="exact", sample_count=0)

    h_ux = range(n) if h_u_given_x is None else h_u_given_x
    profiles = {
        "x": prof((), v_x),
        "x_given_y": prof(h_x_given_y, ()),
        "u_given_xs": prof((), v_u_given_xs),
        "u_given_x": prof(h_ux, ()),
    }
    return build_layout(profiles, delta, allow_infeasible=allow_infeasible)


@dataclass
class RateReport:
    common_randomness_rate: float
    common_bits: int
    fractions: dict
    slack: int

    def lines(self) -> list[str]:
        out = [f"common randomness rate: {self.common_randomness_rate:.6f} "
               f"({self.common_bits} shared bits)",
               f"chaining slack |A2|-|A3|-|B3|: {self.slack}"]
        out += [f"  |{k}|/n = {v:.4f}" for k, v in self.fractions.items()]
        return out


def rate_report(layout: IndexLayout, k: int) -> RateReport:
    """Shared-randomness rate ``(|A1|+|A3|+|B1|+|B3|) / (k n)`` and set fractions."""
    if k < 1:
        raise ValueError("k must be at least 1")
    bits = len(layout.a1) + len(layout.a3) + len(layout.b1) + len(layout.b3)
    names = ("v_x", "h_x", "h_x_given_y", "v_u_given_xs", "h_u_given_xs", "h_u_given_x",
             "a1", "a2", "a3", "a4", "b1", "b3", "b4")
    fractions = {name: len(getattr(layout, name)) / layout.n for name in names}
    return RateReport(
        common_randomness_rate=bits / (k * layout.n),
        common_bits=bits,
        fractions=fractions,
        slack=len(layout.a2) - len(layout.a3) - len(layout.b3),
    )


def construct(spec: CoordinationSpec, n: int, delta: float | None = None, samples: int = DEFAULT_SAMPLES,
              seed: int = 0, method: str = "monte_carlo", workers: int = 1,
              allow_infeasible: bool = False):
    """Profiles plus layout for ``spec`` at block length ``n``.

    Returns ``(layout, profiles)``. The channel-code profile is shared with
    ``x_given_y`` when the target input law is already uniform.
    """
    delta = default_delta(n) if delta is None else delta
    profiles = {t: profile_entropies(spec, n, t, method, samples, seed, workers) for t in LAYOUT_TARGETS}
    if np.array_equal(letter_law(spec, "channel"), letter_law(spec, "x_given_y")):
        profiles["channel"] = profiles["x_given_y"]
    else:
        profiles["channel"] = profile_entropies(spec, n, "channel", method, samples, seed, workers)
    layout = build_layout(profiles, delta, allow_infeasible=allow_infeasible)
    layout.meta = {"spec": spec.digest(), "n": n, "delta": delta, "samples": samples,
                   "seed": seed, "method": method}
    return layout, profiles


def save_layout(path, layout: IndexLayout, profiles: dict | None = None) -> None:
    doc = {"header": dict(layout.meta, layout_hash=layout.digest()), "layout": layout.to_dict()}
    if profiles:
        doc["profiles"] = {k: p.to_dict() for k, p in profiles.items()}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_layout(path, spec: CoordinationSpec | None = None):
    """Read a layout file; with ``spec`` given, refuse files built for another spec."""
    with open(path) as fh:
        doc = json.load(fh)
    header = doc["header"]
    if spec is not None and header.get("spec") != spec.digest():
        raise ValueError(f"{path}: layout was built for spec {header.get('spec')}, "
                         f"not {spec.digest()}")
    layout = IndexLayout.from_dict(doc["layout"], meta={k: v for k, v in header.items() if k != "layout_hash"})
    if header.get("layout_hash") not in (None, layout.digest()):
        raise ValueError(f"{path}: layout hash mismatch")
    profiles = {k: EntropyProfile.from_dict(v) for k, v in doc.get("profiles", {}).items()}
    return layout, profiles


__all__ = [
    "EntropyProfile", "IndexLayout", "InfeasibleLayoutError", "RateReport", "TARGETS",
    "build_layout", "construct", "default_delta", "layout_from_sets", "letter_law",
    "likelihood_rows", "load_layout", "monte_carlo_profile", "profile_entropies",
    "rate_report", "save_layout",
]
