"""Exhaustive oracles for small block lengths.

Nothing here uses the SC recursion: every conditional law is obtained by
enumerating all pre-transform sequences and multiplying by the explicit
generator matrix.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .construction import (EXACT_MAX_CELLS, EXACT_MAX_N, EXACT_MAX_SIDE, EntropyProfile, IndexLayout,
                           layout_from_sets, letter_law, likelihood_rows)
from .metrics import kl_divergence, pinsker_bound, variational_distance
from .polarcore import ScModel, ZeroProbabilityError, generator_matrix, polar_transform, sc_prefix_probability
from .probmodel import CondDist, CoordinationSpec, FiniteDist, entropy


@dataclass
class OracleReport:
    quantity: str
    exact: np.ndarray
    engine: np.ndarray
    tolerance: float
    note: str = ""

    def __post_init__(self):
        self.exact = np.atleast_1d(np.asarray(self.exact, dtype=float))
        self.engine = np.atleast_1d(np.asarray(self.engine, dtype=float))

    @property
    def deviation(self) -> float:
        if self.exact.size == 0:
            return 0.0
        return float(np.max(np.abs(self.exact - self.engine)))

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.quantity}: max dev {self.deviation:.3e} (tol {self.tolerance:g}) {self.note}".rstrip()


def all_bit_vectors(n: int) -> np.ndarray:
    """Rows are every length-``n`` bit vector, first position most significant."""
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.uint8).reshape(2**n, n)


def _as_int(bits: np.ndarray) -> np.ndarray:
    n = bits.shape[-1]
    return bits.astype(np.int64) @ (1 << np.arange(n - 1, -1, -1, dtype=np.int64))


def _z_law(lik: np.ndarray) -> np.ndarray:
    """``P(Z = z)`` indexed by the integer value of ``z`` for independent bits with law ``lik``."""
    n = lik.shape[0]
    xs = all_bit_vectors(n)
    g = generator_matrix(n).astype(np.int64)
    weights = np.prod(lik[np.arange(n), xs], axis=1)
    law = np.zeros(2**n)
    np.add.at(law, _as_int((xs.astype(np.int64) @ g) % 2), weights)
    return law


def brute_sc_probability(model: ScModel, side_info, z_prefix, j: int) -> float:
    """``P(Z^j = 0 | Z^{1:j-1} = z_prefix, side_info)`` by full marginalization (1-based ``j``)."""
    lik = model.likelihoods(side_info)
    n = lik.shape[0]
    if n > EXACT_MAX_N:
        raise ValueError(f"oracle limited to n <= {EXACT_MAX_N}")
    prefix = np.asarray(z_prefix, dtype=np.int64).reshape(-1)
    if not 1 <= j <= n or prefix.size != j - 1:
        raise ValueError("bad index or prefix length")
    law = _z_law(lik).reshape((2,) * n)
    head = law[tuple(prefix)].reshape(2, -1).sum(axis=1)
    total = head.sum()
    if total <= 0:
        raise ZeroProbabilityError("prefix has zero probability")
    return float(head[0] / total)


def exact_entropy_profile(spec: CoordinationSpec, n: int, target: str) -> EntropyProfile:
    """``H(Z^j | Z^{1:j-1}, W^{1:n})`` for every ``j`` by enumerating ``(w, x)``."""
    law = letter_law(spec, target)
    prof = exact_profile_from_law(law, n)
    prof.target = target
    return prof


def exact_profile_from_law(law: np.ndarray, n: int) -> EntropyProfile:
    w = law.shape[0]
    if n > EXACT_MAX_N or w > EXACT_MAX_SIDE:
        raise ValueError(f"exact profiles need n <= {EXACT_MAX_N} and side alphabet <= {EXACT_MAX_SIDE}")
    if (2 * w) ** n > EXACT_MAX_CELLS:
        raise ValueError(f"exact profile over {(2 * w) ** n} cells is too large")
    xs = all_bit_vectors(n)
    g = generator_matrix(n).astype(np.int64)
    zidx = _as_int((xs.astype(np.int64) @ g) % 2)
    # joint entropies H(W, Z^{1:j}) for j = 0..n
    joint_h = np.zeros(n + 1)
    n_w = w**n
    step = max(1, min(n_w, EXACT_MAX_CELLS // 8 // 2**n))
    for start in range(0, n_w, step):
        idx = np.arange(start, min(n_w, start + step))
        ws = np.stack(np.unravel_index(idx, (w,) * n), axis=1) if n else np.zeros((idx.size, 0), int)
        p = np.ones((idx.size, 2**n))
        for t in range(n):
            p *= law[ws[:, t]][:, xs[:, t]]
        pz = np.zeros_like(p)
        pz[:, zidx] = p
        for jj in range(n + 1):
            joint_h[jj] += _plogp(pz.reshape(idx.size, 2**jj, -1).sum(axis=2))
    h = np.clip(np.diff(joint_h), 0.0, 1.0)
    return EntropyProfile(n=n, h=h, std_err=np.zeros(n), method="exact", sample_count=0)


def _plogp(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def _conditional_table(law: np.ndarray) -> np.ndarray:
    """For a law over ``z`` (shape ``(2,)*n``) return ``P(z^j | z^{1:j-1})`` at every full ``z``.

    Output has shape ``(2**n, n)``; entries on zero-probability prefixes are NaN.
    """
    n = law.ndim
    out = np.full((2**n, n), np.nan)
    zs = all_bit_vectors(n)
    for j in range(n):
        head = law.reshape((2,) * (j + 1) + (-1,)).sum(axis=-1).reshape(2**j, 2)
        tot = head.sum(axis=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = head / tot[:, None]
        pre = _as_int(zs[:, :j]) if j else np.zeros(2**n, dtype=np.int64)
        out[:, j] = cond[pre, zs[:, j]]
    return out


def _encoder_law(true_law: np.ndarray, uniform_sets, fixed: dict | None) -> np.ndarray:
    """Law of a randomized-rounding encoder over ``z``.

    Positions in ``uniform_sets`` are uniform (or fixed to ``fixed[j]``);
    all others follow the true conditional of ``true_law``.
    """
    n = true_law.ndim
    zs = all_bit_vectors(n)
    cond = _conditional_table(true_law)
    q = np.ones(2**n)
    for j in range(n):
        if j in uniform_sets:
            if fixed is not None and j in fixed:
                q *= (zs[:, j] == fixed[j])
            else:
                q *= 0.5
        else:
            c = cond[:, j]
            reach = q > 0
            if np.any(np.isnan(c[reach])):
                raise ZeroProbabilityError("encoder reaches a prefix the model gives zero probability")
            q *= np.where(reach, np.nan_to_num(c), 0.0)
    return q


@dataclass
class EncoderLawReport:
    """Exact laws of the true and encoder-induced sequences at tiny ``n``."""

    p_z: np.ndarray
    p_z_tilde: np.ndarray
    d1: float
    d1_identity: float
    d2: float
    d2_identity: float
    v_z: float
    v_u_mean: float
    v_joint: float
    d_joint: float

    def checks(self, tol: float = 1e-9) -> list[OracleReport]:
        return [
            OracleReport("D(P_Z || P_Z~) vs sum over A1,A2 of 1-H", self.d1_identity, self.d1, tol),
            OracleReport("D(P_V|XS || P_V~|XS | P_XS) vs sum over B1 of 1-H", self.d2_identity, self.d2, tol),
            OracleReport("chain rule: D(joint) vs D1 + D2", self.d_joint, self.d1 + self.d2, tol),
            OracleReport("Pinsker on Z chain", 0.0, max(0.0, self.v_z - pinsker_bound(self.d1)), 0.0),
            OracleReport("Pinsker on U chain (averaged)", 0.0, max(0.0, self.v_u_mean - pinsker_bound(self.d2)), 0.0),
            OracleReport("Pinsker on (S,X,U)", 0.0,
                         max(0.0, self.v_joint - pinsker_bound(self.d1 + self.d2)), 0.0),
        ]


def exact_encoder_distribution(spec: CoordinationSpec, layout: IndexLayout, c1=None, c2=None) -> EncoderLawReport:
    """Enumerate the encoder's randomness at ``n <= 4`` and compare with the i.i.d. law.

    With ``c1``/``c2`` left as None the shared frozen bits are averaged over
    (uniform), which is the law the divergence identity refers to.
    """
    n = layout.n
    if n > 4:
        raise ValueError("exact encoder law limited to n <= 4")
    ns = spec.p_s.alphabet_size
    px_law = _z_law(np.broadcast_to(spec.p_x.probs, (n, 2))).reshape((2,) * n)
    a12 = set(layout.a1) | set(layout.a2)
    fix1 = None if c1 is None else dict(zip(layout.a1, np.asarray(c1).tolist()))
    pz_t = _encoder_law(px_law, a12, fix1)
    p_z = px_law.reshape(-1)
    d1 = kl_divergence(p_z, pz_t)

    h_x = exact_entropy_profile(spec, n, "x").h
    h_uxs = exact_entropy_profile(spec, n, "u_given_xs").h
    d1_identity = float(sum(1 - h_x[j] for j in a12))
    d2_identity = float(sum(1 - h_uxs[j] for j in layout.b1))

    # U chain, conditioned on every (x, s) sequence
    zs = all_bit_vectors(n)
    g = generator_matrix(n).astype(np.int64)
    xs_of_z = (zs.astype(np.int64) @ g) % 2
    u_rows = spec.u_given_xs_rows()
    b1 = set(layout.b1)
    fix2 = None if c2 is None else dict(zip(layout.b1, np.asarray(c2).tolist()))
    d2 = 0.0
    v_u = 0.0
    p_joint = []
    q_joint = []
    us = xs_of_z  # U = V G_n uses the same map
    for x in all_bit_vectors(n):
        px = float(np.prod(spec.p_x.probs[x]))
        pz_of_x = pz_t[_as_int((x.astype(np.int64) @ g) % 2)]
        for s in itertools.product(range(ns), repeat=n):
            s = np.array(s, dtype=np.int64)
            ps = float(np.prod(spec.p_s.probs[s]))
            lik = u_rows[x.astype(np.int64) * ns + s]
            pv = _z_law(lik)
            qv = _encoder_law(pv.reshape((2,) * n), b1, fix2)
            w = px * ps
            if w > 0:
                d2 += w * kl_divergence(pv, qv)
                v_u += w * variational_distance(pv, qv)
            # joint over (s, x, u): P(s) P(x) P(u|x,s) against P(s) P~(x) P~(u|x,s)
            pu = np.zeros(2**n)
            qu = np.zeros(2**n)
            uidx = _as_int(us)
            np.add.at(pu, uidx, pv)
            np.add.at(qu, uidx, qv)
            p_joint.append(w * pu)
            q_joint.append(ps * pz_of_x * qu)
    p_joint = np.concatenate(p_joint)
    q_joint = np.concatenate(q_joint)
    return EncoderLawReport(
        p_z=p_z, p_z_tilde=pz_t, d1=d1, d1_identity=d1_identity, d2=d2, d2_identity=d2_identity,
        v_z=variational_distance(p_z, pz_t), v_u_mean=v_u,
        v_joint=variational_distance(p_joint, q_joint), d_joint=kl_divergence(p_joint, q_joint),
    )


def random_model(rng: np.random.Generator, w: int) -> ScModel:
    """A random SC model with ``w`` side-info symbols, occasionally near-deterministic."""
    rows = rng.dirichlet([0.7, 0.7], size=w)
    return ScModel(CondDist(rows, (w,)))


def sc_oracle_check(n: int, cases: int, seed: int = 0) -> OracleReport:
    """Engine vs brute force on random ``(model, side info, prefix, j)`` at block length ``n``."""
    rng = np.random.default_rng([seed, n])
    exact, engine = [], []
    for _ in range(cases):
        w = int(rng.integers(1, 5))
        model = random_model(rng, w)
        side = rng.integers(0, w, n)
        j = int(rng.integers(1, n + 1))
        prefix = rng.integers(0, 2, j - 1)
        exact.append(brute_sc_probability(model, side, prefix, j))
        engine.append(sc_prefix_probability(model, side, prefix, j))
    return OracleReport(f"SC conditionals n={n} ({cases} cases)", exact, engine, 1e-9)


def transform_check(max_n: int = 64) -> OracleReport:
    rng = np.random.default_rng(7)
    dev = []
    n = 1
    while n <= max_n:
        x = rng.integers(0, 2, (16, n)).astype(np.uint8)
        dev.append(np.abs(polar_transform(x).astype(int) - (x.astype(int) @ generator_matrix(n)) % 2).max())
        n *= 2
    return OracleReport(f"transform vs explicit G_n up to n={max_n}", np.zeros(len(dev)), dev, 0.0)


def sum_rule_check(spec: CoordinationSpec, n: int = 8) -> list[OracleReport]:
    """Mean of an exact profile equals the per-letter conditional entropy."""
    out = []
    for target in ("x", "x_given_y", "u_given_xs", "u_given_x"):
        law = letter_law(spec, target)
        rows = likelihood_rows(law)
        letter = float(sum(law[w].sum() * entropy(rows[w]) for w in range(law.shape[0])))
        prof = exact_profile_from_law(law, n)
        out.append(OracleReport(f"sum rule {target} n={n}", letter, prof.mean, 1e-10))
    return out


def divergence_identity_check(spec: CoordinationSpec) -> list[OracleReport]:
    """Divergence identities at ``n = 4`` for a layout with two uniform positions per chain."""
    n = 4
    hx = exact_entropy_profile(spec, n, "x").h
    huxs = exact_entropy_profile(spec, n, "u_given_xs").h
    top_x = tuple(sorted(np.argsort(-hx, kind="stable")[:2].tolist()))
    top_u = tuple(sorted(np.argsort(-huxs, kind="stable")[:2].tolist()))
    layout = layout_from_sets(n, v_x=top_x, h_x_given_y=top_x[:1], v_u_given_xs=top_u,
                              allow_infeasible=True)
    return exact_encoder_distribution(spec, layout).checks()


def run_all(spec: CoordinationSpec | None = None, cases: int = 1000) -> list[OracleReport]:
    """Every oracle check used by the ``validate`` subcommand."""
    if spec is None:
        from .presets import preset

        spec = preset("bsc-scenario")
    reports = [transform_check()]
    reports += [sc_oracle_check(n, cases) for n in (2, 4, 8)]
    reports += sum_rule_check(spec)
    biased = CoordinationSpec(
        p_s=spec.p_s, p_x=FiniteDist.bernoulli(0.11), p_u_given_xs=spec.p_u_given_xs,
        p_y_given_x=spec.p_y_given_x, p_shat_given_uy=spec.p_shat_given_uy)
    reports += divergence_identity_check(biased)
    return reports


def freeze_profiles(spec: CoordinationSpec, ns, path) -> dict:
    """Write exact profiles keyed by ``spec-digest/n/target`` to a JSON fixture file."""
    doc = {}
    for n in ns:
        for target in ("x", "x_given_y", "u_given_xs", "u_given_x"):
            doc[f"{spec.digest()}/{n}/{target}"] = exact_entropy_profile(spec, n, target).h.tolist()
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return doc
