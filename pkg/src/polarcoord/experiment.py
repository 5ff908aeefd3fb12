"""Scenario configuration and the seeded encode/transmit/decode runner."""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channelsim import RandomnessStreams, sample_source, transmit
from .construction import DEFAULT_SAMPLES, IndexLayout, construct, default_delta, load_layout, save_layout
from .decoder import decode_chain
from .encoder import ChannelCode, CommonRandomness, encode_chain
from .metrics import EmpiricalType, type_of, variational_distance
from .polarcore import check_block_length
from .presets import preset
from .probmodel import CoordinationSpec, check_region, joint

CSV_COLUMNS = (
    "scenario", "n", "k", "delta", "seed", "V_total", "V_per_block", "D_proxy", "cr_rate",
    "block_err_count", "extra_block_fail", "wall_ms", "layout_hash",
)
TYPE_ROLES = ("S", "X", "Y", "Shat")


@dataclass
class Scenario:
    """One sweep: a target law, block lengths, chain length and seeds.

    ``delta`` fixes the entropy threshold for every ``n``; otherwise
    ``beta`` gives ``2^(-n^beta)`` unclamped; with neither the clamped
    default of :func:`default_delta` is used.
    """

    name: str
    spec: CoordinationSpec
    n_list: list
    k: int = 4
    seeds: list = field(default_factory=lambda: [0])
    delta: float | None = None
    beta: float | None = None
    samples: int = DEFAULT_SAMPLES
    construct_seed: int = 0
    code_seed: int = 0
    offset: int = 0
    trace: bool = False

    def __post_init__(self):
        self.n_list = [int(n) for n in self.n_list]
        self.seeds = [int(s) for s in self.seeds]
        if not self.n_list:
            raise ValueError("scenario needs at least one block length")
        for n in self.n_list:
            check_block_length(n)
        if not self.seeds:
            raise ValueError("scenario needs at least one seed")
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.delta is not None and self.beta is not None:
            raise ValueError("give delta or beta, not both")
        if self.offset not in (0, 1):
            raise ValueError("source offset must be 0 or 1")

    def delta_for(self, n: int) -> float:
        if self.delta is not None:
            return float(self.delta)
        if self.beta is not None:
            return float(2.0 ** (-(n**self.beta)))
        return default_delta(n)

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = dict(d)
        if "preset" in d:
            name = d.pop("preset")
            spec = preset(name)
            d.setdefault("name", name)
        else:
            spec = CoordinationSpec.from_dict(d.pop("spec"))
            d.setdefault("name", "custom")
        if "n" in d:
            d["n_list"] = d.pop("n")
        if isinstance(d.get("n_list"), int):
            d["n_list"] = [d["n_list"]]
        if isinstance(d.get("seeds"), int):
            d["seeds"] = list(range(d["seeds"]))
        return cls(spec=spec, **d)

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class BlockTrace:
    """Everything observed in one block, for metrics and debugging."""

    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    s_hat: np.ndarray
    u: np.ndarray | None = None
    z_tilde: np.ndarray | None = None
    v_tilde: np.ndarray | None = None
    z_hat: np.ndarray | None = None
    v_hat: np.ndarray | None = None


@dataclass
class RunResult:
    seed: int
    v_total: float
    v_per_block: float
    block_errors: int
    extra_fail: bool
    cr_rate: float
    sc_retries: int
    pooled: EmpiricalType
    wall_ms: float | None = None
    traces: list | None = None


def target_law(spec: CoordinationSpec, roles=TYPE_ROLES) -> np.ndarray:
    return joint(spec).marginal(list(roles)).table


def run_chain(spec: CoordinationSpec, layout: IndexLayout, k: int, seed: int, code: ChannelCode,
              offset: int = 0, trace: bool = False, timing: bool = False) -> RunResult:
    """One full encode, transmit, decode run of ``k`` chained blocks plus the final block."""
    t0 = time.perf_counter()
    n = layout.n
    streams = RandomnessStreams(seed)
    # S_0 .. S_{k+1}; the last one is the source during the final block
    sources = [sample_source(spec.p_s, n, streams.generator("source", i)) for i in range(k + 2)]
    cr = CommonRandomness.draw(layout, streams.generator("common_C"))
    enc = encode_chain(spec, layout, sources[: k + 1], cr, streams, code, offset=offset)
    inputs = enc.x_blocks + [enc.extra_block]
    ys = [transmit(x, spec.p_y_given_x, streams.generator("channel", i + 1)) for i, x in enumerate(inputs)]
    dec = decode_chain(spec, layout, ys, cr, streams, code)

    # the source paired with block i is the one its U chain was drawn against
    paired = [sources[i - offset] for i in range(1, k + 2)]
    s_hats = dec.s_hat_blocks + [dec.s_hat_extra]
    sizes = spec.sizes
    target = target_law(spec)
    per_block = []
    for s, x, y, sh in zip(paired, inputs, ys, s_hats):
        t = type_of({"S": s, "X": x, "Y": y, "Shat": sh}, sizes)
        per_block.append(t)
    pooled = per_block[0]
    for t in per_block[1:]:
        pooled = pooled + t
    errors = sum(
        not (np.array_equal(zh, zt) and np.array_equal(vh, vt))
        for zh, zt, vh, vt in zip(dec.z_hat_blocks, enc.z_blocks, dec.v_hat_blocks, enc.v_blocks)
    )
    traces = None
    if trace:
        traces = [BlockTrace(s=paired[i], x=inputs[i], y=ys[i], s_hat=s_hats[i],
                             u=enc.u_blocks[i], z_tilde=enc.z_blocks[i], v_tilde=enc.v_blocks[i],
                             z_hat=dec.z_hat_blocks[i], v_hat=dec.v_hat_blocks[i]) for i in range(k)]
        traces.append(BlockTrace(s=paired[k], x=inputs[k], y=ys[k], s_hat=s_hats[k]))
    return RunResult(
        seed=seed,
        v_total=variational_distance(pooled, target),
        v_per_block=float(np.mean([variational_distance(t, target) for t in per_block])),
        block_errors=int(errors),
        extra_fail=not np.array_equal(dec.payload, enc.payload),
        cr_rate=cr.total_bits / (k * n),
        sc_retries=int(sum(dec.sc_failure) + dec.extra_failure),
        pooled=pooled,
        wall_ms=(time.perf_counter() - t0) * 1e3 if timing else None,
        traces=traces,
    )


def _chain_job(args):
    return run_chain(*args)


def run_seeds(spec, layout, k, seeds, code, offset=0, trace=False, timing=False, workers=1) -> list[RunResult]:
    """Run every seed; results come back in seed-list order whatever ``workers`` is."""
    jobs = [(spec, layout, k, s, code, offset, trace, timing) for s in seeds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_chain_job, jobs))
    return [_chain_job(j) for j in jobs]


def cache_path(cache_dir, spec: CoordinationSpec, n: int, delta: float, samples: int, seed: int) -> str:
    return os.path.join(cache_dir, f"layout-{spec.digest()}-n{n}-d{delta:.6g}-m{samples}-s{seed}.json")


def get_layout(spec: CoordinationSpec, n: int, delta: float, samples: int = DEFAULT_SAMPLES, seed: int = 0,
               cache_dir=None, force: bool = False, workers: int = 1) -> IndexLayout:
    """Build the layout for ``(spec, n, delta)`` or load it from ``cache_dir``."""
    if cache_dir:
        path = cache_path(cache_dir, spec, n, delta, samples, seed)
        if os.path.exists(path):
            layout, _ = load_layout(path, spec)
            if not layout.feasible and not force:
                raise ValueError(f"cached layout {path} is infeasible; pass force to use it")
            return layout
    layout, profiles = construct(spec, n, delta=delta, samples=samples, seed=seed,
                                 workers=workers, allow_infeasible=force)
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        save_layout(path, layout, profiles)
    return layout


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def run_experiment(scenario: Scenario, force: bool = False, cache_dir=None, workers: int = 1,
                   timing: bool = False, trace_dir=None, layouts: dict | None = None) -> list[dict]:
    """CSV rows, one per ``(n, seed)``, in ``n_list`` then seed order.

    ``layouts`` may map ``n`` to a prebuilt layout and skips construction.
    """
    region = check_region(scenario.spec)
    if not region.member and not force:
        raise ValueError("target outside the achievable region: " + "; ".join(region.violations))
    rows = []
    for n in scenario.n_list:
        delta = scenario.delta_for(n)
        if layouts and n in layouts:
            layout = layouts[n]
        else:
            layout = get_layout(scenario.spec, n, delta, scenario.samples, scenario.construct_seed,
                                cache_dir=cache_dir, force=force, workers=workers)
        code = ChannelCode(scenario.spec, layout, seed=scenario.code_seed)
        results = run_seeds(scenario.spec, layout, scenario.k, scenario.seeds, code,
                            offset=scenario.offset, trace=scenario.trace, timing=timing, workers=workers)
        for r in results:
            rows.append({
                "scenario": scenario.name, "n": n, "k": scenario.k, "delta": layout.delta, "seed": r.seed,
                "V_total": r.v_total, "V_per_block": r.v_per_block, "D_proxy": layout.d_proxy,
                "cr_rate": r.cr_rate, "block_err_count": r.block_errors,
                "extra_block_fail": r.extra_fail, "wall_ms": r.wall_ms, "layout_hash": layout.digest(),
            })
            if trace_dir and r.traces:
                save_traces(os.path.join(trace_dir, f"trace-{scenario.name}-n{n}-seed{r.seed}.npz"), r.traces)
    return rows


def save_traces(path, traces: list) -> None:
    arrays = {}
    for i, t in enumerate(traces, start=1):
        for name, v in vars(t).items():
            if v is not None:
                arrays[f"block{i}_{name}"] = np.asarray(v)
    np.savez_compressed(path, **arrays)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def read_csv_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summarize(rows: list[dict]) -> list[dict]:
    """Per ``(scenario, n)`` median and interquartile range of ``V_total``."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["scenario"], int(r["n"])), []).append(r)
    out = []
    for (name, n), rs in sorted(groups.items()):
        v = np.array([float(r["V_total"]) for r in rs])
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        out.append({
            "scenario": name, "n": n, "runs": len(rs), "V_median": float(med), "V_iqr": float(q3 - q1),
            "block_err_total": int(sum(int(r["block_err_count"]) for r in rs)),
            "extra_fail_total": int(sum(int(r["extra_block_fail"]) for r in rs)),
        })
    return out


__all__ = [
    "BlockTrace", "CSV_COLUMNS", "RunResult", "Scenario", "get_layout", "read_csv_rows",
    "rows_to_csv", "run_chain", "run_experiment", "run_seeds", "save_traces",
    "summarize", "target_law",
]
