"""Command-line entry point: ``construct``, ``run``, ``validate`` and ``report``."""

from __future__ import annotations

import argparse
import glob
import os
import sys

from .construction import InfeasibleLayoutError, construct, load_layout, rate_report, save_layout
from .experiment import Scenario, read_csv_rows, rows_to_csv, run_experiment, summarize
from .presets import PRESETS, preset


def _scenario(args) -> Scenario:
    if args.config:
        sc = Scenario.load(args.config)
        overrides = {}
    else:
        sc = None
        overrides = {"name": args.preset, "spec": preset(args.preset)}
    # command-line flags override the config file
    if args.n:
        overrides["n_list"] = args.n
    if getattr(args, "k", None) is not None:
        overrides["k"] = args.k
    if args.delta is not None:
        overrides.update(delta=args.delta, beta=None)
    if args.beta is not None:
        overrides.update(beta=args.beta, delta=None)
    if args.samples is not None:
        overrides["samples"] = args.samples
    seeds = getattr(args, "seed", None)
    if seeds:
        overrides["seeds"] = seeds
    elif getattr(args, "seeds", None):
        overrides["seeds"] = list(range(args.seeds))
    if getattr(args, "offset", None) is not None:
        overrides["offset"] = args.offset
    if getattr(args, "trace", False):
        overrides["trace"] = True
    if sc is None:
        overrides.setdefault("n_list", [256])
        return Scenario(**overrides)
    base = dict(vars(sc))
    base.update(overrides)
    return Scenario(**base)


def _common(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", default="bsc-scenario", choices=sorted(PRESETS))
    src.add_argument("--config", help="scenario JSON file (preset name or inline tables)")
    p.add_argument("--n", type=int, nargs="+", help="block length(s), powers of two")
    thr = p.add_mutually_exclusive_group()
    thr.add_argument("--delta", type=float, help="fixed entropy threshold")
    thr.add_argument("--beta", type=float, help="threshold 2^(-n^beta), unclamped")
    p.add_argument("--samples", type=int, help="Monte Carlo samples per profile")
    p.add_argument("--force", action="store_true", help="accept infeasible layouts and region violations")
    p.add_argument("--workers", type=int, default=1)


def cmd_construct(args) -> int:
    sc = _scenario(args)
    for n in sc.n_list:
        delta = sc.delta_for(n)
        try:
            layout, profiles = construct(sc.spec, n, delta=delta, samples=sc.samples, seed=args.construct_seed,
                                         workers=args.workers, allow_infeasible=args.force)
        except InfeasibleLayoutError as e:
            print(f"error: {e} (use --force to keep it)", file=sys.stderr)
            return 2
        if len(sc.n_list) == 1:
            path = args.out or f"layout-n{n}.json"
        else:
            os.makedirs(args.out or ".", exist_ok=True)
            path = os.path.join(args.out or ".", f"layout-n{n}.json")
        save_layout(path, layout, profiles)
        print(f"n={n} delta={delta:.6g} layout {layout.digest()} -> {path}")
        for line in rate_report(layout, sc.k).lines():
            print(line)
    return 0


def cmd_run(args) -> int:
    sc = _scenario(args)
    layouts = None
    if args.layout:
        try:
            layout, _ = load_layout(args.layout, sc.spec)
        except ValueError as e:
            print(f"error: {e}", file=sys.stderr)
            return 2
        layouts = {layout.n: layout}
        if layout.n not in sc.n_list:
            sc.n_list = [layout.n]
    trace_dir = None
    if sc.trace:
        trace_dir = args.trace_dir or (os.path.dirname(args.out) if args.out else ".") or "."
        os.makedirs(trace_dir, exist_ok=True)
    try:
        rows = run_experiment(sc, force=args.force, cache_dir=args.cache, workers=args.workers,
                              timing=args.timing, trace_dir=trace_dir, layouts=layouts)
    except InfeasibleLayoutError as e:
        print(f"error: {e} (use --force to run anyway)", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    text = rows_to_csv(rows)
    if args.out:
        os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_validate(args) -> int:
    from .validation import freeze_profiles, run_all

    spec = preset(args.preset)
    reports = run_all(spec, cases=args.cases)
    for r in reports:
        print(r.line())
    if args.freeze:
        freeze_profiles(spec, args.freeze_n, args.freeze)
        print(f"exact profiles written to {args.freeze}")
    failed = [r for r in reports if not r.passed]
    print(f"{len(reports) - len(failed)}/{len(reports)} oracle checks passed")
    return 1 if failed else 0


def cmd_report(args) -> int:
    paths = []
    for p in args.paths:
        if not os.path.exists(p):
            print(f"error: {p} does not exist", file=sys.stderr)
            return 2
        paths += sorted(glob.glob(os.path.join(p, "*.csv"))) if os.path.isdir(p) else [p]
    if not paths:
        print("error: no CSV files found", file=sys.stderr)
        return 2
    rows = []
    for p in paths:
        rows += read_csv_rows(p)
    summary = summarize(rows)
    cols = ("scenario", "n", "runs", "V_median", "V_iqr", "block_err_total", "extra_fail_total")
    print(",".join(cols))
    for s in summary:
        print(",".join(f"{s[c]:.6g}" if isinstance(s[c], float) else str(s[c]) for c in cols))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polarcoord",
                                     description="Polar-coded empirical coordination simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", help="build and save the index layout")
    _common(p)
    p.add_argument("--k", type=int, default=4, help="chain length used for the rate printout")
    p.add_argument("--seed", dest="construct_seed", type=int, default=0, help="Monte Carlo seed")
    p.add_argument("--out", help="layout file (or directory when several --n are given)")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("run", help="encode, transmit and decode; emit CSV rows")
    _common(p)
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int, nargs="+", help="master seed(s)")
    p.add_argument("--seeds", type=int, help="use seeds 0..N-1")
    p.add_argument("--offset", type=int, choices=(0, 1), help="source block offset for the U chain")
    p.add_argument("--trace", action="store_true", help="save per-block traces as .npz")
    p.add_argument("--trace-dir")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--cache", help="directory of cached layouts")
    p.add_argument("--layout", help="use this layout file instead of constructing")
    p.add_argument("--timing", action="store_true", help="fill wall_ms (breaks byte-identical output)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="run the exhaustive oracle checks")
    p.add_argument("--preset", default="bsc-scenario", choices=sorted(PRESETS))
    p.add_argument("--cases", type=int, default=1000, help="random SC cases per block length")
    p.add_argument("--freeze", help="also write exact profiles to this JSON fixture")
    p.add_argument("--freeze-n", type=int, nargs="+", default=[4, 8])
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("report", help="per-n median and IQR of V over CSV files")
    p.add_argument("paths", nargs="+", help="CSV files or directories of them")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
