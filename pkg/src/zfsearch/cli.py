"""Batch front-end: run searches on registry or user plants, reproduce the
benchmark tables, and emit CSV/JSON results.

Exit codes: 0 success, 2 search infeasible at every positive slope,
1 runtime error, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import analysis, ctbridge
from .lti import RationalTransferFunction, load_registry, nyquist_value

USAGE_EXIT = 64
INFEASIBLE_EXIT = 2

METHOD_FLAGS = {
    "fir-hard": "fir_hard",
    "fir-lift": "fir_lifting",
    "iir-causal": "iir_causal",
    "iir-anticausal": "iir_anticausal",
    "circle": "circle",
    "nyquist": "nyquist",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(USAGE_EXIT)


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return f"{x:.10g}"
    return str(x)


def _load_plant(args) -> RationalTransferFunction:
    if args.plant_file:
        with open(args.plant_file) as f:
            data = json.load(f)
        return RationalTransferFunction(data["num"], data["den"],
                                        data.get("domain", "z"))
    registry = load_registry()
    return registry[args.plant]


def _write_json(path, payload):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as f:
        json.dump(payload, f, indent=2)


def _write_csv(path, header, rows):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def cmd_analyze(args) -> int:
    G = _load_plant(args)
    method = METHOD_FLAGS[args.method]
    out_dir = args.out or "."
    if method == "nyquist":
        kn = nyquist_value(G)
        payload = {"plant": args.plant or args.plant_file, "method": "nyquist",
                   "value": kn.value, "unbounded": kn.unbounded}
        _write_json(os.path.join(out_dir, "result.json"), payload)
        print(f"nyquist value: {_fmt(kn.value)}")
        return 0
    n_f = args.nf if args.nf is not None else args.n
    n_b = args.nb if args.nb is not None else args.n
    lambda_grid = None
    if args.lambda_grid:
        lambda_grid = np.array([float(x) for x in args.lambda_grid.split(",")])
    result = analysis.max_slope(G, method, n_f=n_f, n_b=n_b, odd=args.odd,
                                tol=args.tol, grid_size=args.grid,
                                lambda_grid=lambda_grid)
    analysis.consistency_check(result, args.odd)
    payload = result.to_json()
    payload["plant"] = args.plant or args.plant_file
    _write_json(os.path.join(out_dir, "result.json"), payload)
    if result.multiplier is not None:
        _write_json(os.path.join(out_dir, "multiplier.json"), result.multiplier_json())
    print(f"{args.method} k_max = {_fmt(result.k_max)} "
          f"(margin {result.verification_margin:.3e}, {result.wall_time:.1f}s)")
    return 0 if result.k_max > 0 else INFEASIBLE_EXIT


_TABLE2_HEADER = ["plant", "method", "odd", "n_f", "n_b", "k_max",
                  "verification_margin", "nyquist_value", "wall_time_s"]


def _table2_cell(registry, plant_id, method, odd, n, tol, grid):
    G = registry[plant_id]
    try:
        if method == "circle":
            r = analysis.max_slope(G, "circle", tol=tol, grid_size=grid)
        else:
            r = analysis.max_slope(G, method, n_f=n, n_b=n, odd=odd, tol=tol,
                                   grid_size=grid)
        analysis.consistency_check(r, odd)
        return [plant_id, method, odd, r.n_f, r.n_b, r.k_max,
                r.verification_margin, r.nyquist_value, r.wall_time], r
    except Exception as exc:  # record the failure, keep the run going
        return [plant_id, method, odd, n, n, "error", str(exc), "", ""], None


def cmd_table2(args) -> int:
    registry = load_registry()
    plants = args.plants.split(",") if args.plants else \
        [p for p in registry.ids() if not p.endswith("-ct")]
    methods = args.methods.split(",") if args.methods else \
        ["circle", "fir-hard", "fir-lift", "iir-causal", "iir-anticausal"]
    n_list = [int(x) for x in args.n_list.split(",")]
    odd_choices = [False, True] if args.odd_both else [args.odd]

    jobs = []
    for plant_id in plants:
        for flag in methods:
            method = METHOD_FLAGS[flag]
            if method == "circle":
                jobs.append((plant_id, method, False, 0))
                continue
            for odd in odd_choices:
                if method.startswith("iir") and not odd:
                    continue
                for n in n_list:
                    jobs.append((plant_id, method, odd, n))

    rows = []
    with ThreadPoolExecutor(max_workers=args.jobs) as pool:
        futures = [pool.submit(_table2_cell, registry, *job,
                               args.tol, args.grid) for job in jobs]
        for fut in futures:
            row, _ = fut.result()
            rows.append(row)
    rows.sort(key=lambda r: (r[0], r[1], str(r[2]), r[3]))
    _write_csv(os.path.join(args.out_dir, "table2.csv"), _TABLE2_HEADER, rows)

    if args.sweep_plant:
        G = registry[args.sweep_plant]
        sweep_rows, sparsity_rows = [], []
        best = (0.0, None)
        for n in range(1, args.n_max + 1):
            r = analysis.max_slope(G, "fir_hard", n_f=n, n_b=n, odd=args.odd,
                                   tol=args.tol, grid_size=args.grid)
            sweep_rows.append([n, r.k_max, r.wall_time])
            if r.multiplier is not None:
                for i in analysis.significant_taps(r.multiplier):
                    sparsity_rows.append([n, i, r.multiplier.tap(i)])
            if r.k_max > best[0]:
                best = (r.k_max, n)
        _write_csv(os.path.join(args.out_dir, f"slope_vs_n_{args.sweep_plant}.csv"),
                   ["n", "k_max", "wall_time_s"], sweep_rows)
        _write_csv(os.path.join(args.out_dir, f"sparsity_{args.sweep_plant}.csv"),
                   ["n", "tap_index", "tap_value"], sparsity_rows)
        print(f"sweep best: k = {_fmt(best[0])} at n* = {best[1]}")
    print(f"wrote {os.path.join(args.out_dir, 'table2.csv')} ({len(rows)} rows)")
    return 0


def cmd_ct(args) -> int:
    G = _load_plant(args)
    result = ctbridge.bridge_search(G, args.ts, args.nf, args.nb, args.odd,
                                    eps_prune=args.eps_prune, tol=args.tol,
                                    grid_size=args.grid)
    out_dir = args.out or "."
    _write_json(os.path.join(out_dir, "delay_multiplier.json"),
                result.multiplier.to_json())
    w, phase = ctbridge.phase_sweep(result.multiplier, G, result.ct.k_max)
    _write_csv(os.path.join(out_dir, "phase_sweep.csv"),
               ["omega", "phase_degrees"], list(zip(w, phase)))
    payload = {
        "discrete_k": result.discrete.k_max,
        "ct_k_max": result.ct.k_max,
        "capped_by_nyquist": result.ct.capped_by_nyquist,
        "nyquist_value_ct": result.ct.nyquist_value,
        "terms": result.multiplier.to_json()["terms"],
    }
    _write_json(os.path.join(out_dir, "ct_result.json"), payload)
    print(f"discrete K_d = {_fmt(result.discrete.k_max)}, "
          f"continuous K = {_fmt(result.ct.k_max)}")
    return 0 if result.ct.k_max > 0 else INFEASIBLE_EXIT


def build_parser() -> _Parser:
    parser = _Parser(prog="zfsearch",
                     description="Multiplier searches for slope-restricted "
                                 "Lur'e feedback certification")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--plant", help="registry plant id (see plants.json)")
        p.add_argument("--plant-file", help="JSON file with num/den/domain")
        p.add_argument("--tol", type=float, default=1e-5, help="bisection tolerance")
        p.add_argument("--grid", type=int, default=2048, help="verification grid size")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("analyze", help="single plant, single method")
    common(p)
    p.add_argument("--method", required=True, choices=sorted(METHOD_FLAGS))
    p.add_argument("--n", type=int, default=1, help="tap half-order (n_f = n_b)")
    p.add_argument("--nf", type=int, help="anticausal taps (overrides --n)")
    p.add_argument("--nb", type=int, help="causal taps (overrides --n)")
    p.add_argument("--odd", action="store_true", help="odd nonlinearity class")
    p.add_argument("--lambda-grid", help="comma-separated decay rates for IIR")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("table2", help="benchmark table over plants and methods")
    p.add_argument("--plants", help="comma-separated plant ids (default: discrete set)")
    p.add_argument("--methods", help="comma-separated method flags")
    p.add_argument("--n-list", default="1,2")
    p.add_argument("--odd", action="store_true")
    p.add_argument("--odd-both", action="store_true", help="run odd and non-odd")
    p.add_argument("--sweep-plant", help="plant id for a slope-vs-n sweep")
    p.add_argument("--n-max", type=int, default=30, help="sweep upper order")
    p.add_argument("--jobs", type=int, default=min(4, os.cpu_count() or 1))
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--grid", type=int, default=2048)
    p.add_argument("--out-dir", default=".")
    p.set_defaults(func=cmd_table2)

    p = sub.add_parser("ct", help="continuous-time certification via the bridge")
    common(p)
    p.add_argument("--ts", type=float, required=True, help="sampling time")
    p.add_argument("--nf", type=int, default=1)
    p.add_argument("--nb", type=int, default=1)
    p.add_argument("--odd", action="store_true")
    p.add_argument("--eps-prune", type=float, default=1e-3)
    p.set_defaults(func=cmd_ct)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "plant", None) is None and getattr(args, "plant_file", None) is None \
            and args.command in ("analyze", "ct"):
        parser.error("one of --plant / --plant-file is required")
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
