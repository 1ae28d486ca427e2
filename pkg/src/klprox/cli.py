"""Command line interface.

Verbs:
  run     solve one configuration, write trace.csv + report.json
  sweep   cartesian parameter grids, optionally in parallel (KLPROX_THREADS)
  check   invariant and calculus-rule suites, one PASS/FAIL line each
  report  re-fit diagnostics on stored trace CSVs
"""

import argparse
import dataclasses
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .core import ConfigurationError, InsufficientDataError
from .diagnostics import fit_kl_exponent_from_trace, fit_linear_rate, run_rule_suite
from .harness import (
    PRESETS,
    build_config,
    emit_csv,
    emit_json,
    parse_config_file,
    read_trace_csv,
    run_experiment,
    sweep_threads,
)


def _add_common(parser):
    parser.add_argument("--config", metavar="PATH", help="flat key = value config file")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named problem preset")
    parser.add_argument("--seed", type=int, help="RNG seed")
    parser.add_argument("--out", metavar="DIR", default="out", help="output directory")
    parser.add_argument("--max-iters", type=int, dest="max_iters")
    parser.add_argument("--tol", type=float)
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config field (repeatable)")


def _collect_overrides(args):
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        overrides[key.strip()] = val.strip()
    for key in ("preset", "seed", "max_iters", "tol"):
        val = getattr(args, key, None)
        if val is not None:
            overrides[key] = val
    return overrides


def _config_from_args(args):
    file_values = parse_config_file(args.config) if args.config else {}
    return build_config(file_values, _collect_overrides(args))


def _run_one(cfg, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    report, trace = run_experiment(cfg)
    emit_csv(trace, os.path.join(out_dir, "trace.csv"))
    emit_json(report, os.path.join(out_dir, "report.json"))
    return report


def cmd_run(args):
    cfg = _config_from_args(args)
    report = _run_one(cfg, args.out)
    tag = "converged" if report.converged else "NOT converged"
    print(f"{cfg.preset or cfg.reg}: {tag} in {report.iterations} iterations, "
          f"residual {report.final_residual:.3e}, objective {report.final_objective:.6g}")
    if report.rate:
        print(f"  rate: rho_hat={report.rate['rho_hat']:.4f} kind={report.rate['kind']} "
              f"r2={report.rate['r_squared']:.4f}")
    if report.kl:
        print(f"  kl:   alpha_hat={report.kl['alpha_hat']:.4f} r2={report.kl['r_squared']:.4f}")
    print(f"  wrote {args.out}/trace.csv and {args.out}/report.json")
    return 0


def cmd_sweep(args):
    base = _config_from_args(args)
    grids = {}
    for item in args.grid:
        if "=" not in item:
            raise ConfigurationError(f"--grid expects KEY=v1,v2,..., got {item!r}")
        key, vals = item.split("=", 1)
        grids[key.strip()] = [v.strip() for v in vals.split(",") if v.strip()]
    if not grids:
        raise ConfigurationError("sweep needs at least one --grid KEY=v1,v2")

    keys = sorted(grids)
    combos = list(itertools.product(*(grids[k] for k in keys)))
    jobs = []
    for combo in combos:
        overrides = dict(zip(keys, combo))
        cfg = build_config(dataclasses.asdict(base), overrides)
        name = "_".join(f"{k}={v}" for k, v in zip(keys, combo))
        jobs.append((name, cfg))

    workers = sweep_threads(args.jobs)
    results = []
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(_run_one, cfg, os.path.join(args.out, name)): name
                   for name, cfg in jobs}
        for fut, name in futures.items():
            results.append((name, fut.result()))
    for name, report in sorted(results):
        tag = "ok" if report.converged else "no-conv"
        print(f"{name}: {tag} iters={report.iterations} residual={report.final_residual:.3e}")
    print(f"swept {len(results)} configurations with {workers} worker(s) into {args.out}/")
    return 0


def cmd_check(args):
    from .checks import run_inequality_suite

    failures = 0
    print("== calculus-rule suite ==")
    for res in run_rule_suite(n_samples=args.samples):
        print(str(res))
        if not res.passed:
            failures += 1
    print("== inequality suite ==")
    for name, passed, detail in run_inequality_suite(quick=args.quick):
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
        if not passed:
            failures += 1
    print(f"{failures} failure(s)")
    return 1 if failures else 0


def cmd_report(args):
    from types import SimpleNamespace

    out = []
    for path in args.csv:
        cols = read_trace_csv(path)
        trace = SimpleNamespace(
            objectives=cols["objective"],
            residuals=cols["residual"],
            subgrad_dists=cols["subgrad_dist"],
            converged=bool(cols["residual"][-1] <= args.tol),
            final_objective=float(cols["objective"][-1]),
        )
        entry = {"csv": path, "iterations": int(cols["iter"][-1])}
        try:
            use = "subgrad" if np.isfinite(cols["subgrad_dist"]).sum() else "residual"
            f = fit_kl_exponent_from_trace(trace, use=use)
            entry["kl"] = {"alpha_hat": f.alpha_hat, "c_hat": f.c_hat,
                           "r_squared": f.r_squared, "use": use}
        except InsufficientDataError as exc:
            entry["kl"] = {"error": str(exc)}
        try:
            r = fit_linear_rate(trace)
            entry["rate"] = (None if r is None else
                             {"rho_hat": r.rho_hat, "kind": r.kind, "r_squared": r.r_squared})
        except InsufficientDataError as exc:
            entry["rate"] = {"error": str(exc)}
        out.append(entry)
    print(json.dumps(out, indent=2))
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="klprox",
                                     description="composite optimization solvers and KL diagnostics")
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    _add_common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a cartesian grid of experiments")
    _add_common(p_sweep)
    p_sweep.add_argument("--grid", action="append", default=[], metavar="KEY=v1,v2",
                         help="values to sweep for one key (repeatable)")
    p_sweep.add_argument("--jobs", type=int, default=None,
                         help="parallel workers (default: KLPROX_THREADS or cpu count)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_check = sub.add_parser("check", help="run invariant and rule suites")
    p_check.add_argument("--samples", type=int, default=8000, help="sampling budget per fit")
    p_check.add_argument("--quick", action="store_true", help="smaller inequality sample sizes")
    p_check.set_defaults(func=cmd_check)

    p_report = sub.add_parser("report", help="re-fit diagnostics on stored CSVs")
    p_report.add_argument("csv", nargs="+", help="trace CSV files")
    p_report.add_argument("--tol", type=float, default=1e-10,
                          help="residual level treated as converged")
    p_report.set_defaults(func=cmd_report)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
