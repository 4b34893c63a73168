"""Command-line front end.

Subcommands: ``run`` (single run, history CSV + summary JSON), ``sweep``
(accuracy-grid study with fitted slope), ``audit`` (run + bound audit),
``compare`` (dynamic vs fixed-accuracy cost).  Exit codes: 0 success,
2 configuration error, 3 iteration cap exhausted, 4 audit violation.
"""

from __future__ import annotations

import argparse
import json
import sys

from .driver import ConfigError, check_history
from .harness import (RunSpec, cost_savings_report, eps_scaling_study,
                      execute_run, parse_config_file, parse_eps_grid,
                      seed_sweep, summary_dict, sweep_rows_table,
                      write_summary_json, write_sweep_csv)
from .oracle import COST_MODELS, POLICIES
from .problems import list_problems

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CAP = 3
EXIT_AUDIT = 4

_CFG_FLAGS = {
    "Delta0": float, "Delta_max": float, "vartheta": float, "eta1": float,
    "eta2": float, "gamma1": float, "gamma2": float, "gamma3": float,
    "omega": float, "varsigma": float, "gamma_zeta": float,
    "kappa_zeta": float, "zeta0": float, "max_iterations": int,
}

_PROBLEM_FLAGS = {"dim": int, "cond": float, "terms": int, "lam": float}


def _add_common(parser: argparse.ArgumentParser):
    # defaults stay None here so values from --config are not masked
    parser.add_argument("--problem", default=None,
                        help=f"one of {', '.join(list_problems())}")
    parser.add_argument("--q", type=int, default=None,
                        help="criticality order (default: length of --eps)")
    parser.add_argument("--eps", default=None,
                        help="comma-separated per-order accuracy targets (default 1e-3)")
    parser.add_argument("--policy", default=None, choices=POLICIES)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--x0", default=None,
                        help="comma-separated start point (default: the problem's)")
    parser.add_argument("--out-dir", default=None)
    parser.add_argument("--tag", default=None)
    parser.add_argument("--config", default=None,
                        help="flat key=value file; flags override it")
    for name, typ in _CFG_FLAGS.items():
        parser.add_argument(f"--{name.replace('_', '-').lower()}", dest=name,
                            type=typ, default=None)
    for name, typ in _PROBLEM_FLAGS.items():
        parser.add_argument(f"--{name}", dest=f"prob_{name}", type=typ, default=None)


def _spec_from_args(args) -> RunSpec:
    file_vals = parse_config_file(args.config) if args.config else {}

    def pick(key, cast, default=None):
        flag = getattr(args, key, None)
        if flag is not None:
            return flag
        if key in file_vals:
            return cast(file_vals[key])
        return default

    eps_text = args.eps if args.eps is not None else file_vals.get("eps", "1e-3")
    eps = tuple(float(t) for t in str(eps_text).split(","))
    q = pick("q", int)
    if q is not None:
        if len(eps) == 1:
            eps = eps * q
        elif len(eps) != q:
            raise ConfigError("--eps length must match --q")

    overrides = {}
    for name, typ in _CFG_FLAGS.items():
        val = pick(name, typ)
        if val is not None:
            overrides[name] = val
    params = {}
    for name, typ in _PROBLEM_FLAGS.items():
        val = getattr(args, f"prob_{name}", None)
        if val is None and name in file_vals:
            val = typ(file_vals[name])
        if val is not None:
            params[name] = val
    problem = args.problem if args.problem is not None else file_vals.get("problem", "quadratic")
    seed = pick("seed", int, 0)
    policy = args.policy if args.policy is not None else file_vals.get("policy", "adversarial")
    x0_text = args.x0 if args.x0 is not None else file_vals.get("x0")
    x0 = tuple(float(t) for t in str(x0_text).split(",")) if x0_text else None
    return RunSpec(problem=problem, problem_params=params, eps=eps, policy=policy,
                   seed=seed, cfg_overrides=overrides, x0=x0, out_dir=args.out_dir,
                   tag=args.tag)


def _cmd_run(args) -> int:
    spec = _spec_from_args(args)
    spec.build_config()  # validate before any work happens
    result, _, _, paths = execute_run(spec, write=True, with_bounds=True)
    print(f"terminated={result.terminated} iterations={result.n_iterations} "
          f"x_eps={[round(float(v), 6) for v in result.x_eps]} "
          f"n_f={result.eval_ledger.n_f} n_deriv={result.eval_ledger.n_deriv()}")
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return EXIT_OK if result.terminated else EXIT_CAP


def _cmd_audit(args) -> int:
    spec = _spec_from_args(args)
    spec.build_config()
    result, problem, _, paths = execute_run(spec, write=True)
    if not result.terminated:
        print("run hit the iteration cap; audit skipped")
        return EXIT_CAP
    report = check_history(result, problem)
    print(report.summary())
    summary = summary_dict(result, audit=report)
    write_summary_json(paths["summary"], summary)
    return EXIT_OK if report.ok else EXIT_AUDIT


def _cmd_sweep(args) -> int:
    spec = _spec_from_args(args)
    grid = parse_eps_grid(args.eps_grid)
    q = args.q or len(spec.eps)
    out = spec.output_dir()
    seeds = tuple(range(args.seeds))
    if len(grid) == 1:
        # seed sweep at one fixed accuracy: rows only, no slope to fit
        rows = seed_sweep(spec.problem, q, grid[0], spec.policy, seeds,
                          problem_params=spec.problem_params,
                          cfg_overrides=spec.cfg_overrides)
        csv_path = out / f"sweep_{spec.problem}_q{q}.csv"
        write_sweep_csv(csv_path, rows)
        done = sum(r.terminated for r in rows)
        print(f"seed sweep: {done}/{len(rows)} terminated")
        print(f"rows: {csv_path}")
        return EXIT_OK if done else EXIT_CAP
    res = eps_scaling_study(spec.problem, q, grid, policy=spec.policy, seeds=seeds,
                            problem_params=spec.problem_params,
                            cfg_overrides=spec.cfg_overrides)
    csv_path = out / f"sweep_{spec.problem}_q{q}.csv"
    write_sweep_csv(csv_path, res.rows)
    summary_path = out / f"sweep_{spec.problem}_q{q}.json"
    with open(summary_path, "w") as fh:
        json.dump({"rows": sweep_rows_table(res), "slope": res.slope,
                   "slope_limit": res.slope_limit, "passed": res.passed,
                   "excluded_non_terminated": res.excluded}, fh, indent=2)
    print(f"slope={res.slope:.3f} limit={res.slope_limit:.2f} "
          f"{'PASS' if res.passed else 'FAIL'} rows={len(res.rows)} "
          f"excluded={res.excluded}")
    print(f"rows: {csv_path}")
    print(f"summary: {summary_path}")
    if res.excluded and res.excluded == len(res.rows):
        return EXIT_CAP
    return EXIT_OK if res.passed else EXIT_AUDIT


def _cmd_compare(args) -> int:
    spec = _spec_from_args(args)
    spec.build_config()
    report = cost_savings_report(spec, cost_model=args.cost_model)
    print(f"cost model: {report.cost_model}")
    print(f"dynamic   cost: f={report.dynamic_cost_f:.4g} "
          f"deriv={report.dynamic_cost_d:.4g} calls={report.dynamic_calls}")
    print(f"fixed-acc cost: f={report.fixed_cost_f:.4g} "
          f"deriv={report.fixed_cost_d:.4g} calls={report.fixed_calls}")
    print(f"dynamic/fixed ratio: {report.ratio:.4g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dyntrust",
        description="Trust-region minimization with dynamically accurate evaluations")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="single run; writes history CSV + summary JSON")
    _add_common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="accuracy sweep with fitted slope")
    _add_common(p_sweep)
    p_sweep.add_argument("--eps-grid", required=True,
                         help="e.g. '1e-1,3e-2,1e-2' or '1e-1..1e-4'")
    p_sweep.add_argument("--seeds", type=int, default=5)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_audit = sub.add_parser("audit", help="run, then check every bound")
    _add_common(p_audit)
    p_audit.set_defaults(func=_cmd_audit)

    p_cmp = sub.add_parser("compare", help="dynamic vs fixed-accuracy cost")
    _add_common(p_cmp)
    p_cmp.add_argument("--cost-model", default="inverse", choices=sorted(COST_MODELS))
    p_cmp.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
