"""Command-line harness: run one solver, sweep seeds and algorithms, certify
points, and list registered problems.

Exit codes: 0 success (certification passed or unavailable), 2 certification
failed, 3 bound/divergence/constants error, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .. import accel, solvers
from ..core import as_point
from ..errors import (
    BoundExceededError,
    CertificationUnavailable,
    ConfigError,
    ConstantsError,
    DivergenceError,
    InputError,
    NcgoptError,
    OracleError,
)
from ..problems import build_problem, default_start, list_problems
from ..steps import (
    exact_hessian_surrogate,
    perturbed_hessian_surrogate,
    subsampled_hessian_surrogate,
)
from ..rng import run_stream
from . import reporting, samples

ALGOS = ("gd", "ncd", "ncg-a1", "ncg-a2", "ncg-b1", "ncg-b2", "ih-ncg-a", "sncg")

USAGE_ERROR = 64
RUNTIME_ERROR = 3
CERT_FAIL = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _load_toml(path: str) -> dict:
    try:
        import tomllib
    except ImportError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _coerce(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if "," in text:
        return [_coerce(part) for part in text.split(",")]
    return text


def _problem_options(args) -> dict:
    opts = {}
    if args.config:
        opts.update(_load_toml(args.config).get("problem", {}))
    for item in args.problem_opt or []:
        if "=" not in item:
            raise ConfigError(f"--problem-opt expects key=value, got {item!r}")
        key, _, raw = item.partition("=")
        opts[key] = _coerce(raw)
    return opts


def _solve_config(args, seed: int) -> solvers.SolveConfig:
    return solvers.SolveConfig(
        eps1=args.eps1,
        eps2=args.eps2,
        alpha=args.alpha,
        delta=args.delta,
        max_iters=args.max_iters,
        seed=seed,
        agd_smoothness=args.agd_smoothness,
    )


def _execute(args, algo: str, seed: int):
    oracle = build_problem(args.problem, _problem_options(args))
    if args.x0:
        x0 = as_point([float(v) for v in args.x0.split(",")], oracle.dim)
    else:
        x0 = default_start(oracle, seed)
    cfg = _solve_config(args, seed)

    if algo == "gd":
        return oracle, solvers.gd(oracle, x0, cfg.eps1, max_iters=cfg.max_iters)
    if algo == "ncd":
        eps = cfg.require_eps2()
        eps1 = None if args.ncd_pure else cfg.eps1
        return oracle, solvers.ncd(
            oracle, x0, eps, cfg.delta, eps1=eps1, seed=seed, max_iters=cfg.max_iters
        )
    if algo == "ncg-a1":
        return oracle, solvers.ncg_a1(oracle, x0, cfg)
    if algo == "ncg-a2":
        return oracle, solvers.ncg_a2(oracle, x0, cfg)
    if algo == "ncg-b1":
        return oracle, accel.ncg_b1(oracle, x0, cfg)
    if algo == "ncg-b2":
        return oracle, accel.ncg_b2(oracle, x0, cfg)
    if algo == "ih-ncg-a":
        eps2 = cfg.require_eps2()
        if args.surrogate == "exact":
            factory, eps3 = exact_hessian_surrogate(oracle), 0.0
        elif args.surrogate == "perturbed":
            eps3 = eps2 / 12.0
            gen = run_stream(seed).child("surrogate-basis").generator()
            factory = perturbed_hessian_surrogate(oracle, eps3, gen)
        else:
            if oracle.n_components is None:
                raise ConfigError("subsampled surrogate needs a finite-sum problem")
            size = args.s2
            if size is None:
                _, size = samples.sample_sizes(cfg, oracle.params, oracle.dim)
                size = min(size, oracle.n_components)
            factory, eps3 = subsampled_hessian_surrogate(oracle, size), eps2 / 12.0
        return oracle, solvers.ih_ncg_a(oracle, factory, x0, cfg, eps3=eps3)
    if algo == "sncg":
        if oracle.n_components is None:
            raise ConfigError("sncg needs a finite-sum problem")
        s1_theory, s2_theory = samples.sample_sizes(cfg, oracle.params, oracle.dim)
        n = oracle.n_components
        s1 = args.s1 if args.s1 is not None else min(s1_theory, n)
        s2 = args.s2 if args.s2 is not None else min(s2_theory, n)
        report = solvers.sncg(oracle, x0, cfg, s1, s2)
        if s1 < s1_theory:
            report.flags.append(f"s1_below_theory:{s1}<{s1_theory}")
        if s2 < s2_theory:
            report.flags.append(f"s2_below_theory:{s2}<{s2_theory}")
        return oracle, report
    raise ConfigError(f"unknown algorithm {algo!r}")


def _write_outputs(report, out: str, include_wall: bool):
    directory = os.path.dirname(out)
    if directory:
        os.makedirs(directory, exist_ok=True)
    trace_path = out + ".trace.csv"
    report_path = out + ".report.json"
    report.trace.write_csv(trace_path, include_wall=include_wall)
    reporting.write_report_json(report, report_path, os.path.basename(trace_path))
    return trace_path, report_path


def _exit_code_for(report) -> int:
    cert = report.certificate
    if cert is None:
        return 0
    return 0 if (cert.passed_first_order and cert.passed_second_order) else CERT_FAIL


def _cmd_run(args) -> int:
    out = args.out or f"runs/{args.algo}-{args.problem}-s{args.seed}"
    _, report = _execute(args, args.algo, args.seed)
    trace_path, report_path = _write_outputs(report, out, args.wall)
    cert = report.certificate
    cert_msg = (
        "no certificate"
        if cert is None
        else f"cert grad={cert.grad_norm:.3e} lambda_min={cert.lambda_min:.3e} "
        f"first={'ok' if cert.passed_first_order else 'FAIL'} "
        f"second={'ok' if cert.passed_second_order else 'FAIL'}"
    )
    print(
        f"{args.algo} on {args.problem}: iters={report.iters} "
        f"(bound {report.theoretical_iter_bound}) hvp={report.counters.total_hvp()} "
        f"{cert_msg} -> {trace_path}, {report_path}"
    )
    return _exit_code_for(report)


def _parse_seeds(spec: str):
    if ".." in spec:
        lo, _, hi = spec.partition("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in spec.split(",")]


def _cmd_sweep(args) -> int:
    algos = args.algo.split(",")
    for algo in algos:
        if algo not in ALGOS:
            raise ConfigError(f"unknown algorithm {algo!r}")
    seeds = _parse_seeds(args.seeds)
    os.makedirs(args.out, exist_ok=True)

    def one(algo, seed):
        _, report = _execute(args, algo, seed)
        return report

    # workers own their oracle and RNG streams; files are written here only
    results = {}
    with ThreadPoolExecutor(max_workers=args.workers) as pool:
        futures = {
            (algo, seed): pool.submit(one, algo, seed) for algo in algos for seed in seeds
        }
        for key, fut in futures.items():
            results[key] = fut.result()
    for (algo, seed), report in sorted(results.items()):
        _write_outputs(report, os.path.join(args.out, f"{algo}-s{seed}"), args.wall)

    summary = {"problem": args.problem, "seeds": seeds, "algos": {}}
    worst = 0
    for algo in algos:
        reports = [results[(algo, s)] for s in seeds]
        certs = [r.certificate for r in reports]
        passed = [
            c is not None and c.passed_first_order and c.passed_second_order for c in certs
        ]
        summary["algos"][algo] = {
            "mean_hvp_evals": float(np.mean([r.counters.total_hvp() for r in reports])),
            "mean_grad_evals": float(np.mean([r.counters.total_grad() for r in reports])),
            "mean_iters": float(np.mean([r.iters for r in reports])),
            "max_iters_observed": int(max(r.iters for r in reports)),
            "terminated_runs": int(sum(r.terminated for r in reports)),
            "certified_runs": int(sum(passed)),
            "runs": {
                str(s): {
                    "iters": results[(algo, s)].iters,
                    "hvp_evals": results[(algo, s)].counters.total_hvp(),
                    "terminated": results[(algo, s)].terminated,
                }
                for s in seeds
            },
        }
        for r in reports:
            worst = max(worst, _exit_code_for(r))
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for algo in algos:
        agg = summary["algos"][algo]
        print(
            f"{algo}: mean hvp={agg['mean_hvp_evals']:.1f} mean iters={agg['mean_iters']:.1f} "
            f"certified {agg['certified_runs']}/{len(seeds)}"
        )
    return worst


def _cmd_certify(args) -> int:
    oracle = build_problem(args.problem, _problem_options(args))
    if args.report:
        with open(args.report, "r", encoding="utf-8") as fh:
            x = as_point(json.load(fh)["x_final"], oracle.dim)
    elif args.x:
        x = as_point([float(v) for v in args.x.split(",")], oracle.dim)
    else:
        raise ConfigError("certify needs --x or --report")
    cert = reporting.certify(oracle, x, args.eps1, args.eps2)
    print(
        f"grad_norm={cert.grad_norm:.6e} (target {cert.eps1_target:g}): "
        f"{'pass' if cert.passed_first_order else 'FAIL'}; "
        f"lambda_min={cert.lambda_min:.6e} (target -{cert.eps2_target:g}): "
        f"{'pass' if cert.passed_second_order else 'FAIL'}"
    )
    return 0 if (cert.passed_first_order and cert.passed_second_order) else CERT_FAIL


def _cmd_list(args) -> int:
    for key in list_problems():
        print(key)
    return 0


def _add_common(p):
    p.add_argument("--problem", choices=list_problems(), default="trig")
    p.add_argument("--config", help="TOML file with a [problem] table of options")
    p.add_argument(
        "--problem-opt",
        action="append",
        metavar="KEY=VALUE",
        help="problem option override (repeatable)",
    )


def _add_solve(p):
    p.add_argument("--eps1", type=float, default=1e-3, help="first-order target")
    p.add_argument("--eps2", type=float, default=None, help="second-order target")
    p.add_argument("--alpha", type=float, default=None, help="eps2 = eps1**alpha")
    p.add_argument("--delta", type=float, default=0.1, help="total failure probability")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--s1", type=int, default=None, help="gradient sample size override")
    p.add_argument("--s2", type=int, default=None, help="Hessian sample size override")
    p.add_argument("--agd-smoothness", choices=("paper", "safe"), default="safe")
    p.add_argument("--surrogate", choices=("exact", "perturbed", "subsampled"), default="exact")
    p.add_argument("--ncd-pure", action="store_true", help="NCD without the first-order rule")
    p.add_argument("--x0", help="comma-separated starting point (default: seeded draw)")
    p.add_argument("--wall", action="store_true", help="write real wall times into the CSV")


def _build_parser() -> _Parser:
    parser = _Parser(prog="ncgopt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one solver on one problem", parents=[])
    _add_common(p_run)
    _add_solve(p_run)
    p_run.add_argument("--algo", choices=ALGOS, required=True)
    p_run.add_argument("--out", help="output prefix (writes .trace.csv and .report.json)")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run algorithms across seeds and aggregate")
    _add_common(p_sweep)
    _add_solve(p_sweep)
    p_sweep.add_argument("--algo", required=True, help="comma-separated algorithm list")
    p_sweep.add_argument("--seeds", required=True, help="e.g. 1..30 or 0,3,7")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--workers", type=int, default=min(8, os.cpu_count() or 1))
    p_sweep.set_defaults(func=_cmd_sweep)

    p_cert = sub.add_parser("certify", help="dense-certify a point")
    _add_common(p_cert)
    p_cert.add_argument("--eps1", type=float, required=True)
    p_cert.add_argument("--eps2", type=float, required=True)
    p_cert.add_argument("--x", help="comma-separated point")
    p_cert.add_argument("--report", help="report JSON whose x_final to certify")
    p_cert.set_defaults(func=_cmd_certify)

    p_list = sub.add_parser("list-problems", help="list registered problem keys")
    p_list.set_defaults(func=_cmd_list)

    return parser


def run_cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_ERROR
    try:
        return args.func(args)
    except (ConfigError, InputError) as exc:
        print(f"ncgopt: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (BoundExceededError, DivergenceError, ConstantsError, OracleError) as exc:
        print(f"ncgopt: run failed: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    except CertificationUnavailable as exc:
        print(f"ncgopt: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    except NcgoptError as exc:
        print(f"ncgopt: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
