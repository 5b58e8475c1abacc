"""Command-line interface.

Subcommands: ``quantile``, ``solve``, ``schedule``, ``demo``, ``coverage``,
``consistency``.  Exit codes: 0 success, 2 solver non-convergence,
3 configuration error.
"""

import argparse
import sys

import numpy as np

from smre import harness
from smre.config import (
    ConfigError,
    build_dictionary,
    build_family,
    build_grid,
    build_operator,
    build_penalty,
    build_solver_config,
    load_config,
    noise_level,
)
from smre.grid import signal_from_csv, signal_to_csv
from smre.harness import run_consistency, run_coverage, run_denoise_demo
from smre.quantile import quantile, quantile_se, simulate
from smre.rates import SourceElement, schedule_dyadic, schedule_orthonormal
from smre.solver import ConstraintSet, solve_smre

EXIT_OK = 0
EXIT_NONCONVERGED = 2
EXIT_CONFIG = 3


def _cmd_quantile(args):
    cfg = load_config(args.config)
    grid = build_grid(cfg)
    dico = build_dictionary(cfg, grid)
    family = build_family(cfg)
    qsec = cfg.get("quantile", {})
    alpha = args.alpha if args.alpha is not None else float(qsec.get("alpha", 0.1))
    draws = args.draws if args.draws is not None else int(qsec.get("draws", 10000))
    seed = int(qsec.get("seed", 1))
    one_sided = bool(qsec.get("one_sided", False))
    table = simulate(dico, family, grid, draws, seed, one_sided=one_sided)
    if args.out:
        table.to_csv(args.out)
    q = quantile(table, alpha)
    se = quantile_se(table, alpha)
    print(f"q[{alpha:g}]={q:.6g} se={se:.3g}")
    return EXIT_OK


def _cmd_solve(args):
    cfg = load_config(args.config)
    grid = build_grid(cfg)
    dico = build_dictionary(cfg, grid)
    family = build_family(cfg)
    penalty = build_penalty(cfg)
    op = build_operator(cfg, grid, dico)
    scf = build_solver_config(cfg)
    sigma, _ = noise_level(cfg, grid)
    Y = signal_from_csv(args.data, grid)
    q, _ = harness._resolve_threshold(cfg, dico, family, grid)
    constraints = ConstraintSet.from_quantile(dico, family, sigma, q, Y)
    result = solve_smre(op, constraints, penalty, scf)
    signal_to_csv(result.estimate, args.out)
    if args.diagnostics:
        harness._write_csv(
            args.diagnostics,
            ["iter", "primal_res", "dual_res", "objective", "max_violation"],
            [
                [r["iter"], r["primal_res"], r["dual_res"], r["objective"], r["max_violation"]]
                for r in result.history
            ],
        )
    print(
        f"iterations={result.iterations} objective={result.objective:.6g} "
        f"feasible={result.feasible} converged={result.converged}"
    )
    return EXIT_OK if result.converged and result.feasible else EXIT_NONCONVERGED


def _cmd_schedule(args):
    cfg = load_config(args.config)
    sec = cfg.get("schedule", {})
    kind = args.kind or sec.get("kind", "orthonormal")
    kappa = float(sec.get("kappa", 1.0))
    k_min = int(sec.get("k_min", 1))
    k_max = int(sec.get("k_max", 10))
    sigmas = 2.0 ** -np.arange(k_min, k_max + 1, dtype=float)
    if kind == "orthonormal":
        count = int(sec.get("coeff_count", 65536))
        decay = float(sec.get("coeff_decay", 1.6))
        idx = np.arange(1, count + 1, dtype=float)
        source = SourceElement(coeffs=idx ** -decay)
        schedule = schedule_orthonormal(source, sigmas, kappa)
    elif kind == "dyadic":
        grid = build_grid(cfg)
        signal = harness.make_test_signal(
            cfg.get("experiment", {}).get("signal", "hoelder_beta"), grid
        )
        schedule = schedule_dyadic(signal, sigmas, kappa)
    else:
        raise ConfigError(f"unknown schedule kind {kind!r}")
    if args.out:
        schedule.to_csv(args.out)
    for r in schedule.rows:
        print(
            f"k={r.k} sigma={r.sigma:.6g} N={r.N} eta={r.eta:.6g} "
            f"alpha={r.alpha:.3g} zeta={r.zeta:.6g}"
        )
    print(f"alphas_summable={schedule.alphas_summable}")
    return EXIT_OK


def _cmd_demo(args):
    cfg = load_config(args.config)
    result = run_denoise_demo(cfg, out_dir=args.out_dir)
    best_pls = min(result.pls.items(), key=lambda kv: kv[1][2]) if result.pls else None
    print(f"q={result.q:.4g} smre_ks={result.smre_ks:.4g}")
    if best_pls:
        lam, (_, q_equiv, ks) = best_pls
        print(f"best_pls lambda={lam:g} q_equiv={q_equiv:.4g} ks={ks:.4g}")
    for path in result.files:
        print(f"wrote {path}")
    ok = result.smre.converged and result.smre.feasible
    return EXIT_OK if ok else EXIT_NONCONVERGED


def _cmd_coverage(args):
    cfg = load_config(args.config)
    report = run_coverage(cfg, replications=args.replications)
    if args.out:
        harness.write_coverage_csv(report, args.out)
    print(
        f"coverage={report.frequency:.4f} target>={1 - report.alpha - report.half_width:.4f} "
        f"({report.successes}/{report.replications}, q={report.q:.4g})"
    )
    return EXIT_OK


def _cmd_consistency(args):
    cfg = load_config(args.config)
    report = run_consistency(cfg)
    if args.out:
        harness.write_consistency_csv(report, args.out)
    for r in report.rows:
        print(
            f"k={r['k']} sigma={r['sigma']:.3g} N={r['N']} eta={r['eta']:.4g} "
            f"bregman={r['bregman_med']:.4g} img={r['img_med']:.4g}"
        )
    print(
        f"bregman_ratio_spread={report.bregman_ratio_spread:.3g} "
        f"img_ratio_spread={report.img_ratio_spread:.3g} "
        f"slope={report.loglog_slope:.3g}"
    )
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="smre", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quantile", help="simulate the statistic and report a quantile")
    q.add_argument("--config", required=True)
    q.add_argument("--alpha", type=float, default=None)
    q.add_argument("--draws", type=int, default=None)
    q.add_argument("--out", default=None, help="CSV of replicate draws")
    q.set_defaults(func=_cmd_quantile)

    s = sub.add_parser("solve", help="constrained solve on data from CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--data", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--diagnostics", default=None)
    s.set_defaults(func=_cmd_solve)

    sc = sub.add_parser("schedule", help="parameter-choice schedule")
    sc.add_argument("--kind", choices=["orthonormal", "dyadic"], default=None)
    sc.add_argument("--config", required=True)
    sc.add_argument("--out", default=None)
    sc.set_defaults(func=_cmd_schedule)

    d = sub.add_parser("demo", help="1-D denoising demo with qq-plot data")
    d.add_argument("--config", required=True)
    d.add_argument("--out-dir", default=None)
    d.set_defaults(func=_cmd_demo)

    c = sub.add_parser("coverage", help="coverage frequency over replications")
    c.add_argument("--config", required=True)
    c.add_argument("--replications", type=int, default=None)
    c.add_argument("--out", default=None)
    c.set_defaults(func=_cmd_coverage)

    t = sub.add_parser("consistency", help="rate sweep in the spectral setting")
    t.add_argument("--config", required=True)
    t.add_argument("--out", default=None)
    t.set_defaults(func=_cmd_consistency)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
