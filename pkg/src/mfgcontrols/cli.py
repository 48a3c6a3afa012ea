"""Batch front-end: classify, solve, verify, diagnose, probe-uniqueness.

Exit codes: 0 success, 1 input error, 2 hypothesis violation,
3 non-convergence, 4 verification verdict false.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from .config import load_spec, parse_config
from .diagnostics import diagnose
from .errors import CFLViolation, ConfigParse, HypothesisViolation, MFGError, MissingArtifact
from .model import check_assumptions, classify_exponents
from .picard import PicardOptions, picard_iterate
from .varsolve import ConvergenceLog, SolverOptions, solve_primal_dual
from .verify import uniqueness_probe, weak_solution_report
from . import io as sio

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_HYPOTHESIS = 2
EXIT_NONCONVERGED = 3
EXIT_VERDICT_FALSE = 4


def cmd_classify(args) -> int:
    spec = load_spec(args.config)
    report = check_assumptions(spec)
    if not report.passed:
        name, detail = report.failures[0]
        print(json.dumps({"hypotheses": report.to_dict()}, indent=2))
        print(f"{name} violated" + (f": {detail}" if detail else ""), file=sys.stderr)
        return EXIT_HYPOTHESIS
    info = classify_exponents(spec)
    print(json.dumps(info.to_dict(), indent=2))
    return EXIT_OK


def _config_echo(path: str) -> dict:
    return parse_config(path)


def cmd_solve(args) -> int:
    spec = load_spec(args.config)
    report = check_assumptions(spec)
    if not report.passed:
        name, detail = report.failures[0]
        print(f"{name} violated" + (f": {detail}" if detail else ""), file=sys.stderr)
        return EXIT_HYPOTHESIS
    case = classify_exponents(spec)
    np.random.seed(args.seed)

    t0 = time.time()
    if args.method == "pd":
        opts = SolverOptions(max_iter=args.max_iter, tol_gap=args.tol)
        sol, log = solve_primal_dual(spec, opts)
        converged = log.converged
        iterations = log.iterations
        options_echo = {"max_iter": args.max_iter, "tol_gap": args.tol,
                        "operator_norm": log.operator_norm}
    else:
        opts = PicardOptions(damping=args.damping, max_outer=args.max_iter,
                             tol_fixed_point=args.tol)
        result = picard_iterate(spec, opts)
        sol = result.solution
        # same log layout as the saddle-point run; only the fixed-point
        # residual column is meaningful for this method
        log = ConvergenceLog()
        for i, res in enumerate(result.residuals, start=1):
            log.append(i, np.nan, np.nan, np.nan, res, np.nan)
        converged = result.converged
        iterations = result.iterations
        options_echo = {"damping": args.damping, "max_outer": args.max_iter,
                        "tol_fixed_point": args.tol}
    wall = time.time() - t0

    rep, verdict = weak_solution_report(sol, spec, tol=max(args.tol, 1e-10))
    manifest = {
        "config": _config_echo(args.config),
        "case_info": case.to_dict(),
        "solver": args.method,
        "options": options_echo,
        "seed": args.seed,
        "iterations": iterations,
        "converged": converged,
        "wall_time_s": wall,
        "residual_report": rep.to_dict(),
        "verdict": verdict,
        "tool_version": __version__,
    }
    sio.write_solution(args.out, sol, log=log, manifest=manifest)
    print(json.dumps({"converged": converged, "iterations": iterations,
                      "duality_gap": rep.duality_gap, "out": args.out}, indent=2))
    return EXIT_OK if converged else EXIT_NONCONVERGED


def _grid_and_spec_from_manifest(sol_dir: str):
    manifest = sio.read_manifest(sol_dir)
    from .config import build_spec

    spec = build_spec(manifest["config"], base_dir=sol_dir)
    return manifest, spec


def cmd_verify(args) -> int:
    manifest, spec = _grid_and_spec_from_manifest(args.solution)
    sol = sio.read_solution(args.solution, spec.grid)
    rep, verdict = weak_solution_report(sol, spec, tol=args.tol)
    print(json.dumps(rep.to_dict(), indent=2))
    return EXIT_OK if verdict else EXIT_VERDICT_FALSE


def cmd_diagnose(args) -> int:
    manifest, spec = _grid_and_spec_from_manifest(args.solution)
    sol = sio.read_solution(args.solution, spec.grid)
    shifts = [float(tok) for tok in args.shifts.split(",") if tok.strip()]
    if np.any(spec.A != 0.0):
        print("time diagnostics require zero diffusion (A = 0)", file=sys.stderr)
        return EXIT_INPUT
    deltas = [k * spec.grid.hx for k in (1, 2, 4)]
    rec = diagnose(sol, spec, eps_list=shifts, delta_list=deltas)
    with open(f"{args.solution}/regularity.json", "w") as fh:
        json.dump(rec.to_dict(), fh, indent=2)
    with open(f"{args.solution}/diagnostics.csv", "w") as fh:
        fh.write("kind,shift,sum\n")
        for eps, val in rec.time_shift_sums.items():
            fh.write(f"time,{eps:.17g},{val:.17g}\n")
        for delta, val in rec.space_shift_sums.items():
            fh.write(f"space,{delta:.17g},{val:.17g}\n")
    print(json.dumps(rec.to_dict(), indent=2))
    return EXIT_OK


def cmd_probe(args) -> int:
    spec = load_spec(args.config)
    report = check_assumptions(spec)
    if not report.passed:
        name, detail = report.failures[0]
        print(f"{name} violated" + (f": {detail}" if detail else ""), file=sys.stderr)
        return EXIT_HYPOTHESIS
    opts = SolverOptions(max_iter=args.max_iter, tol_gap=args.tol)
    probe = uniqueness_probe(spec, opts, n_inits=args.n_inits, seed=args.seed)
    print(json.dumps({"m_distance": probe.m_distance, "P_distance": probe.P_distance,
                      "u_distance_on_support": probe.u_distance_on_support,
                      "gaps": probe.gaps}, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mfgc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="derived exponents and admissibility cell")
    p.add_argument("config")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("solve", help="solve an instance and write artifacts")
    p.add_argument("config")
    p.add_argument("--method", choices=("pd", "picard"), default="pd")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=20000, dest="max_iter")
    p.add_argument("--damping", type=float, default=0.05)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="residual report and verdict for a solution directory")
    p.add_argument("--solution", required=True)
    p.add_argument("--tol", type=float, default=1e-3)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("diagnose", help="regularity record and shift-sum table")
    p.add_argument("--solution", required=True)
    p.add_argument("--shifts", default="0.02,0.04,0.08")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("probe-uniqueness", help="distances across random solver restarts")
    p.add_argument("config")
    p.add_argument("--n-inits", type=int, default=3, dest="n_inits")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=20000, dest="max_iter")
    p.set_defaults(func=cmd_probe)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigParse as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except MissingArtifact as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except HypothesisViolation as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_HYPOTHESIS
    except CFLViolation as exc:
        print(f"non-convergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except MFGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
