"""Command-line front end.

Subcommands: ``gen grid``/``gen er`` (write a model file), ``solve`` (run one
inference method, write a JSON result), ``select-fvs`` (print a pseudo
feedback set), ``diagnose`` (walk-summability report plus the removal curve),
and ``bench`` (error-vs-iteration CSV).

Exit codes: 0 on success; 2 when a solver ran but failed numerically
(non-convergence, message breakdown, indefinite system, non-PD model); 1 for
usage, file, and input errors.  Solver failures still write a machine
readable ``{"error": ...}`` object to the output file when one was given.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time

import numpy as np

from .analysis import dense_oracle, diagnose, spectral_radius_abs
from .bench import DEFAULT_METHODS, run_bench, records_to_csv
from .bp import BpOptions, lbp, tree_bp
from .errors import (
    FeedbackSystemError,
    FvsValidationError,
    GmrfError,
    LbpBreakdownError,
    ModelFormatError,
    ModelValueError,
    NotForestError,
    NotNormalizedError,
    NotPositiveDefiniteError,
)
from .fmp import approx_fmp, exact_fmp
from .generate import GenSpec, gen_er, gen_grid
from .graph import build_graph, greedy_fvs, select_pseudo_fvs
from .model import (
    denormalize_solution,
    extract_submodel,
    normalize,
    read_model,
    write_model,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SOLVER = 2

# errors in the inputs (exit 1) vs numerical failures of a solver (exit 2)
_INPUT_ERRORS = (
    ModelFormatError,
    ModelValueError,
    NotNormalizedError,
    NotForestError,
    FvsValidationError,
)
_SOLVER_ERRORS = (LbpBreakdownError, FeedbackSystemError, NotPositiveDefiniteError)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract here wants 1
    def error(self, message):
        raise _UsageError(message)


def _parse_rho_window(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise _UsageError(f"expected LO,HI for --target-rho, got {text!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise _UsageError(f"bad --target-rho value {text!r}") from None


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise _UsageError(f"bad {what} list {text!r}") from None


def _default_k(n: int) -> int:
    return max(1, math.ceil(math.log(n)))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gmrf-fmp", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a model file")
    gensub = gen.add_subparsers(dest="topology", required=True)
    grid = gensub.add_parser("grid", help="square nearest-neighbor grid")
    grid.add_argument("--size", type=int, required=True, help="side length")
    er = gensub.add_parser("er", help="sparse random graph, edge prob c/n")
    er.add_argument("--n", type=int, required=True, help="node count")
    er.add_argument("--c", type=float, required=True, help="mean-degree parameter")
    for g in (grid, er):
        g.add_argument("--seed", type=int, required=True)
        g.add_argument("--delta", type=float, default=0.1, help="PD shift above |lambda_min|")
        g.add_argument("--target-rho", type=str, default=None, metavar="LO,HI",
                       help="bisect delta until rho(R_bar) lands in (LO, HI)")
        g.add_argument("-o", "--output", required=True, help="model file to write")

    solve = sub.add_parser("solve", help="run one inference method")
    solve.add_argument("--method", required=True,
                       choices=["dense", "tree-bp", "lbp", "exact-fmp", "approx-fmp"])
    solve.add_argument("--k", type=int, default=None,
                       help="pseudo feedback set size for approx-fmp (default ceil(ln n))")
    solve.add_argument("--fvs", type=str, default=None, metavar="i,j,...",
                       help="explicit feedback set (exact-fmp and approx-fmp)")
    solve.add_argument("--max-iters", type=int, default=1000)
    solve.add_argument("--tol", type=float, default=1e-10)
    solve.add_argument("model", help="model file")
    solve.add_argument("-o", "--output", required=True, help="result JSON to write")

    sel = sub.add_parser("select-fvs", help="print a pseudo feedback set as JSON")
    sel.add_argument("--k", type=int, required=True)
    sel.add_argument("--worst", action="store_true", help="argmin selection (control)")
    sel.add_argument("model")

    diag = sub.add_parser("diagnose", help="walk-summability report and removal curve")
    diag.add_argument("--k", type=int, default=None, help="selection prefix length")
    diag.add_argument("model")

    bench = sub.add_parser("bench", help="error-vs-iteration traces to CSV")
    bench.add_argument("--sizes", type=str, required=True, metavar="10,20,40")
    bench.add_argument("--seeds", type=int, required=True)
    bench.add_argument("--budget", type=int, default=100)
    bench.add_argument("--methods", type=str, default=",".join(DEFAULT_METHODS))
    bench.add_argument("--delta", type=float, default=0.1)
    bench.add_argument("--target-rho", type=str, default=None, metavar="LO,HI")
    bench.add_argument("--tol", type=float, default=1e-10)
    bench.add_argument("--max-size", type=int, default=70)
    bench.add_argument("-o", "--output", required=True, help="CSV file to write")

    return p


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")


def _error_payload(exc: Exception) -> dict:
    return {"error": {"type": type(exc).__name__, "message": str(exc)}}


def _cmd_gen(args) -> int:
    if args.topology == "grid":
        spec = GenSpec(topology="grid", size=args.size, seed=args.seed,
                       delta=args.delta,
                       target_rho=_parse_rho_window(args.target_rho) if args.target_rho else None)
        model = gen_grid(spec)
    else:
        spec = GenSpec(topology="er", size=args.n, c=args.c, seed=args.seed,
                       delta=args.delta,
                       target_rho=_parse_rho_window(args.target_rho) if args.target_rho else None)
        model = gen_er(spec)
    write_model(model, args.output)
    return EXIT_OK


def _cmd_solve(args) -> int:
    model = read_model(args.model)
    nm, scaling = normalize(model)
    options = BpOptions(max_iterations=args.max_iters, tolerance=args.tol)
    start = time.perf_counter()

    def finish(payload: dict, code: int) -> int:
        payload["method"] = args.method
        payload["model"] = args.model
        payload["wall_time_s"] = time.perf_counter() - start
        _write_json(args.output, payload)
        return code

    try:
        if args.method == "dense":
            sol = dense_oracle(nm, cov_limit=0)
            means, variances = denormalize_solution(scaling, sol.means, sol.variances)
            return finish(
                {"converged": True, "means": means.tolist(), "variances": variances.tolist()},
                EXIT_OK,
            )

        if args.method in ("tree-bp", "lbp"):
            runner = tree_bp if args.method == "tree-bp" else lbp
            if args.method == "tree-bp":
                res = runner(nm, [nm.h])
            else:
                res = runner(nm, [nm.h], options)
            rows = []
            for row in res.means:
                m, _ = denormalize_solution(scaling, row, np.zeros(nm.n))
                rows.append(m.tolist())
            _, variances = denormalize_solution(scaling, np.zeros(nm.n), res.variances)
            payload = {
                "converged": res.converged,
                "iterations": res.iterations,
                "means": rows,
                "variances": variances.tolist(),
                "residuals": list(res.residual_history),
            }
            return finish(payload, EXIT_OK if res.converged else EXIT_SOLVER)

        # feedback methods
        if args.fvs is not None:
            fvs = _parse_int_list(args.fvs, "--fvs")
        elif args.method == "exact-fmp":
            fvs = list(greedy_fvs(build_graph(nm)).nodes)
        else:
            k = args.k if args.k is not None else _default_k(nm.n)
            fvs = list(select_pseudo_fvs(nm, k).nodes)

        if args.method == "exact-fmp":
            res = exact_fmp(nm, fvs)
        else:
            res = approx_fmp(nm, fvs, options)
        if res.diagnostic is not None:
            return finish(_error_payload(GmrfError(res.diagnostic)), EXIT_SOLVER)
        means, variances = denormalize_solution(scaling, res.means, res.variances)
        s_f = scaling[list(res.feedback_set)]
        cov = res.feedback_cov * np.outer(s_f, s_f)
        payload = {
            "feedback_set": list(res.feedback_set),
            "k": len(res.feedback_set),
            "converged": res.converged,
            "means": means.tolist(),
            "variances": variances.tolist(),
            "feedback_cov": cov.tolist(),
            "iterations": {"round1": res.round1_iterations, "round2": res.round2_iterations},
        }
        return finish(payload, EXIT_OK if res.converged else EXIT_SOLVER)
    except _SOLVER_ERRORS as exc:
        return finish(_error_payload(exc), EXIT_SOLVER)


def _cmd_select_fvs(args) -> int:
    model = read_model(args.model)
    nm, _ = normalize(model)
    result = select_pseudo_fvs(nm, args.k, worst=args.worst)
    print(json.dumps(result.to_json_dict(), indent=2))
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    model = read_model(args.model)
    nm, _ = normalize(model)
    k = args.k if args.k is not None else _default_k(nm.n)
    selection = select_pseudo_fvs(nm, k)
    reports = []
    prev_rho = None
    for t in range(len(selection.nodes) + 1):
        prefix = list(selection.nodes[:t])
        if t == 0:
            report = diagnose(nm)
        else:
            sub = extract_submodel(nm, prefix).j_sub
            if sub is None:
                break
            report = diagnose(sub)
        entry = {"removed": prefix}
        entry.update(report.to_json_dict())
        reports.append(entry)
        if prev_rho is not None and report.rho_bar > prev_rho + 1e-7:
            print(
                f"warning: rho increased after removing {prefix[-1]} "
                f"({prev_rho:.9g} -> {report.rho_bar:.9g})",
                file=sys.stderr,
            )
        prev_rho = report.rho_bar
    payload = {
        "model": args.model,
        "k": k,
        "selection": selection.to_json_dict(),
        "reports": reports,
    }
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def _cmd_bench(args) -> int:
    sizes = _parse_int_list(args.sizes, "--sizes")
    if not sizes:
        raise _UsageError("--sizes must name at least one grid size")
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    records = run_bench(
        sizes,
        args.seeds,
        methods=methods,
        budget=args.budget,
        delta=args.delta,
        target_rho=_parse_rho_window(args.target_rho) if args.target_rho else None,
        tol=args.tol,
        max_size=args.max_size,
    )
    with open(args.output, "w", encoding="utf-8") as f:
        f.write(records_to_csv(records))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "gen":
            return _cmd_gen(args)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "select-fvs":
            return _cmd_select_fvs(args)
        if args.command == "diagnose":
            return _cmd_diagnose(args)
        if args.command == "bench":
            return _cmd_bench(args)
        raise _UsageError(f"unknown command {args.command!r}")
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _SOLVER_ERRORS as exc:
        # solver failures outside solve's own handler (e.g. bench internals)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except GmrfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
