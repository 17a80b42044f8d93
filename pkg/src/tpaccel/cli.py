"""``bench`` command-line driver.

Exit codes: 0 success (diverged solves are results, not failures),
2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .core import SolveConfig
from .harness import UsageError, default_methods, parse_methods, run_benchmark
from .problems import PROBLEMS

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bench",
        description="Run fixed-point solvers on a benchmark problem and write "
                    "summary and residual-trace CSV files.",
    )
    p.add_argument("--problem", required=True, choices=sorted(PROBLEMS))
    p.add_argument("--methods", default=None,
                   help="comma-separated list, e.g. tpa,picard,relaxed:omega=1.8,anderson:m=2 "
                        "(default: the full grid for the problem)")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--theta", type=float, default=1e-9)
    p.add_argument("--max-evals", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeat", type=int, default=1,
                   help="rerun randomised problems over seeds N..N+R-1")
    p.add_argument("--out", default="bench-out", help="output directory")
    p.add_argument("--summary-only", action="store_true", help="skip traces.csv")
    p.add_argument("--json", action="store_true", help="also write summary.json")
    p.add_argument("-q", "--quiet", action="store_true", help="do not print the summary table")
    return p


def _print_table(cells, stream):
    header = f"{'method':<22} {'seed':>5} {'n_evals':>9} {'residual':>11} {'error':>11}  converged"
    print(header, file=stream)
    print("-" * len(header), file=stream)
    for c in cells:
        r = c.report
        err = "" if r.final_error_inf is None else f"{r.final_error_inf:.3e}"
        seed = "" if c.problem.seed is None else c.problem.seed
        print(f"{c.method.label:<22} {seed:>5} {r.total_evals:>9} "
              f"{r.final_residual_inf:>11.3e} {err:>11}  {str(r.converged).lower()}", file=stream)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        methods = parse_methods(args.methods) if args.methods else default_methods(args.problem)
        protocol = SolveConfig(tol=args.tol, max_evals=args.max_evals, theta=args.theta)
    except ValueError as exc:
        print(f"bench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        cells = run_benchmark(args.problem, methods, protocol, args.seed, args.out,
                              repeat=args.repeat, traces=not args.summary_only,
                              json_summary=args.json)
    except UsageError as exc:
        print(f"bench: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"bench: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO

    if not args.quiet:
        _print_table(cells, sys.stdout)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
