"""Command-line harness.

Subcommands: ``random`` (instance generation), ``solve`` (one solver, one
trace), ``compare`` (solver race against a line-search reference value),
``bench-dim`` (iterations-to-accuracy against dimension), and ``gradcheck``
(finite-difference audit of the analytic gradients).

Exit codes: 0 success, 2 usage error, 3 input-validation error, 4 numerical
or solver error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import statistics
import sys

from . import objectives, solvers, states, verification
from .errors import (
    BoundaryError,
    DomainError,
    InvariantViolation,
    NumericalError,
    ParameterError,
    ParseError,
    ShapeError,
)
from .linalg import trace_inner
from .solvers import ArmijoParams, PolyakParams, SolveTrace
from .states import BipartiteState, CQEnsemble, DensityMatrix, maximally_mixed

QUANTITIES = ("petz-augustin", "sandwiched-augustin", "conditional-entropy", "sandwiched-renyi-info")
ENSEMBLE_QUANTITIES = ("petz-augustin", "sandwiched-augustin")
BIPARTITE_QUANTITIES = ("conditional-entropy", "sandwiched-renyi-info")
SOLVERS = ("polyak", "armijo", "fixed-point")

# Default per-quantity Polyak parameters, keyed by (quantity, alpha).
POLYAK_DEFAULTS = {
    ("petz-augustin", 0.5): {"delta1": 2.5, "delta": 1e-5, "gamma": 1.25, "beta": 0.75},
    ("petz-augustin", 2.0): {"delta1": 1.0, "delta": 1e-5, "gamma": 1.25, "beta": 0.75},
    ("sandwiched-augustin", 0.5): {"delta1": 5.0, "delta": 1e-5, "gamma": 1.3, "beta": 0.7},
    ("sandwiched-augustin", 10.0): {"delta1": 1.0, "delta": 1e-5, "gamma": 1.3, "beta": 0.7},
    ("conditional-entropy", 10.0): {"delta1": 1.0, "delta": 1e-5, "gamma": 1.3, "beta": 0.7},
    ("sandwiched-renyi-info", 10.0): {"delta1": 1.0, "delta": 1e-5, "gamma": 1.3, "beta": 0.7},
}
# Per-quantity fallback when alpha has no published row.
POLYAK_FAMILY_FALLBACK = {
    "petz-augustin": {"delta1": 2.5, "delta": 1e-5, "gamma": 1.25, "beta": 0.75},
    "sandwiched-augustin": {"delta1": 1.0, "delta": 1e-5, "gamma": 1.3, "beta": 0.7},
    "conditional-entropy": {"delta1": 1.0, "delta": 1e-5, "gamma": 1.3, "beta": 0.7},
    "sandwiched-renyi-info": {"delta1": 1.0, "delta": 1e-5, "gamma": 1.3, "beta": 0.7},
}

# Default per-quantity Armijo parameters; same key scheme.
ARMIJO_DEFAULTS = {
    ("petz-augustin", 0.5): {"alpha_bar": 10.0, "r": 0.5, "tau": 0.5},
    ("petz-augustin", 2.0): {"alpha_bar": 8.0, "r": 0.7, "tau": 0.7},
    ("sandwiched-augustin", 0.5): {"alpha_bar": 7.0, "r": 0.6, "tau": 0.6},
    ("sandwiched-augustin", 10.0): {"alpha_bar": 4.0, "r": 0.7, "tau": 0.7},
}
ARMIJO_FAMILY_FALLBACK = {
    "conditional-entropy": {"alpha_bar": 8.0, "r": 0.6, "tau": 0.6},
    "sandwiched-renyi-info": {"alpha_bar": 8.0, "r": 0.6, "tau": 0.6},
}
ARMIJO_LAST_RESORT = {"alpha_bar": 10.0, "r": 0.5, "tau": 0.5}

# Dimension-benchmark Polyak parameters (fixed across alpha).
BENCH_POLYAK_DEFAULTS = {
    "petz-augustin": {"delta1": 4.0, "delta": 1e-5, "gamma": 1.25, "beta": 0.75},
    "sandwiched-augustin": {"delta1": 5.0, "delta": 1e-5, "gamma": 1.1, "beta": 0.9},
    "conditional-entropy": {"delta1": 1.0, "delta": 1e-5, "gamma": 1.1, "beta": 0.9},
    "sandwiched-renyi-info": {"delta1": 1.0, "delta": 1e-5, "gamma": 1.1, "beta": 0.9},
}

GRADCHECK_ALPHAS = {
    "petz-augustin": (0.5, 2.0),
    "sandwiched-augustin": (0.5, 2.0, 10.0),
    "conditional-entropy": (0.5, 2.0, 10.0),
    "sandwiched-renyi-info": (0.5, 2.0, 10.0),
}

CORRUPT_GRAD_ENV = "RENYIOPT_CORRUPT_GRAD"


class UsageError(Exception):
    """Semantic misuse of flags, reported at the usage-error exit code."""


def polyak_defaults(quantity: str, alpha: float) -> dict:
    table = POLYAK_DEFAULTS.get((quantity, float(alpha)))
    if table is None:
        table = POLYAK_FAMILY_FALLBACK[quantity]
    return dict(table)


def armijo_defaults(quantity: str, alpha: float) -> dict:
    table = ARMIJO_DEFAULTS.get((quantity, float(alpha)))
    if table is None:
        table = ARMIJO_FAMILY_FALLBACK.get(quantity)
    if table is None:
        table = ARMIJO_LAST_RESORT
    return dict(table)


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _nonneg_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {value}")
    return value


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0.0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a positive finite number, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="renyiopt",
        description="Minimize quantum Renyi divergences over density matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_random = sub.add_parser("random", help="generate a random instance file")
    p_random.add_argument("--kind", choices=("density", "cq", "bipartite"), required=True)
    p_random.add_argument("--d", type=_positive_int, default=8, help="state dimension (density, cq)")
    p_random.add_argument("--nx", type=_positive_int, default=16, help="ensemble size (cq)")
    p_random.add_argument("--da", type=_positive_int, default=2, help="first factor dimension (bipartite)")
    p_random.add_argument("--db", type=_positive_int, default=8, help="second factor dimension (bipartite)")
    p_random.add_argument("--seed", type=_nonneg_int, default=0)
    p_random.add_argument("--out", required=True, help="output instance path")

    def add_solver_flags(p, with_solver=True):
        p.add_argument("--quantity", choices=QUANTITIES, required=True)
        p.add_argument("--alpha", type=_positive_float, required=True)
        if with_solver:
            p.add_argument("--solver", choices=SOLVERS, default="polyak")
        p.add_argument("--input", required=True, help="instance file path")
        p.add_argument("--max-iters", type=_positive_int, default=500)
        p.add_argument("--delta1", type=_positive_float, default=None)
        p.add_argument("--delta", type=_positive_float, default=None)
        p.add_argument("--gamma", type=_positive_float, default=None)
        p.add_argument("--beta", type=_positive_float, default=None)
        p.add_argument("--c", type=_positive_float, default=None)
        p.add_argument("--alpha-bar", type=_positive_float, default=None)
        p.add_argument("--r", type=_positive_float, default=None)
        p.add_argument("--tau", type=_positive_float, default=None)
        p.add_argument("--max-backtracks", type=_positive_int, default=None)

    p_solve = sub.add_parser("solve", help="run one solver and write its trace")
    add_solver_flags(p_solve)
    p_solve.add_argument("--out", required=True, help="trace output path")
    p_solve.add_argument("--trace-format", choices=("csv", "structured"), default="csv")

    p_compare = sub.add_parser("compare", help="race solvers against a line-search reference")
    add_solver_flags(p_compare, with_solver=False)
    p_compare.add_argument("--solvers", nargs="+", choices=SOLVERS, default=None,
                           help="solvers to race (default: every compatible one)")
    p_compare.add_argument("--ref-iters", type=_positive_int, default=100,
                           help="line-search iterations defining the reference value")
    p_compare.add_argument("--out-dir", required=True, help="directory for trace and gap files")
    p_compare.add_argument("--trace-format", choices=("csv", "structured"), default="csv")

    p_bench = sub.add_parser("bench-dim", help="iterations-to-accuracy against dimension")
    p_bench.add_argument("--quantity", choices=QUANTITIES, required=True)
    p_bench.add_argument("--alpha", type=_positive_float, required=True)
    p_bench.add_argument("--dims", nargs="+", type=_positive_int, default=[4, 8, 16])
    p_bench.add_argument("--seeds", type=_positive_int, default=3, help="number of seeds per dimension")
    p_bench.add_argument("--accuracy", type=_positive_float, default=1e-5)
    p_bench.add_argument("--nx", type=_positive_int, default=10, help="ensemble size (cq quantities)")
    p_bench.add_argument("--da", type=_positive_int, default=10, help="first factor dimension (bipartite quantities)")
    p_bench.add_argument("--max-iters", type=_positive_int, default=1000)
    p_bench.add_argument("--ref-iters", type=_positive_int, default=1000,
                         help="line-search iterations defining the reference optimum")
    p_bench.add_argument("--out", required=True, help="table output path")

    p_grad = sub.add_parser("gradcheck", help="finite-difference audit of analytic gradients")
    p_grad.add_argument("--quantity", choices=QUANTITIES + ("all",), default="all")
    p_grad.add_argument("--alpha", type=_positive_float, default=None,
                        help="single order to test (default: a per-quantity set)")
    p_grad.add_argument("--dims", nargs="+", type=_positive_int, default=[2, 4])
    p_grad.add_argument("--seeds", type=_positive_int, default=2, help="number of seeds per case")
    p_grad.add_argument("--nx", type=_positive_int, default=4, help="ensemble size (cq quantities)")
    p_grad.add_argument("--da", type=_positive_int, default=2, help="first factor dimension (bipartite quantities)")
    p_grad.add_argument("--epsilon", type=_positive_float, default=1e-5)
    p_grad.add_argument("--tolerance", type=_positive_float, default=1e-4)

    return parser


# ---------------------------------------------------------------------------
# Shared plumbing


def _load_instance(path: str, quantity: str):
    """Load an instance file and check its kind matches the quantity."""
    try:
        value = states.load(path)
    except FileNotFoundError:
        raise ParseError(f"input file not found: {path}") from None
    if quantity in ENSEMBLE_QUANTITIES:
        if not isinstance(value, CQEnsemble):
            raise ParseError(f"{path}: {quantity} needs a cq-ensemble instance, got {type(value).__name__}")
    else:
        if not isinstance(value, BipartiteState):
            raise ParseError(f"{path}: {quantity} needs a bipartite instance, got {type(value).__name__}")
    return value


def build_objective(quantity: str, instance, alpha: float) -> objectives.Objective:
    if quantity == "petz-augustin":
        return objectives.make_petz_augustin(instance, alpha)
    if quantity == "sandwiched-augustin":
        return objectives.make_sandwiched_augustin(instance, alpha)
    if quantity == "conditional-entropy":
        return objectives.make_conditional_entropy(instance, alpha)
    return objectives.make_sandwiched_renyi_info(instance, alpha)


def _check_run_config(quantity: str, solver: str, alpha: float) -> None:
    if solver == "fixed-point" and quantity not in ENSEMBLE_QUANTITIES:
        raise UsageError(f"the fixed-point solver supports {ENSEMBLE_QUANTITIES}, not {quantity}")
    family = objectives.PETZ_FAMILY if quantity == "petz-augustin" else objectives.SANDWICHED_FAMILY
    try:
        objectives.validate_alpha(alpha, family)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None


def _run_solver(objective, solver: str, args, quantity: str, alpha: float,
                max_iters: int) -> SolveTrace:
    start = maximally_mixed(objective.dim)
    if solver == "polyak":
        table = polyak_defaults(quantity, alpha)
        params = PolyakParams(
            delta1=args.delta1 if args.delta1 is not None else table["delta1"],
            delta=args.delta if args.delta is not None else table["delta"],
            gamma=args.gamma if args.gamma is not None else table["gamma"],
            beta=args.beta if args.beta is not None else table["beta"],
            c=args.c if args.c is not None else 1.0,
            max_iters=max_iters,
        )
        return solvers.solve_polyak(objective, start, params)
    if solver == "armijo":
        table = armijo_defaults(quantity, alpha)
        params = ArmijoParams(
            alpha_bar=args.alpha_bar if args.alpha_bar is not None else table["alpha_bar"],
            r=args.r if args.r is not None else table["r"],
            tau=args.tau if args.tau is not None else table["tau"],
            max_iters=max_iters,
            max_backtracks=args.max_backtracks if args.max_backtracks is not None else 60,
        )
        return solvers.solve_armijo(objective, start, params)
    return solvers.solve_fixed_point(objective, start, max_iters=max_iters)


def _write_trace(path: str, trace: SolveTrace, fmt: str) -> None:
    if fmt == "csv":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(trace.to_csv())
    else:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(trace.to_document(), fh, indent=1)
            fh.write("\n")


def _total_elapsed_ms(trace: SolveTrace) -> float:
    # Records carry cumulative time since the solve started.
    return trace.records[-1].elapsed_ms


def _summarize(trace: SolveTrace, quantity: str, out) -> None:
    print(f"best value: {trace.best_value!r}", file=out)
    print(f"iterations: {trace.records[-1].iteration}", file=out)
    print(f"elapsed ms: {_total_elapsed_ms(trace):.3f}", file=out)
    if quantity == "conditional-entropy":
        # The entropy is the negated minimum of the divergence objective.
        print(f"conditional entropy: {-trace.best_value!r}", file=out)
    if trace.stationary:
        print("stopped at a stationary point", file=out)


# ---------------------------------------------------------------------------
# Subcommands


def cmd_random(args, out) -> int:
    if args.kind == "density":
        value = states.random_density(args.d, args.seed)
        label = f"density d={args.d}"
    elif args.kind == "cq":
        value = states.random_cq_ensemble(args.nx, args.d, args.seed)
        label = f"cq-ensemble nx={args.nx} d={args.d}"
    else:
        value = states.random_bipartite(args.da, args.db, args.seed)
        label = f"bipartite da={args.da} db={args.db}"
    states.save(args.out, value)
    print(f"wrote {label} seed={args.seed} to {args.out}", file=out)
    return 0


def cmd_solve(args, out) -> int:
    _check_run_config(args.quantity, args.solver, args.alpha)
    instance = _load_instance(args.input, args.quantity)
    objective = build_objective(args.quantity, instance, args.alpha)
    trace = _run_solver(objective, args.solver, args, args.quantity, args.alpha, args.max_iters)
    _write_trace(args.out, trace, args.trace_format)
    _summarize(trace, args.quantity, out)
    if trace.non_convergence:
        print("solver error: the fixed-point iteration diverged", file=sys.stderr)
        return 4
    if trace.stalled:
        print("solver error: line search stalled (backtracking budget exhausted)", file=sys.stderr)
        return 4
    return 0


def _gap_csv(traces: dict[str, SolveTrace], f_ref: float) -> str:
    names = list(traces)
    lines = ["iter," + ",".join(names)]
    length = max(len(t.records) for t in traces.values())
    for i in range(length):
        row = []
        iteration = None
        for name in names:
            records = traces[name].records
            if i < len(records):
                iteration = records[i].iteration if iteration is None else iteration
                row.append(repr(records[i].f - f_ref))
            else:
                row.append("")
        lines.append(f"{iteration},{','.join(row)}")
    return "\n".join(lines) + "\n"


def cmd_compare(args, out) -> int:
    solver_list = args.solvers
    if solver_list is None:
        solver_list = ["polyak", "armijo"]
        if args.quantity in ENSEMBLE_QUANTITIES:
            solver_list.append("fixed-point")
    for solver in solver_list:
        _check_run_config(args.quantity, solver, args.alpha)
    instance = _load_instance(args.input, args.quantity)
    objective = build_objective(args.quantity, instance, args.alpha)
    os.makedirs(args.out_dir, exist_ok=True)

    table = armijo_defaults(args.quantity, args.alpha)
    ref_params = ArmijoParams(table["alpha_bar"], table["r"], table["tau"],
                              max_iters=args.ref_iters, max_backtracks=60)
    ref_trace = solvers.solve_armijo(objective, maximally_mixed(objective.dim), ref_params)
    f_ref = ref_trace.best_value
    print(f"reference value (armijo, {args.ref_iters} iterations): {f_ref!r}", file=out)

    ext = "csv" if args.trace_format == "csv" else "json"
    traces: dict[str, SolveTrace] = {}
    for solver in solver_list:
        trace = _run_solver(objective, solver, args, args.quantity, args.alpha, args.max_iters)
        traces[solver] = trace
        _write_trace(os.path.join(args.out_dir, f"{solver}.{ext}"), trace, args.trace_format)
        flags = []
        if trace.non_convergence:
            flags.append("non-convergent")
        if trace.stalled:
            flags.append("stalled")
        suffix = f" [{', '.join(flags)}]" if flags else ""
        print(f"{solver} best: {trace.best_value!r} (gap {trace.best_value - f_ref!r}){suffix}", file=out)

    gaps_path = os.path.join(args.out_dir, "gaps.csv")
    with open(gaps_path, "w", encoding="utf-8") as fh:
        fh.write(_gap_csv(traces, f_ref))
    print(f"wrote gap table to {gaps_path}", file=out)
    return 0


def _bench_instance(quantity: str, dim: int, seed: int, nx: int, da: int):
    if quantity in ENSEMBLE_QUANTITIES:
        return states.random_cq_ensemble(nx, dim, seed)
    return states.random_bipartite(da, dim, seed)


def _first_hit(trace: SolveTrace, f_star: float, accuracy: float):
    """Iteration index and elapsed ms when f first dips below f_star + accuracy."""
    for record in trace.records:
        if record.f - f_star < accuracy:
            return record.iteration, record.elapsed_ms
    return None, None


def cmd_bench_dim(args, out) -> int:
    _check_run_config(args.quantity, "polyak", args.alpha)
    table = BENCH_POLYAK_DEFAULTS[args.quantity]
    armijo_table = armijo_defaults(args.quantity, args.alpha)
    rows = []
    for dim in sorted(set(args.dims)):
        iters_hits = []
        elapsed_hits = []
        for seed in range(args.seeds):
            instance = _bench_instance(args.quantity, dim, seed, args.nx, args.da)
            objective = build_objective(args.quantity, instance, args.alpha)
            start = maximally_mixed(objective.dim)
            ref_params = ArmijoParams(armijo_table["alpha_bar"], armijo_table["r"], armijo_table["tau"],
                                      max_iters=args.ref_iters, max_backtracks=60)
            f_star = solvers.solve_armijo(objective, start, ref_params).best_value
            params = PolyakParams(table["delta1"], table["delta"], table["gamma"], table["beta"],
                                  c=1.0, max_iters=args.max_iters)
            trace = solvers.solve_polyak(objective, start, params)
            f_star = min(f_star, trace.best_value)
            hit_iter, hit_elapsed = _first_hit(trace, f_star, args.accuracy)
            iters_hits.append(math.inf if hit_iter is None else hit_iter)
            elapsed_hits.append(math.inf if hit_elapsed is None else hit_elapsed)
        rows.append((dim, statistics.median(iters_hits), statistics.median(elapsed_hits)))

    lines = ["dim,median_iters,median_elapsed_ms"]
    for dim, med_iters, med_elapsed in rows:
        iters_text = repr(med_iters) if math.isfinite(med_iters) else "unreached"
        elapsed_text = f"{med_elapsed:.3f}" if math.isfinite(med_elapsed) else "unreached"
        lines.append(f"{dim},{iters_text},{elapsed_text}")
        print(f"dim {dim}: median iterations {iters_text}, median elapsed ms {elapsed_text}", file=out)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return 0


def _gradcheck_cases(args):
    quantities = QUANTITIES if args.quantity == "all" else (args.quantity,)
    for quantity in quantities:
        alphas = (args.alpha,) if args.alpha is not None else GRADCHECK_ALPHAS[quantity]
        for alpha in alphas:
            family = objectives.PETZ_FAMILY if quantity == "petz-augustin" else objectives.SANDWICHED_FAMILY
            objectives.validate_alpha(alpha, family)
            for dim in args.dims:
                for seed in range(args.seeds):
                    yield quantity, alpha, dim, seed


def cmd_gradcheck(args, out) -> int:
    corrupt = bool(os.environ.get(CORRUPT_GRAD_ENV))
    worst = 0.0
    failures = 0
    for quantity, alpha, dim, seed in _gradcheck_cases(args):
        if quantity in ENSEMBLE_QUANTITIES:
            instance = states.random_cq_ensemble(args.nx, dim, seed)
        else:
            instance = states.random_bipartite(args.da, dim, seed)
        objective = build_objective(quantity, instance, alpha)
        sigma = states.random_density(objective.dim, seed + 1)
        direction = verification.random_traceless_direction(objective.dim, seed + 2)
        fd = verification.finite_diff_directional(objective, sigma, direction, eps=args.epsilon)
        _, grad = objective.value_and_grad(sigma)
        analytic = trace_inner(grad, direction)
        if corrupt:
            # Negative-control hook: misreport the analytic value on purpose.
            analytic += 0.1 * max(1.0, abs(analytic))
        rel = abs(fd - analytic) / max(1.0, abs(analytic))
        worst = max(worst, rel)
        status = "ok" if rel <= args.tolerance else "FAIL"
        if status == "FAIL":
            failures += 1
        print(f"{quantity} alpha={alpha:g} d={dim} seed={seed}: rel err {rel:.3e} {status}", file=out)
    if failures:
        print(f"gradcheck: FAIL ({failures} case(s) above {args.tolerance:g}, max rel err {worst:.3e})", file=out)
        return 4
    print(f"gradcheck: PASS (max rel err {worst:.3e})", file=out)
    return 0


# ---------------------------------------------------------------------------
# Entry point


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    handlers = {
        "random": cmd_random,
        "solve": cmd_solve,
        "compare": cmd_compare,
        "bench-dim": cmd_bench_dim,
        "gradcheck": cmd_gradcheck,
    }
    try:
        return handlers[args.command](args, sys.stdout)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ParseError, InvariantViolation, ShapeError, ParameterError, DomainError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 3
    except (NumericalError, BoundaryError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
