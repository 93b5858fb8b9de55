"""Command-line front door: solve, diagnose, bench.

Exit codes form a stable contract:

    0  success
    1  document/parameter errors
    2  incompatible Neumann data (load pairs with the nullspace)
    3  ill-posed problem (Friedrichs or Poincare inequality fails)
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import analysis, fileio, poisson
from .assembly import assemble_form
from .errors import (
    DocumentError,
    FriedrichsViolated,
    IncompatibleData,
    NlbvpError,
    PoincareViolated,
)
from .measure import symmetry_defect
from .solvers import (
    DirichletProblem,
    NeumannProblem,
    solve_dirichlet,
    solve_neumann,
    solve_regularized,
)

THREAD_ENV_VAR = "NLBVP_BENCH_THREADS"


def _parse_step(text):
    text = text.strip()
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _emit(text, out_path):
    if out_path:
        with open(out_path, "w") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(args):
    doc = fileio.load_document(args.document)
    if doc.kind is None:
        raise DocumentError("document has no problem block to solve")
    form = assemble_form(doc.kernel, doc.measure, doc.domain)
    tol = args.tol if args.tol is not None else doc.tol
    if doc.kind == "dirichlet":
        solution = solve_dirichlet(DirichletProblem(form, doc.f, doc.g), tol=tol)
    elif doc.kind == "neumann":
        basis = analysis.nullspace(form)
        solution = solve_neumann(NeumannProblem(form, doc.f, doc.g), basis, tol=tol)
    else:
        solution = solve_regularized(NeumannProblem(form, doc.f, doc.g), doc.c, tol=tol)
    summary = {
        "kind": doc.kind,
        "residual": solution.residual,
        "iterations": solution.iterations,
        "projected": solution.projected,
    }
    if args.format == "structured":
        rows = [
            {
                "node": int(node),
                "coords": [float(c) for c in doc.measure.points[node]],
                "region": "omega" if local < doc.domain.m else "gamma",
                "value": solution.u[local],
            }
            for local, node in enumerate(doc.domain.order)
        ]
        _emit(json.dumps({"summary": summary, "solution": rows}, indent=2) + "\n", args.out)
    else:
        table = fileio.write_solution_table(solution, doc.domain, doc.measure)
        _emit(table, args.out)
        sys.stderr.write(fileio.write_json(summary) + "\n")
    return 0


def cmd_diagnose(args):
    doc = fileio.load_document(args.document)
    defect = symmetry_defect(doc.kernel, doc.measure)
    form = assemble_form(doc.kernel, doc.measure, doc.domain)
    basis = analysis.nullspace(form)
    friedrichs = analysis.friedrichs_constant(form)
    poincare_full = analysis.poincare_constant(form, basis, variant="full")
    poincare_omega = analysis.poincare_constant(form, basis, variant="omega")
    compat = None
    principle = None
    if doc.kind is not None:
        compat = analysis.compatibility_defect(doc.f, doc.g, basis, doc.measure)
        if doc.kind == "dirichlet" and np.isfinite(friedrichs.constant) and doc.domain.l:
            solution = solve_dirichlet(DirichletProblem(form, doc.f, doc.g), tol=doc.tol)
            principle = analysis.max_principle_check(solution.u, form, doc.domain)
    record = analysis.diagnostic_record(
        symmetry_defect_value=defect,
        gamma_size=doc.domain.l,
        nullspace_dim=basis.dimension,
        friedrichs=friedrichs,
        poincare_omega=poincare_omega,
        poincare_full=poincare_full,
        compatibility=compat,
        max_principle=principle,
    )
    if doc.domain.l:
        weight = analysis.trace_weight(doc.kernel, doc.domain, variant="sufficient")
        record["trace_weight_sufficient"] = [float(v) for v in weight.values]
        necessary = analysis.trace_weight(doc.kernel, doc.domain, variant="necessary", c=1.0)
        record["trace_weight_necessary_c1"] = [float(v) for v in necessary.values]
    payload = json.dumps(
        {k: (fileio.json_value(v) if not isinstance(v, list) else v) for k, v in record.items()},
        indent=2,
    )
    _emit(payload + "\n", args.out)
    return 0


def _bench_one(d, h, exact_kind):
    start = time.perf_counter()
    grid = poisson.unit_cube_grid(d, h)
    form = assemble_form(grid.kernel, grid.measure, grid.domain)
    pair = poisson.build_stiffness(grid)
    if (form.matrix - pair.a_neumann).nnz and abs(form.matrix - pair.a_neumann).max() > 1e-12:
        raise NlbvpError("assembled form deviates from the stiffness matrix")
    report = poisson.nonnegative_type_check(
        pair.a_neumann[: grid.m, :], range(grid.m)
    )
    if not report.nonnegative_type or not report.zero_row_sums:
        raise NlbvpError("reduced stiffness matrix is not of non-negative type")
    basis = analysis.nullspace(form)
    friedrichs = analysis.friedrichs_constant(form)
    poincare = analysis.poincare_constant(form, basis, variant="full")
    rows = poisson.convergence_study(
        d, *_manufactured(d, exact_kind), h_list=[h]
    )
    runtime = (time.perf_counter() - start) * 1000.0
    return {
        "h": h,
        "m": grid.m,
        "l": grid.l,
        "max_error": rows[0].max_error,
        "order": float("nan"),
        "friedrichs_C": friedrichs.constant,
        "poincare_C": poincare.constant,
        "runtime_ms": runtime,
    }


def _manufactured(d, kind):
    if kind == "quadratic":
        if d != 1:
            raise DocumentError("the quadratic exact solution is one-dimensional")
        return (lambda p: 0.5 * p[0] * (1.0 - p[0])), (lambda p: 1.0)

    def exact_u(p):
        return float(np.prod(np.sin(np.pi * np.asarray(p))))

    def exact_f(p):
        return d * np.pi * np.pi * exact_u(p)

    return exact_u, exact_f


def cmd_bench(args):
    try:
        h_list = [_parse_step(tok) for tok in args.h.split(",") if tok.strip()]
    except ValueError as exc:
        raise DocumentError(f"cannot parse step list {args.h!r}: {exc}") from exc
    if not h_list:
        raise DocumentError("empty step list")
    threads = int(os.environ.get(THREAD_ENV_VAR, "1"))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda h: _bench_one(args.d, h, args.exact), h_list))
    else:
        rows = [_bench_one(args.d, h, args.exact) for h in h_list]
    for i in range(1, len(rows)):
        prev, cur = rows[i - 1]["max_error"], rows[i]["max_error"]
        if prev > 0 and cur > 0:
            rows[i]["order"] = float(np.log2(prev / cur))
    text = fileio.write_bench_report(rows)
    _emit(text, args.out)
    if args.plot_prefix:
        for row, h in zip(rows, h_list):
            grid = poisson.unit_cube_grid(args.d, h)
            form = assemble_form(grid.kernel, grid.measure, grid.domain)
            exact_u, exact_f = _manufactured(args.d, args.exact)
            f = np.array([exact_f(p) for p in grid.measure.points[grid.domain.omega]])
            solution = solve_dirichlet(DirichletProblem(form, f, np.zeros(grid.l)))
            fileio.write_solution_table(
                solution, grid.domain, grid.measure, f"{args.plot_prefix}_h{h:.6g}.tsv"
            )
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nlbvp",
        description="Nonlocal Dirichlet/Neumann boundary-value problems on finite node sets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve the problem described by a document")
    p_solve.add_argument("document")
    p_solve.add_argument("--tol", type=float, default=None)
    p_solve.add_argument("--out", default=None)
    p_solve.add_argument("--format", choices=("table", "structured"), default="table")
    p_solve.set_defaults(func=cmd_solve)

    p_diag = sub.add_parser("diagnose", help="kernel and form diagnostics for a document")
    p_diag.add_argument("document")
    p_diag.add_argument("--out", default=None)
    p_diag.set_defaults(func=cmd_diagnose)

    p_bench = sub.add_parser("bench", help="unit-cube benchmark and convergence study")
    p_bench.add_argument("--d", type=int, required=True)
    p_bench.add_argument("--h", required=True, help="comma-separated steps, e.g. 1/8,1/16")
    p_bench.add_argument("--exact", choices=("sine", "quadratic"), default="sine")
    p_bench.add_argument("--out", default=None)
    p_bench.add_argument("--plot-prefix", default=None)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        return args.func(args)
    except IncompatibleData as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    except (FriedrichsViolated, PoincareViolated) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 3
    except (DocumentError, NlbvpError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
