"""Problem documents and all text exports.

Documents are JSON with the fixed kernel/measure fields

    family     "stencil" | "graph" | "quadrature"
    dimension  ambient dimension
    h          lattice step (stencil)
    delta      interaction radius (quadrature)
    gamma      radial density expression in the variable r (quadrature)
    nodes      coordinate list, each entry [x1..xd] or [x1..xd, mass]
    edges      [i, j, conductance] triples (graph)
    omega      interior node ids

plus an optional problem block {kind, f, g, c, tol}.  Load data f/g/c may be
per-node value lists, expression strings over the coordinates (variables
x, y, z; functions sin, cos, exp, sqrt, abs; constant pi), or
{"table": path} to reuse a previously written solution table.

All numeric output is written with 17 significant digits so that re-reading
reproduces the exact double.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DocumentError
from .measure import (
    AtomicMeasure,
    graph_kernel,
    nonlocal_boundary,
    quadrature_kernel,
    stencil_kernel,
)

_EXPR_GLOBALS = {
    "__builtins__": {},
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "sqrt": math.sqrt,
    "abs": abs,
    "pi": math.pi,
}


def fmt(x):
    """17-significant-digit rendering; round-trips every finite double."""
    return format(float(x), ".17g")


def json_value(x):
    if x is None:
        return None
    if isinstance(x, (bool, str, int)):
        return x
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


def write_json(record, path=None):
    payload = json.dumps({k: json_value(v) for k, v in record.items()}, indent=2)
    if path is None:
        return payload
    with open(path, "w") as handle:
        handle.write(payload + "\n")
    return payload


def evaluate_expression(expr, point):
    """Evaluate a coordinate expression at one node."""
    point = np.atleast_1d(point)
    names = {"x": float(point[0])}
    if point.shape[0] > 1:
        names["y"] = float(point[1])
    if point.shape[0] > 2:
        names["z"] = float(point[2])
    try:
        return float(eval(expr, _EXPR_GLOBALS, names))  # noqa: S307 - restricted env
    except Exception as exc:
        raise DocumentError(f"cannot evaluate expression {expr!r}: {exc}") from exc


def radial_density(expr):
    """Symmetric density from a radial expression in the variable r."""
    def gamma(p, q):
        r = float(np.linalg.norm(np.asarray(p, dtype=float) - np.asarray(q, dtype=float)))
        try:
            return float(eval(expr, _EXPR_GLOBALS, {"r": r}))  # noqa: S307
        except Exception as exc:
            raise DocumentError(f"cannot evaluate density {expr!r}: {exc}") from exc
    return gamma


# -- solution tables -----------------------------------------------------------

def write_solution_table(solution, domain, measure, path=None):
    """Per-node table: index, coordinates, region, value (tab-separated)."""
    u = solution.u if hasattr(solution, "u") else solution
    lines = ["# node\tcoords\tregion\tvalue"]
    for local, node in enumerate(domain.order):
        coords = ",".join(fmt(c) for c in measure.points[node])
        region = "omega" if local < domain.m else "gamma"
        lines.append(f"{int(node)}\t{coords}\t{region}\t{fmt(u[local])}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as handle:
            handle.write(text)
    return text


def read_solution_table(path):
    """Rows of a solution table as (node, coords, region, value) tuples."""
    rows = []
    with open(path) as handle:
        for line in handle:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            node, coords, region, value = line.split("\t")
            rows.append(
                (
                    int(node),
                    tuple(float(c) for c in coords.split(",")),
                    region,
                    float(value),
                )
            )
    return rows


def gamma_values_from_table(path):
    """Boundary values of a solution table, in table (canonical) order."""
    return np.array([value for _, _, region, value in read_solution_table(path) if region == "gamma"])


def write_matrix_coo(matrix, path):
    """Coordinate-list export: row, col, value per line."""
    coo = matrix.tocoo()
    with open(path, "w") as handle:
        for i, j, v in zip(coo.row, coo.col, coo.data):
            handle.write(f"{i}\t{j}\t{fmt(v)}\n")


def write_bench_report(rows, path=None):
    """Benchmark table: h, m, l, max_error, order, friedrichs_C, poincare_C, runtime_ms."""
    lines = ["# h\tm\tl\tmax_error\torder\tfriedrichs_C\tpoincare_C\truntime_ms"]
    for row in rows:
        lines.append(
            "\t".join(
                [
                    fmt(row["h"]),
                    str(row["m"]),
                    str(row["l"]),
                    fmt(row["max_error"]),
                    fmt(row["order"]),
                    fmt(row["friedrichs_C"]),
                    fmt(row["poincare_C"]),
                    fmt(row["runtime_ms"]),
                ]
            )
        )
    text = "\n".join(lines) + "\n"
    if path is not None:
        with open(path, "w") as handle:
            handle.write(text)
    return text


# -- problem documents ---------------------------------------------------------

@dataclass
class ProblemDocument:
    kernel: object
    measure: AtomicMeasure
    domain: object
    kind: str | None  # dirichlet | neumann | regularized | None
    f: np.ndarray | None
    g: np.ndarray | None
    c: np.ndarray | None
    tol: float


def _require(data, key):
    if key not in data:
        raise DocumentError(f"document is missing the field {key!r}")
    return data[key]


def _parse_nodes(data, dimension):
    raw = _require(data, "nodes")
    points, masses = [], []
    for entry in raw:
        entry = list(entry) if isinstance(entry, (list, tuple)) else [entry]
        if len(entry) == dimension:
            points.append(entry)
            masses.append(1.0)
        elif len(entry) == dimension + 1:
            points.append(entry[:dimension])
            masses.append(float(entry[dimension]))
        else:
            raise DocumentError(
                f"node entry {entry} does not match dimension {dimension}"
            )
    if not points:
        raise DocumentError("document contains no nodes")
    return np.array(points, dtype=float), np.array(masses)


def _node_values(raw, points, count, name):
    if raw is None:
        return np.zeros(count)
    if isinstance(raw, str):
        return np.array([evaluate_expression(raw, p) for p in points])
    if isinstance(raw, dict) and "table" in raw:
        values = gamma_values_from_table(raw["table"])
        if values.shape != (count,):
            raise DocumentError(
                f"table for {name!r} holds {values.shape[0]} boundary values, expected {count}"
            )
        return values
    values = np.asarray(raw, dtype=float)
    if values.shape != (count,):
        raise DocumentError(f"{name!r} must provide {count} values, got {values.shape}")
    return values


def load_document(source):
    """Build measure, kernel, domain, and problem data from a document.

    `source` is a path to a JSON file or an already-parsed dict.
    """
    if isinstance(source, dict):
        data = source
    else:
        try:
            with open(source) as handle:
                data = json.load(handle)
        except (OSError, json.JSONDecodeError) as exc:
            raise DocumentError(f"cannot read document: {exc}") from exc
    family = _require(data, "family")
    try:
        if family == "stencil":
            dimension = int(_require(data, "dimension"))
            h = float(_require(data, "h"))
            points, masses = _parse_nodes(data, dimension)
            measure = AtomicMeasure(points, masses, lookup_tol=h * 1e-9)
            kernel = stencil_kernel(dimension, h, measure)
        elif family == "quadrature":
            dimension = int(_require(data, "dimension"))
            delta = float(_require(data, "delta"))
            density = radial_density(_require(data, "gamma"))
            points, masses = _parse_nodes(data, dimension)
            measure = AtomicMeasure(points, masses)
            kernel = quadrature_kernel(density, delta, measure)
        elif family == "graph":
            edges = [(int(i), int(j), float(c)) for i, j, c in _require(data, "edges")]
            coords = data.get("nodes")
            kernel, measure = graph_kernel(edges, coordinates=coords)
        else:
            raise DocumentError(f"unknown kernel family {family!r}")
        omega = _require(data, "omega")
        if not omega:
            raise DocumentError("omega must not be empty")
        domain = nonlocal_boundary(kernel, omega, measure)
    except DocumentError:
        raise
    except Exception as exc:
        raise DocumentError(str(exc)) from exc
    problem = data.get("problem") or {}
    kind = problem.get("kind")
    if kind is not None and kind not in ("dirichlet", "neumann", "regularized"):
        raise DocumentError(f"unknown problem kind {kind!r}")
    pts_omega = measure.points[domain.omega]
    pts_gamma = measure.points[domain.gamma]
    f = _node_values(problem.get("f"), pts_omega, domain.m, "f") if kind else None
    g = _node_values(problem.get("g"), pts_gamma, domain.l, "g") if kind else None
    c = None
    if kind == "regularized":
        c = _node_values(problem.get("c"), pts_omega, domain.m, "c")
    return ProblemDocument(
        kernel=kernel,
        measure=measure,
        domain=domain,
        kind=kind,
        f=f,
        g=g,
        c=c,
        tol=float(data.get("tol", 1e-12)),
    )
