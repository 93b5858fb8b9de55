"""Atomic measures, transition kernels, and the nonlocal boundary.

A measure is a finite set of nodes in R^d with strictly positive masses.
A transition kernel attaches to every node a finite weighted neighbor list;
evaluating the kernel on a node set means summing the weights of the entries
whose target lies in the set.  Kernels are stored materialized because the
symmetry and boundary scans need the full support.

The node x itself never appears in its own support: the difference
u(x) - u(y) vanishes on the diagonal, so diagonal atoms would contribute
nothing to any operator built here.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (
    AsymmetricDensity,
    IsolatedVertex,
    NonCommensurateGrid,
    NonPositiveConductance,
)

DEFAULT_LOOKUP_TOL = 1e-12

# Nodes whose kernel mass toward the interior is positive but below this
# threshold still join the boundary, flagged as ill-conditioned trace data.
WEAK_BOUNDARY_THRESHOLD = 1e-14


class KernelEntry(NamedTuple):
    target: int
    weight: float


class AtomicMeasure:
    """Finite node set in R^d with positive masses and coordinate lookup.

    Parameters
    ----------
    points : array_like, shape (n, d)
        Node coordinates.  Must be pairwise distinct under `lookup_tol`.
    masses : array_like, shape (n,), optional
        Strictly positive node masses; defaults to 1 everywhere.
    lookup_tol : float
        Absolute coordinate tolerance for node identification.
    """

    def __init__(self, points, masses=None, lookup_tol=DEFAULT_LOOKUP_TOL):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("points must be a non-empty (n, d) array")
        self.points = pts
        n = pts.shape[0]
        if masses is None:
            self.masses = np.ones(n)
        else:
            self.masses = np.asarray(masses, dtype=float)
            if self.masses.shape != (n,):
                raise ValueError("masses must have one entry per node")
            if np.any(self.masses <= 0.0):
                raise ValueError("all node masses must be strictly positive")
        self.lookup_tol = float(lookup_tol)
        self._cells: dict[float, dict[tuple, list[int]]] = {}
        for i in range(n):
            for j in self._candidates(pts[i], self.lookup_tol):
                if j != i and np.linalg.norm(pts[j] - pts[i]) <= self.lookup_tol:
                    raise ValueError(
                        f"nodes {j} and {i} coincide within tolerance {self.lookup_tol}"
                    )

    # -- basic queries ---------------------------------------------------

    def __len__(self):
        return self.points.shape[0]

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def total_mass(self):
        return float(self.masses.sum())

    # -- spatial index ----------------------------------------------------

    def _grid(self, cell):
        cells = self._cells.get(cell)
        if cells is None:
            cells = {}
            for i in range(len(self)):
                key = tuple(int(math.floor(c / cell)) for c in self.points[i])
                cells.setdefault(key, []).append(i)
            self._cells[cell] = cells
        return cells

    def _candidates(self, point, radius):
        cell = max(radius, 1e-300)
        cells = self._grid(cell)
        base = tuple(int(math.floor(c / cell)) for c in point)
        out = []
        for offset in itertools.product((-1, 0, 1), repeat=self.dim):
            key = tuple(b + o for b, o in zip(base, offset))
            out.extend(cells.get(key, ()))
        return out

    def locate(self, point, tol=None):
        """Return the node id within `tol` of `point`, or None."""
        point = np.asarray(point, dtype=float)
        tol = self.lookup_tol if tol is None else float(tol)
        best, best_d = None, np.inf
        for i in self._candidates(point, tol):
            d = float(np.linalg.norm(self.points[i] - point))
            if d <= tol and d < best_d:
                best, best_d = i, d
        return best

    def near(self, point, radius):
        """Node ids with 0 < distance(point, node) <= radius."""
        point = np.asarray(point, dtype=float)
        out = []
        for i in self._candidates(point, radius):
            d = float(np.linalg.norm(self.points[i] - point))
            if 0.0 < d <= radius:
                out.append(i)
        return sorted(out)


class TransitionKernel:
    """Per-node finite weighted neighbor lists realizing K(x, .).

    `support[i]` is the list of KernelEntry atoms of node i.  Entries carry
    non-negative weights and never target the node itself.
    """

    def __init__(self, support, family, params=None):
        self.support = [list(entries) for entries in support]
        self.family = family
        self.params = dict(params or {})
        for i, entries in enumerate(self.support):
            for t, w in entries:
                if w < 0.0:
                    raise ValueError(f"negative kernel weight at node {i}")
                if t == i:
                    raise ValueError(f"diagonal kernel atom at node {i}")

    def __len__(self):
        return len(self.support)

    def entries(self, node):
        return self.support[node]

    def evaluate(self, node, targets):
        """K(node, S) for a node set S given as ids."""
        targets = set(int(t) for t in targets)
        return float(sum(w for t, w in self.support[node] if t in targets))

    def total(self, node):
        """K(node, R^d): the full kernel mass of one node."""
        return float(sum(w for _, w in self.support[node]))


@dataclass(frozen=True)
class NonlocalDomain:
    """Partition of the node set into interior, nonlocal boundary, exterior.

    The canonical ordering (interior first, then boundary, each ascending by
    node id) is fixed here and reused by assembly, solvers and reports.
    """

    omega: np.ndarray
    gamma: np.ndarray
    exterior: np.ndarray
    weak_gamma: np.ndarray
    _pos: dict = field(repr=False, compare=False, default_factory=dict)

    @property
    def m(self):
        return len(self.omega)

    @property
    def l(self):
        return len(self.gamma)

    @property
    def n(self):
        return self.m + self.l

    @property
    def order(self):
        return np.concatenate([self.omega, self.gamma])

    def position(self, node):
        """Local index of a node in the canonical ordering."""
        return self._pos[int(node)]

    def local(self, node):
        """Local index, or None for exterior nodes."""
        return self._pos.get(int(node))

    def is_omega(self, node):
        p = self._pos.get(int(node))
        return p is not None and p < self.m

    def is_gamma(self, node):
        p = self._pos.get(int(node))
        return p is not None and p >= self.m


def nonlocal_boundary(kernel, omega, measure):
    """Split the node set: boundary = nodes outside omega with K(y, omega) > 0.

    The split is exact: kernel masses toward omega are finite sums.  Nodes
    whose mass toward omega is positive but below WEAK_BOUNDARY_THRESHOLD are
    kept in the boundary and listed in `weak_gamma`.
    """
    omega_ids = sorted(int(i) for i in omega)
    n = len(measure)
    for i in omega_ids:
        if not 0 <= i < n:
            raise ValueError(f"omega references node {i} outside the measure")
    omega_set = set(omega_ids)
    if len(omega_set) != len(omega_ids):
        raise ValueError("omega contains duplicate nodes")
    gamma, exterior, weak = [], [], []
    for y in range(n):
        if y in omega_set:
            continue
        k_yo = sum(w for t, w in kernel.entries(y) if t in omega_set)
        if k_yo > 0.0:
            gamma.append(y)
            if k_yo < WEAK_BOUNDARY_THRESHOLD:
                weak.append(y)
        else:
            exterior.append(y)
    pos = {node: i for i, node in enumerate(itertools.chain(omega_ids, gamma))}
    return NonlocalDomain(
        omega=np.array(omega_ids, dtype=int),
        gamma=np.array(gamma, dtype=int),
        exterior=np.array(exterior, dtype=int),
        weak_gamma=np.array(weak, dtype=int),
        _pos=pos,
    )


def stencil_kernel(d, h, measure):
    """Kernel of the (2d+1)-point difference operator on a step-h lattice.

    Every node gets the atoms (x + h e_i, 1/h^2) and (x - h e_i, 1/h^2) for
    each axis whose target resolves to a node of the measure; missing targets
    are omitted.  A target that resolves to no node but has some node strictly
    within h/2 signals a lattice that is not commensurate with h.
    """
    if h <= 0.0:
        raise ValueError("step h must be positive")
    if measure.dim != d:
        raise ValueError(f"measure has dimension {measure.dim}, expected {d}")
    tol = h * 1e-9
    w = 1.0 / (h * h)
    support = []
    for i in range(len(measure)):
        entries = []
        for axis in range(d):
            for sign in (1.0, -1.0):
                target = measure.points[i].copy()
                target[axis] += sign * h
                j = measure.locate(target, tol)
                if j is not None:
                    entries.append(KernelEntry(j, w))
                    continue
                # open band: a node at exactly h/2 is a legitimate finer lattice
                strays = measure.near(target, 0.5 * h * (1.0 - 1e-9))
                if strays:
                    raise NonCommensurateGrid(
                        f"target of node {i} along axis {axis} lands between nodes "
                        f"(nearest stray: node {strays[0]})"
                    )
        support.append(entries)
    return TransitionKernel(support, "stencil", {"d": d, "h": h})


def graph_kernel(edges, coordinates=None):
    """Degree-normalized kernel of a weighted graph, with its degree measure.

    Parameters
    ----------
    edges : sequence of (i, j, conductance)
        Undirected edges over integer vertex ids 0..V-1, each listed once.
    coordinates : array_like, optional
        Vertex embedding in R^d; defaults to vertex k at (k,).

    Returns
    -------
    (TransitionKernel, AtomicMeasure)
        Kernel with support(x) = {(y, mu_xy / mu(x)) : y ~ x} and the measure
        carrying the vertex degree mu(x) = sum_y mu_xy as node mass.
    """
    adjacency: dict[int, dict[int, float]] = {}
    seen = set()
    max_id = -1
    for i, j, c in edges:
        i, j, c = int(i), int(j), float(c)
        if c <= 0.0:
            raise NonPositiveConductance(f"edge ({i}, {j}) has conductance {c}")
        if i == j:
            raise ValueError(f"self-loop at vertex {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValueError(f"edge ({i}, {j}) listed more than once")
        seen.add(key)
        adjacency.setdefault(i, {})[j] = c
        adjacency.setdefault(j, {})[i] = c
        max_id = max(max_id, i, j)
    if max_id < 0:
        raise ValueError("edge list is empty")
    if coordinates is None:
        n_vertices = max_id + 1
        coordinates = [(float(k),) for k in range(n_vertices)]
    else:
        coordinates = np.atleast_2d(np.asarray(coordinates, dtype=float))
        n_vertices = coordinates.shape[0]
        if max_id >= n_vertices:
            raise ValueError("edge references a vertex beyond the coordinate list")
    degrees = np.zeros(n_vertices)
    support = []
    for x in range(n_vertices):
        nbrs = adjacency.get(x)
        if not nbrs:
            raise IsolatedVertex(f"vertex {x} has no incident edge")
        mu_x = sum(nbrs.values())
        degrees[x] = mu_x
        support.append([KernelEntry(y, c / mu_x) for y, c in sorted(nbrs.items())])
    conductances = {key: adjacency[key[0]][key[1]] for key in seen}
    measure = AtomicMeasure(coordinates, degrees)
    kernel = TransitionKernel(support, "graph", {"conductances": conductances})
    return kernel, measure


def quadrature_kernel(gamma, delta, measure, symmetry_tol=1e-12):
    """Kernel of a truncated density: weight gamma(x, y) * mass(y) within delta.

    The node masses act as quadrature weights, so continuum densities enter
    only through their values at node pairs.  The density is probed for
    symmetry on every support pair; an asymmetric density is rejected rather
    than symmetrized, since silent symmetrization would mask modeling errors.
    """
    if delta <= 0.0:
        raise ValueError("interaction radius delta must be positive")
    support = []
    for i in range(len(measure)):
        entries = []
        for j in measure.near(measure.points[i], delta):
            g_ij = float(gamma(measure.points[i], measure.points[j]))
            g_ji = float(gamma(measure.points[j], measure.points[i]))
            if g_ij < 0.0 or g_ji < 0.0:
                raise ValueError(f"density is negative on pair ({i}, {j})")
            if abs(g_ij - g_ji) > symmetry_tol * max(1.0, abs(g_ij), abs(g_ji)):
                raise AsymmetricDensity(
                    f"gamma({i}, {j}) = {g_ij} but gamma({j}, {i}) = {g_ji}"
                )
            w = g_ij * measure.masses[j]
            if w != 0.0:
                entries.append(KernelEntry(j, w))
        support.append(entries)
    return TransitionKernel(support, "quadrature", {"delta": delta})


def _pair_weights(kernel, measure):
    """Aggregate mass(x) * K(x, {y}) over ordered node pairs."""
    weights: dict[tuple[int, int], float] = {}
    for x in range(len(kernel)):
        mx = measure.masses[x]
        for t, w in kernel.entries(x):
            key = (x, int(t))
            weights[key] = weights.get(key, 0.0) + mx * w
    return weights


def symmetry_defect(kernel, measure):
    """Worst violation of mass(x) K(x,{y}) = mass(y) K(y,{x}) over node pairs.

    Zero exactly when the product of measure and kernel is flip-invariant on
    the atomic product sigma-algebra.
    """
    if len(kernel) != len(measure):
        raise ValueError("kernel and measure describe different node counts")
    weights = _pair_weights(kernel, measure)
    defect = 0.0
    for (x, y), v in weights.items():
        defect = max(defect, abs(v - weights.get((y, x), 0.0)))
    return defect
