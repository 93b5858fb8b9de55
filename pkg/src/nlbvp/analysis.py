"""Spectral and structural diagnostics of the assembled energy form.

The nullspace of the form is the gauge freedom of the Neumann problem; the
Friedrichs and Poincare constants are reciprocals of generalized eigenvalues
of the form against mass diagonals.  All eigenvalue work goes through the
deterministic inverse iteration in `linalg`.

The Poincare constant comes in two variants differing only in which mass
diagonal appears on the left-hand side of the inequality:

* ``variant="omega"``   : interior-mass norm (the defining inequality),
* ``variant="full"``    : interior+boundary mass norm (the mean-zero form).

On finite node sets the two are simultaneously finite or infinite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import EigensolverFailure, EmptyGamma, NonPositiveC

NULLSPACE_TOL_FACTOR = 1e-9  # default eigenvalue threshold: factor * largest diagonal
MAX_PRINCIPLE_TOL = 1e-12


@dataclass
class NullspaceBasis:
    """Mass-orthonormal basis of the zero-energy subspace of the form."""

    vectors: np.ndarray  # (n, k), columns orthonormal in the full mass inner product
    eigenvalues: np.ndarray
    tolerance: float
    domain: object

    @property
    def dimension(self):
        return self.vectors.shape[1]


@dataclass
class InequalityReport:
    """Outcome of an inequality-constant computation.

    constant    : best constant, +inf when the inequality fails
    eigenvalue  : the generalized eigenvalue the constant came from
    witness     : node function achieving the extremal Rayleigh quotient
    """

    constant: float
    eigenvalue: float
    witness: np.ndarray


@dataclass
class TraceWeight:
    """Boundary weight function characterizing admissible trace data.

    variant "sufficient": w(y) = K(y, Omega); boundary data square-summable
    against this weight extends into the solution space.
    variant "necessary": w(y) = sum_{s in Omega} K(y,{s}) / (K(s, Gamma) + c);
    square-summability against it is necessary for extendability.
    """

    values: np.ndarray
    variant: str
    c: float | None
    domain: object


@dataclass
class FunctionalCheck:
    """Continuity diagnostics of the boundary load against a trace weight."""

    weighted_sum: float
    min_weight: float
    ill_conditioned: bool
    passes: bool = True


def _scaled_diag_max(matrix, masses):
    diag = matrix.diagonal()
    return float(np.max(diag / masses)) if diag.size else 0.0


def nullspace(form, tol=None):
    """Basis of the numerical kernel of the form.

    Eigenvectors of the mass-weighted problem M w = lambda D w with
    lambda < tol, D = diag of masses over the interior+boundary ordering.
    The default tolerance is NULLSPACE_TOL_FACTOR times the largest
    mass-scaled diagonal entry.
    """
    n = form.n
    if tol is None:
        tol = NULLSPACE_TOL_FACTOR * max(_scaled_diag_max(form.matrix, form.mass_diag), 1e-300)
    if tol <= 0.0:
        raise ValueError("nullspace tolerance must be positive")
    values: list[float] = []
    vectors = np.empty((n, 0))
    while vectors.shape[1] < n:
        lam, vec = linalg.smallest_eigenpairs(
            form.matrix, form.mass_diag, count=1, deflate=vectors
        )
        if lam[0] >= tol:
            break
        values.append(lam[0])
        vectors = np.column_stack([vectors, vec])
    return NullspaceBasis(
        vectors=vectors,
        eigenvalues=np.array(values),
        tolerance=tol,
        domain=form.domain,
    )


def project_out_kernel(u, basis, measure):
    """Remove the interior-mass-weighted projection of u onto the nullspace.

    The projection minimizes the interior mass norm of the difference; the
    result is interior-mass orthogonal to every basis vector.  Orthogonality
    in the full solution-space inner product coincides because the energy
    part vanishes against the nullspace.
    """
    if basis.dimension == 0:
        return np.array(u, dtype=float)
    domain = basis.domain
    m = domain.m
    w_omega = basis.vectors[:m, :]
    masses = measure.masses[domain.omega]
    gram = w_omega.T @ (masses[:, None] * w_omega)
    rhs = w_omega.T @ (masses * u[:m])
    coeff = np.linalg.solve(gram, rhs)
    return u - basis.vectors @ coeff


def friedrichs_constant(form):
    """Best constant in ||u||^2_{L2(Omega)} <= C B(u, u) over functions
    vanishing on the boundary; +inf when the interior block is singular.

    Computed from the smallest eigenvalue of the interior-block pencil
    (omega_block, interior masses); results are cached on the form.
    """
    cached = form._cache.get("friedrichs")
    if cached is not None:
        return cached
    m = form.domain.m
    tol = NULLSPACE_TOL_FACTOR * max(_scaled_diag_max(form.omega_block, form.mass_omega), 1e-300)
    lam, vec = linalg.smallest_eigenpairs(form.omega_block, form.mass_omega, count=1)
    witness = np.zeros(form.n)
    witness[:m] = vec[:, 0]
    if lam[0] <= tol:
        report = InequalityReport(constant=np.inf, eigenvalue=lam[0], witness=witness)
    else:
        report = InequalityReport(constant=1.0 / lam[0], eigenvalue=lam[0], witness=witness)
    form._cache["friedrichs"] = report
    return report


def _trivial_poincare(form):
    # the nullspace spans everything: the projected inequality holds with an
    # arbitrarily small constant
    return InequalityReport(constant=0.0, eigenvalue=np.inf, witness=np.zeros(form.n))


def _poincare_full(form, basis):
    if basis.dimension >= form.n:
        return _trivial_poincare(form)
    lam, vec = linalg.smallest_eigenpairs(
        form.matrix, form.mass_diag, count=1, deflate=basis.vectors
    )
    if lam[0] <= basis.tolerance:
        return InequalityReport(constant=np.inf, eigenvalue=lam[0], witness=vec[:, 0])
    return InequalityReport(constant=1.0 / lam[0], eigenvalue=lam[0], witness=vec[:, 0])


def _poincare_omega(form, basis, maxiter=None):
    """Largest quotient (interior mass norm)^2 / B(v, v) over functions
    interior-mass orthogonal to the nullspace, by power iteration with an
    energy solve per step."""
    n = form.n
    if basis.dimension >= n:
        return _trivial_poincare(form)
    m = form.domain.m
    d_omega = form.mass_diag.copy()
    d_omega[m:] = 0.0
    matrix = form.matrix
    w = basis.vectors

    if basis.dimension:
        gram = w.T @ (d_omega[:, None] * w)
        q_euclid, _ = np.linalg.qr(w)

        def onto_complement(z):
            coeff = np.linalg.solve(gram, w.T @ (d_omega * z))
            return z - w @ coeff

        def onto_range(z):
            return z - q_euclid @ (q_euclid.T @ z)
    else:
        def onto_complement(z):
            return z

        def onto_range(z):
            return z

    if maxiter is None:
        maxiter = max(10 * n, 100)
    best = None
    for start in linalg.start_vectors(n, 0):
        z = onto_complement(start.copy())
        if np.linalg.norm(z) < 1e-10:
            continue
        theta_prev, theta, witness, stalls = None, 0.0, z, 0
        for _ in range(maxiter):
            rhs = onto_range(d_omega * z)
            if np.linalg.norm(rhs) == 0.0:
                theta, witness = 0.0, z
                break
            y, _, _ = linalg.conjugate_gradient(
                matrix, rhs, tol=1e-13, project=onto_range
            )
            z = onto_complement(y)
            norm = np.linalg.norm(z)
            if norm == 0.0:
                theta, witness = 0.0, z
                break
            z /= norm
            energy = float(z @ (matrix @ z))
            mass = float(z @ (d_omega * z))
            theta, witness = mass / energy, z
            if theta_prev is not None and abs(theta - theta_prev) <= 1e-13 * max(theta, 1.0):
                stalls += 1
                if stalls >= 2:
                    break
            else:
                stalls = 0
            theta_prev = theta
        else:
            raise EigensolverFailure("power iteration for the interior-norm constant stalled")
        if best is None or theta > best[0]:
            best = (theta, witness)
    if best is None:
        raise EigensolverFailure("no admissible start vector for the interior-norm constant")
    theta, witness = best
    if theta <= 0.0:
        return InequalityReport(constant=0.0, eigenvalue=np.inf, witness=witness)
    return InequalityReport(constant=theta, eigenvalue=1.0 / theta, witness=witness)


def poincare_constant(form, basis, variant="full"):
    """Best constant C with (mass norm of v)^2 <= C B(v, v) on the
    orthogonal complement of the nullspace.

    variant "full" uses the interior+boundary mass norm (constant = 1 over
    the spectral gap above the nullspace); variant "omega" uses the interior
    mass norm.  Reports +inf when the complement still touches the numerical
    kernel (gap below the basis tolerance).
    """
    if variant == "full":
        return _poincare_full(form, basis)
    if variant == "omega":
        return _poincare_omega(form, basis)
    raise ValueError(f"unknown Poincare variant {variant!r}")


def strong_poincare_check(basis, rel_tol=1e-10):
    """True when the nullspace is exactly the constants: then the mean-zero
    inequality and the projected inequality coincide."""
    if basis.dimension != 1:
        return False
    w = basis.vectors[:, 0]
    scale = float(np.max(np.abs(w)))
    if scale == 0.0:
        return False
    return float(np.max(np.abs(w - w.mean()))) <= rel_tol * scale


def trace_weight(kernel, domain, variant="sufficient", c=None):
    """Boundary weight for the trace-space characterization.

    "sufficient": w(y) = K(y, Omega).
    "necessary":  w(y) = sum_{s in Omega} K(y,{s}) / (K(s, Gamma) + c), c > 0.
    """
    omega_set = set(int(i) for i in domain.omega)
    gamma_set = set(int(i) for i in domain.gamma)
    if variant == "sufficient":
        values = np.array(
            [
                sum(w for t, w in kernel.entries(int(y)) if t in omega_set)
                for y in domain.gamma
            ]
        )
        return TraceWeight(values=values, variant=variant, c=None, domain=domain)
    if variant == "necessary":
        if c is None or c <= 0.0:
            raise NonPositiveC("the necessary trace weight needs a constant c > 0")
        k_to_gamma = {
            int(s): sum(w for t, w in kernel.entries(int(s)) if t in gamma_set)
            for s in domain.omega
        }
        values = np.array(
            [
                sum(
                    w / (k_to_gamma[int(t)] + c)
                    for t, w in kernel.entries(int(y))
                    if t in omega_set
                )
                for y in domain.gamma
            ]
        )
        return TraceWeight(values=values, variant=variant, c=float(c), domain=domain)
    raise ValueError(f"unknown trace-weight variant {variant!r}")


def compatibility_defect(f, g, basis, measure):
    """Worst violation of the solvability condition: the load must annihilate
    every nullspace vector, max_w |sum_Omega f w m + sum_Gamma g w m|."""
    if basis.dimension == 0:
        return 0.0
    domain = basis.domain
    m = domain.m
    masses = measure.masses[domain.order]
    load = np.concatenate([np.asarray(f, dtype=float), np.asarray(g, dtype=float)])
    if load.shape != (domain.n,):
        raise ValueError("f and g lengths must match the interior/boundary blocks")
    return float(np.max(np.abs(basis.vectors.T @ (masses * load))))


def continuous_functional_check(g, weight, measure):
    """Report sum_Gamma g^2 m / w and min_Gamma w.

    On finite node sets the boundary load always induces a continuous
    functional; the record exists to flag near-zero weights (below
    WEAK_BOUNDARY_THRESHOLD scale) as ill-conditioned trace data.
    """
    domain = weight.domain
    masses = measure.masses[domain.gamma]
    g = np.asarray(g, dtype=float)
    if weight.values.size:
        weighted_sum = float(np.sum(g * g * masses / weight.values))
        min_weight = float(np.min(weight.values))
    else:
        weighted_sum, min_weight = 0.0, np.inf
    return FunctionalCheck(
        weighted_sum=weighted_sum,
        min_weight=min_weight,
        ill_conditioned=bool(min_weight < 1e-12),
    )


def max_principle_check(u, form, domain):
    """True when the interior maximum does not exceed the boundary maximum
    (up to MAX_PRINCIPLE_TOL times the value scale)."""
    if domain.l == 0:
        raise EmptyGamma("the nonlocal boundary is empty; the principle is vacuous")
    m = domain.m
    scale = max(1.0, float(np.max(np.abs(u))))
    return float(np.max(u[:m])) <= float(np.max(u[m:])) + MAX_PRINCIPLE_TOL * scale


def friedrichs_chain_holds(kernel, domain, measure, partition):
    """Chain criterion for the Friedrichs inequality over an interior
    partition: the first cell must reach the boundary, every later cell must
    reach its predecessor, each with positive kernel mass at every node."""
    omega_set = set(int(i) for i in domain.omega)
    covered: set[int] = set()
    cells = []
    for cell in partition:
        ids = set(int(i) for i in cell)
        if not ids or not ids <= omega_set or ids & covered:
            raise ValueError("partition must split the interior into disjoint non-empty cells")
        covered |= ids
        cells.append(ids)
    if covered != omega_set:
        raise ValueError("partition must cover the interior")
    gamma_set = set(int(i) for i in domain.gamma)
    previous = gamma_set
    for ids in cells:
        alpha = min(
            sum(w for t, w in kernel.entries(x) if t in previous) for x in sorted(ids)
        )
        if alpha <= 0.0:
            return False
        previous = ids
    return True


def diagnostic_record(
    symmetry_defect_value=None,
    gamma_size=None,
    nullspace_dim=None,
    friedrichs=None,
    poincare_omega=None,
    poincare_full=None,
    compatibility=None,
    max_principle=None,
):
    """Flat report dict used by the diagnostics export."""

    def constant(report):
        return None if report is None else report.constant

    return {
        "symmetry_defect": symmetry_defect_value,
        "gamma_size": gamma_size,
        "nullspace_dim": nullspace_dim,
        "friedrichs_constant": constant(friedrichs),
        "poincare_constant_omega": constant(poincare_omega),
        "poincare_constant_full": constant(poincare_full),
        "compatibility_defect": compatibility,
        "max_principle": max_principle,
    }
