"""Nonlocal Dirichlet and Neumann boundary-value problems on finite node sets.

Solver library for equations driven by symmetric transition kernels: finite
weighted neighbor lists over an atomic measure.  The pipeline runs from
kernel construction and symmetry verification through sparse assembly of the
energy form, inequality-constant estimation, well-posed solves with nullspace
handling, and maximum-principle checks, with the discrete Poisson problem on
the unit cube as the built-in benchmark.
"""

from .analysis import (
    InequalityReport,
    NullspaceBasis,
    TraceWeight,
    compatibility_defect,
    continuous_functional_check,
    friedrichs_chain_holds,
    friedrichs_constant,
    max_principle_check,
    nullspace,
    poincare_constant,
    project_out_kernel,
    strong_poincare_check,
    trace_weight,
)
from .assembly import (
    AssembledForm,
    apply_L,
    apply_N,
    assemble_form,
    bilinear,
    energy_dirichlet,
    energy_neumann,
    ibp_residual,
    negative_part,
    positive_part,
    v_norm_sq,
)
from .measure import (
    AtomicMeasure,
    KernelEntry,
    NonlocalDomain,
    TransitionKernel,
    graph_kernel,
    nonlocal_boundary,
    quadrature_kernel,
    stencil_kernel,
    symmetry_defect,
)
from .poisson import (
    StiffnessPair,
    UnitCubeGrid,
    build_stiffness,
    convergence_study,
    discrete_max_principle_check,
    graph_bvp_demo,
    nonnegative_type_check,
    unit_cube_grid,
)
from .solvers import (
    DirichletProblem,
    NeumannProblem,
    Solution,
    solve_dirichlet,
    solve_neumann,
    solve_regularized,
    strong_residual,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
