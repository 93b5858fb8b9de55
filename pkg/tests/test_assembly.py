"""Form assembly, operator application, and the integration-by-parts identity."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from nlbvp import (
    AtomicMeasure,
    TransitionKernel,
    apply_L,
    apply_N,
    assemble_form,
    bilinear,
    energy_dirichlet,
    energy_neumann,
    ibp_residual,
    negative_part,
    nonlocal_boundary,
    positive_part,
    v_norm_sq,
)
from nlbvp.errors import (
    AsymmetricKernel,
    DimensionMismatch,
    NodeNotInGamma,
    NodeNotInOmega,
)

from conftest import interval_setup, square_setup, three_node_setup


def brute_force_bilinear(kernel, measure, domain, u, v):
    """Literal double sum: half over interior pairs, full over coupling pairs."""
    omega = set(domain.omega.tolist())
    total = 0.0
    for x in domain.omega:
        mx = measure.masses[x]
        ux, vx = u[domain.position(x)], v[domain.position(x)]
        for t, w in kernel.entries(int(x)):
            ut, vt = u[domain.position(t)], v[domain.position(t)]
            factor = 0.5 if int(t) in omega else 1.0
            total += factor * mx * w * (ux - ut) * (vx - vt)
    return total


def test_three_node_matrix():
    _, _, _, form = three_node_setup()
    expected = 4.0 * np.array([[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
    assert_allclose(form.matrix.toarray(), expected, rtol=0, atol=0)


def test_interval_omega_block_is_scaled_tridiagonal():
    _, form = interval_setup(0.25)
    expected = 16.0 * (np.diag([2.0, 2.0, 2.0]) + np.diag([-1.0, -1.0], 1) + np.diag([-1.0, -1.0], -1))
    assert_allclose(form.omega_block.toarray(), expected, rtol=0, atol=0)


def test_zero_kernel_assembles_zero_matrix():
    measure = AtomicMeasure([[0.0], [1.0], [2.0]])
    kernel = TransitionKernel([[], [], []], "quadrature")
    domain = nonlocal_boundary(kernel, [0, 1, 2], measure)
    form = assemble_form(kernel, measure, domain)
    assert form.matrix.nnz == 0


def test_matrix_exactly_symmetric():
    grid, form = square_setup(0.25)
    diff = form.matrix - form.matrix.T
    assert diff.nnz == 0 or abs(diff).max() == 0.0


def test_matrix_positive_semidefinite():
    grid, form = square_setup(0.25)
    eigs = np.linalg.eigvalsh(form.matrix.toarray())
    assert eigs.min() >= -1e-10 * abs(form.matrix).max()


def test_assembly_rejects_asymmetric_kernel():
    measure = AtomicMeasure([[0.0], [1.0]])
    kernel = TransitionKernel([[(1, 1.0)], []], "quadrature")
    domain = nonlocal_boundary(kernel, [0], measure)
    with pytest.raises(AsymmetricKernel):
        assemble_form(kernel, measure, domain)


def test_bilinear_annihilates_constants():
    _, _, _, form = three_node_setup()
    ones = np.ones(3)
    assert bilinear(form, ones, ones) == 0.0


def test_bilinear_unit_vector():
    _, _, _, form = three_node_setup()
    e0 = np.array([1.0, 0.0, 0.0])
    assert bilinear(form, e0, e0) == 8.0


def test_bilinear_matches_double_sum(rng):
    grid, form = square_setup(0.25)
    for _ in range(5):
        u = rng.standard_normal(grid.domain.n)
        v = rng.standard_normal(grid.domain.n)
        direct = brute_force_bilinear(grid.kernel, grid.measure, grid.domain, u, v)
        assert abs(bilinear(form, u, v) - direct) <= 1e-12 * max(1.0, abs(direct))


def test_bilinear_dimension_mismatch():
    _, _, _, form = three_node_setup()
    with pytest.raises(DimensionMismatch):
        bilinear(form, np.ones(2), np.ones(3))


def test_apply_L_on_polynomials():
    grid, _ = interval_setup(0.25)
    coords = grid.measure.points[grid.domain.order][:, 0]
    linear = coords.copy()
    quadratic = coords**2
    constant = np.ones(grid.domain.n)
    for x in grid.domain.omega:
        assert abs(apply_L(grid.kernel, grid.domain, linear, x)) <= 1e-12
        assert apply_L(grid.kernel, grid.domain, quadratic, x) == pytest.approx(-2.0)
        assert apply_L(grid.kernel, grid.domain, constant, x) == 0.0
    with pytest.raises(NodeNotInOmega):
        apply_L(grid.kernel, grid.domain, linear, grid.domain.gamma[0])


def test_apply_N_examples():
    measure, kernel, domain, _ = three_node_setup()
    u = np.array([1.0, 0.0, 0.0])  # ordering: 1/2, 0, 1
    assert apply_N(kernel, domain, u, 0) == -4.0
    assert apply_N(kernel, domain, np.ones(3), 0) == 0.0
    with pytest.raises(NodeNotInGamma):
        apply_N(kernel, domain, u, 1)


def test_apply_N_is_scaled_backward_difference():
    grid, _ = interval_setup(0.25)
    coords = grid.measure.points[grid.domain.order][:, 0]
    right_end = grid.measure.locate([1.0])
    value = apply_N(grid.kernel, grid.domain, coords, right_end)
    assert value == pytest.approx(1.0 / 0.25)


def test_ibp_identity_constant_test_function(rng):
    grid, form = square_setup(0.25)
    u = rng.standard_normal(grid.domain.n)
    ones = np.ones(grid.domain.n)
    assert ibp_residual(form, grid.kernel, grid.measure, grid.domain, u, ones) <= 1e-12


def test_ibp_zero():
    _, kernel, domain, form = three_node_setup()
    measure = AtomicMeasure([[0.0], [0.5], [1.0]])
    zero = np.zeros(3)
    assert ibp_residual(form, kernel, measure, domain, zero, zero) == 0.0


def test_ibp_random_pairs(rng):
    grid, form = square_setup(0.25)
    worst = 0.0
    for _ in range(100):
        u = rng.standard_normal(grid.domain.n)
        v = rng.standard_normal(grid.domain.n)
        res = ibp_residual(form, grid.kernel, grid.measure, grid.domain, u, v)
        scale = max(1.0, abs(bilinear(form, u, v)))
        worst = max(worst, res / scale)
    assert worst <= 1e-11


def test_energies_vanish_at_zero():
    _, _, _, form = three_node_setup()
    zero = np.zeros(3)
    assert energy_dirichlet(form, np.zeros(1), zero) == 0.0
    assert energy_neumann(form, np.zeros(1), np.zeros(2), zero) == 0.0


def test_neumann_energy_nonnegative_without_load(rng):
    _, _, _, form = three_node_setup()
    for _ in range(10):
        v = rng.standard_normal(3)
        assert energy_neumann(form, np.zeros(1), np.zeros(2), v) >= 0.0


def test_positive_negative_parts():
    u = np.array([1.0, -2.0, 0.0])
    assert_allclose(positive_part(u), [1.0, 0.0, 0.0])
    assert_allclose(negative_part(u), [0.0, 2.0, 0.0])
    assert_allclose(positive_part(u) - negative_part(u), u)


def test_part_energy_inequalities(rng):
    grid, form = square_setup(0.25)
    for _ in range(20):
        u = rng.standard_normal(grid.domain.n)
        up, um = positive_part(u), negative_part(u)
        b_uu = bilinear(form, u, u)
        assert bilinear(form, up, up) <= b_uu + 1e-12
        assert bilinear(form, um, um) <= b_uu + 1e-12
        assert bilinear(form, u, up) >= bilinear(form, up, up) - 1e-12


def test_norm_sandwich(rng):
    grid, form = square_setup(0.25)
    masses = grid.measure.masses[grid.domain.omega]
    for _ in range(20):
        u = rng.standard_normal(grid.domain.n)
        norm_sq = v_norm_sq(grid.kernel, grid.measure, grid.domain, u)
        middle = float(u[: grid.m] ** 2 @ masses) + bilinear(form, u, u)
        assert 0.5 * norm_sq <= middle + 1e-12 * norm_sq
        assert middle <= norm_sq + 1e-12 * norm_sq
