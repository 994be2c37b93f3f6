import numpy as np
import pytest

from magbill.domain.boundary.conditions import (
    BulkToBoundaryOp,
    alpha_expression,
    bc_operators,
    bc_residual,
    make_bc,
    sample_alpha,
    tangential_difference,
    transform_bc,
)
from magbill.domain.boundary.traces import BoundaryVector, covariant_normal_derivative, trace
from magbill.domain.errors import BoundaryConditionError, DimensionMismatchError
from magbill.domain.gauge.gauge_function import apply_gauge, gauge_function
from magbill.domain.gauge.links import link_phases, transform_links
from magbill.domain.gauge.potential import Landau, Symmetric
from magbill.domain.geometry.chart import BoundaryChart, circle_component


def _ring(n=4, radius=2 / np.pi):
    theta = 2 * np.pi * np.arange(n) / n
    component = circle_component("outer", radius, theta, np.arange(n), np.arange(n) + n, 0.1, hole=False)
    return BoundaryChart((component,))


def test_trace_reads_boundary_nodes_on_rectangles(unit_square):
    psi = unit_square.x + 2 * unit_square.y
    gamma = trace(unit_square, psi)
    chart = unit_square.chart
    assert np.allclose(gamma.values, chart.positions[:, 0] + 2 * chart.positions[:, 1])


def test_normal_derivative_is_exact_for_quadratics(unit_square):
    psi = unit_square.x ** 2 + 2 * unit_square.y
    dot = covariant_normal_derivative(unit_square, None, psi)
    chart = unit_square.chart
    gradient = np.column_stack([2 * chart.positions[:, 0], np.full(chart.size, 2.0)])
    assert np.allclose(dot.values, np.sum(gradient * chart.normal, axis=1), atol=1e-11)


def test_polar_trace_and_derivative_of_r_squared(small_disk):
    psi = small_disk.x ** 2 + small_disk.y ** 2
    links = link_phases(small_disk, Symmetric(1.5))
    dr = small_disk.spacing[0]
    assert np.allclose(trace(small_disk, psi, links).values, 1.0 + dr ** 2 / 4)
    assert np.allclose(covariant_normal_derivative(small_disk, links, psi).values, 2.0)


def test_trace_checks_state_length(unit_square):
    with pytest.raises(DimensionMismatchError):
        trace(unit_square, np.zeros(5))


@pytest.mark.parametrize("fixture", ["unit_square", "small_disk"])
def test_trace_and_derivative_are_gauge_covariant(fixture, request, rng):
    grid = request.getfixturevalue(fixture)
    chi = gauge_function(Landau(2.0), Symmetric(2.0), grid)
    links = link_phases(grid, Landau(2.0))
    moved = transform_links(links, chi)
    psi = rng.normal(size=grid.n_nodes) + 1j * rng.normal(size=grid.n_nodes)
    u = chi.U[grid.chart.anchor]
    assert np.allclose(trace(grid, apply_gauge(psi, chi), moved).values, u * trace(grid, psi, links).values)
    assert np.allclose(
        covariant_normal_derivative(grid, moved, apply_gauge(psi, chi)).values,
        u * covariant_normal_derivative(grid, links, psi).values,
    )


def test_boundary_vector_components(small_annulus):
    chart = small_annulus.chart
    vector = BoundaryVector(np.arange(chart.size, dtype=complex), chart)
    assert np.array_equal(vector.component(1), np.arange(16, 32))
    assert np.asarray(vector).shape == (32,)
    with pytest.raises(DimensionMismatchError):
        BoundaryVector(np.zeros(3), chart)


def test_make_bc_validation():
    assert make_bc("Neumann", alpha=3.0).alpha is None
    assert make_bc("robin", alpha=2).describe() == "robin(alpha=2.0)"
    assert make_bc("chiral", 1.0, -0.5).describe() == "chiral(alpha=1.0, beta=-0.5)"
    for kind, alpha, beta in [
        ("cauchy", None, None),
        ("robin", None, None),
        ("robin", np.inf, None),
        ("robin", "one", None),
        ("chiral", 1.0, None),
        ("chiral", 1.0, np.nan),
    ]:
        with pytest.raises(BoundaryConditionError):
            make_bc(kind, alpha, beta)


def test_alpha_profiles():
    bc = make_bc("robin", alpha_expression("cos_perimeter", 4.0))
    assert np.allclose(sample_alpha(bc, np.array([0.0, 1.0, 2.0])), [1.0, 0.0, -1.0])
    assert make_bc("robin", alpha_expression("sin_perimeter", 4.0)).describe() == "robin(alpha=sin_perimeter)"
    with pytest.raises(BoundaryConditionError):
        alpha_expression("tan_perimeter", 4.0)
    with pytest.raises(BoundaryConditionError):
        sample_alpha(make_bc("robin", lambda s: 1j * s), np.array([0.5]))


def test_dirichlet_and_neumann_operators(unit_square):
    chart = unit_square.chart
    dirichlet = bc_operators(make_bc("dirichlet"), chart)
    assert np.array_equal(dirichlet.T1, np.eye(chart.size))
    assert not dirichlet.T2.any()
    assert dirichlet.tag == "dirichlet|gauge=none"
    assert dirichlet.dirichlet_rows.all()
    neumann = bc_operators(make_bc("neumann"), chart)
    assert not neumann.T1.any()
    assert np.array_equal(neumann.T2, np.eye(chart.size))


def test_robin_operator_is_diagonal(small_disk):
    op = bc_operators(make_bc("robin", -3.0), small_disk.chart, Landau(1.0))
    assert np.array_equal(op.T1, -3.0 * np.eye(16))
    assert op.tag == "robin(alpha=-3.0)|gauge=landau"


def test_tangential_difference_on_a_ring():
    (component,) = _ring().components
    assert np.allclose(component.ds, 1.0)
    expected = 0.5 * np.array([[0, 1, 0, -1], [-1, 0, 1, 0], [0, -1, 0, 1], [1, 0, -1, 0]])
    assert np.allclose(tangential_difference(component), expected)


def test_chiral_operator_on_a_ring():
    chart = _ring()
    op = bc_operators(make_bc("chiral", 1.0, 2.0), chart)
    assert np.allclose(np.diag(op.T1), 1.0)
    assert op.T1[0, 1] == pytest.approx(1j)
    assert op.T1[0, 3] == pytest.approx(-1j)
    assert op.hermiticity_defect() < 1e-15
    radius = 2 / np.pi
    shifted = bc_operators(make_bc("chiral", 1.0, 2.0), chart, Symmetric(3.0))
    assert np.allclose(np.diag(shifted.T1), 1.0 + 2.0 * 3.0 * radius / 2)


def test_wrong_number_of_component_conditions(small_annulus):
    with pytest.raises(BoundaryConditionError):
        bc_operators([make_bc("dirichlet")], small_annulus.chart)


def test_per_component_conditions(small_annulus):
    op = bc_operators([make_bc("dirichlet"), make_bc("neumann")], small_annulus.chart)
    assert np.array_equal(np.diag(op.T2).real, np.r_[np.zeros(16), np.ones(16)])
    assert op.tag == "dirichlet+neumann|gauge=none"


def test_operator_validation():
    ds = np.ones(3)
    eye = np.eye(3, dtype=complex)
    with pytest.raises(BoundaryConditionError):
        BulkToBoundaryOp(eye, 2 * eye, ds)
    with pytest.raises(BoundaryConditionError):
        BulkToBoundaryOp(2 * eye, np.diag([0, 1, 1]).astype(complex), ds)
    skew = np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]], dtype=complex)
    with pytest.raises(BoundaryConditionError):
        BulkToBoundaryOp(skew, eye, ds)
    with pytest.raises(DimensionMismatchError):
        BulkToBoundaryOp(np.eye(2), eye, ds)


def test_bc_residual(unit_square):
    op = bc_operators(make_bc("robin", 2.0), unit_square.chart)
    n = op.size
    assert bc_residual(op, np.ones(n), 2 * np.ones(n)) == 0.0
    assert bc_residual(op, np.ones(n), np.zeros(n)) == 2.0
    with pytest.raises(DimensionMismatchError):
        bc_residual(op, np.ones(n - 1), np.ones(n - 1))


def test_transform_leaves_real_diagonal_conditions_alone(unit_square):
    chi = gauge_function(Landau(1.0), Symmetric(1.0), unit_square)
    op = bc_operators(make_bc("robin", 0.7), unit_square.chart, Landau(1.0))
    moved = transform_bc(op, chi, unit_square.chart)
    assert np.allclose(moved.T1, op.T1)
    assert np.array_equal(moved.T2, op.T2)
    assert moved.tag.endswith("|transformed")


def test_transform_bc_checks_sizes(unit_square, small_disk):
    chi = gauge_function(Landau(1.0), Symmetric(1.0), unit_square)
    op = bc_operators(make_bc("dirichlet"), small_disk.chart)
    with pytest.raises(DimensionMismatchError):
        transform_bc(op, chi, unit_square.chart)


def test_boundary_residual_is_gauge_invariant(small_disk, rng):
    chart = small_disk.chart
    spec = Symmetric(1.0)
    chi = gauge_function(spec, Landau(1.0), small_disk)
    links = link_phases(small_disk, spec)
    moved_links = transform_links(links, chi)
    op = bc_operators(make_bc("chiral", 0.5, 0.8), chart, spec)
    moved_op = transform_bc(op, chi, chart)
    assert moved_op.hermiticity_defect() < 1e-12
    psi = rng.normal(size=small_disk.n_nodes) + 1j * rng.normal(size=small_disk.n_nodes)
    before = op.apply(trace(small_disk, psi, links).values, covariant_normal_derivative(small_disk, links, psi).values)
    phi = apply_gauge(psi, chi)
    after = moved_op.apply(
        trace(small_disk, phi, moved_links).values,
        covariant_normal_derivative(small_disk, moved_links, phi).values,
    )
    assert np.allclose(after, chi.U[chart.anchor] * before)
