import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from magbill.api.selfadjoint1d.interval_api import gauge_away_spectra, robin_profile, scalar_family_spectra
from magbill.domain.errors import (
    BoundaryConditionError,
    CayleyError,
    DimensionMismatchError,
    HermitianInputError,
    UnitarityError,
)
from magbill.domain.gauge.potential import PhysicalParams
from magbill.domain.operator.hamiltonian import hermiticity_defect
from magbill.domain.selfadjoint1d.interval import (
    IntervalGrid,
    gauge_away_1d,
    ghost_map,
    interval_boundary_form,
    interval_hamiltonian,
    interval_spectrum,
)
from magbill.domain.selfadjoint1d.unitary import (
    CayleyOperator,
    UnitaryBC,
    bc_from_unitary,
    cayley,
    inverse_cayley,
    kernel_probe,
    kernels_differ,
    random_unitary,
    scalar_cayley_value,
    scalar_unitary,
    unitary_residual,
)
from magbill.domain.spectral.eigensolver import spectral_realness
from magbill.domain.spectral.oracles import robin_interval_energies

PARAMS = PhysicalParams()


def _sine_potential(x):
    return 0.7 + 0.3 * np.sin(x)


def test_identity_is_dirichlet():
    spectrum = interval_spectrum(UnitaryBC(np.eye(2)), None, np.pi, 400, k=3, method="dense")
    assert np.allclose(spectrum.eigenvalues, [0.5, 2.0, 4.5], rtol=1e-3)


def test_minus_identity_is_neumann():
    spectrum = interval_spectrum(UnitaryBC(-np.eye(2)), None, np.pi, 400, k=3, method="dense")
    assert spectrum.eigenvalues[0] == pytest.approx(0.0, abs=1e-9)
    assert np.allclose(spectrum.eigenvalues[1:], [0.5, 2.0], rtol=1e-3)


def test_unitary_pair():
    T1, T2 = bc_from_unitary(np.diag([1.0, -1.0]))
    assert np.allclose(T1, np.diag([2j, 0]))
    assert np.allclose(T2, np.diag([0, 2]))


@pytest.mark.parametrize("theta", np.linspace(0.3, 2 * np.pi - 0.3, 10))
def test_scalar_cayley_transform(theta):
    L = cayley(scalar_unitary(theta)).L
    assert np.allclose(L, scalar_cayley_value(theta) * np.eye(2), atol=1e-10)


def test_cayley_is_undefined_at_the_identity():
    with pytest.raises(CayleyError):
        cayley(np.eye(2))
    with pytest.raises(CayleyError):
        cayley(np.diag([1.0, -1.0]))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2 ** 31))
def test_cayley_round_trip(seed):
    U = random_unitary(2, seed=seed)
    assume(np.linalg.svd(np.eye(2) - U.U, compute_uv=False).min() > 1e-3)
    L = cayley(U)
    assert np.allclose(L.L, L.L.conj().T)
    assert np.allclose(inverse_cayley(L).U, U.U, atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(
    entries=st.lists(st.floats(min_value=-10, max_value=10), min_size=3, max_size=3),
    coupling=st.floats(min_value=-10, max_value=10),
)
def test_inverse_cayley_round_trip(entries, coupling):
    a, d, c = entries
    L = np.array([[a, coupling + 1j * c], [coupling - 1j * c, d]])
    U = inverse_cayley(L)
    assert np.allclose(U.U.conj().T @ U.U, np.eye(2), atol=1e-12)
    assert np.allclose(cayley(U).L, L, atol=1e-7 * max(1.0, np.abs(L).max() ** 2))


def test_input_validation():
    with pytest.raises(UnitarityError):
        UnitaryBC(2 * np.eye(2))
    with pytest.raises(HermitianInputError):
        CayleyOperator(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        UnitaryBC(np.ones((2, 3)))
    with pytest.raises(DimensionMismatchError):
        interval_hamiltonian(UnitaryBC(np.eye(3)), None, np.pi, 200)
    with pytest.raises(ValueError):
        IntervalGrid(np.pi, 50)
    with pytest.raises(BoundaryConditionError):
        ghost_map(np.eye(2), 0.01)


def test_kernel_probes_satisfy_their_own_condition():
    U = random_unitary(2, seed=11)
    for xi in (np.array([1.0, 0.0]), np.array([0.3, -0.2j])):
        psi, psi_dot = kernel_probe(U, xi)
        assert unitary_residual(U, psi, psi_dot) < 1e-13


def test_distinct_unitaries_have_distinct_kernels():
    U = random_unitary(2, seed=5)
    assert not kernels_differ(U, U)
    assert kernels_differ(np.eye(2), -np.eye(2))
    assert kernels_differ(scalar_unitary(0.4), scalar_unitary(0.5))


def test_interval_grid_layout():
    grid = IntervalGrid(1.0, 100)
    assert grid.h == pytest.approx(0.01)
    assert grid.positions[0] == pytest.approx(0.005)
    assert grid.positions[grid.n] == pytest.approx(-0.005)
    assert grid.positions[grid.n + 1] == pytest.approx(1.005)
    assert list(grid.anchors) == [0, 99]


def test_interval_operator_is_hermitian_with_real_spectrum():
    H = interval_hamiltonian(random_unitary(2, seed=1), _sine_potential, np.pi, 100)
    assert hermiticity_defect(H) <= 1e-12 * np.abs(H.weighted).max()
    assert spectral_realness(H) < 1e-9


def test_unitary_and_cayley_forms_agree():
    U = random_unitary(2, seed=7)
    by_u = interval_hamiltonian(U, _sine_potential, np.pi, 200)
    by_l = interval_hamiltonian(cayley(U), _sine_potential, np.pi, 200)
    scale = np.abs(by_u.matrix).max()
    assert np.abs(by_u.matrix - by_l.matrix).max() <= 1e-10 * scale


def test_scalar_family_spectra_agree_in_both_forms():
    results = scalar_family_spectra([0.0, np.pi / 2, np.pi], np.pi, 200, 3, PARAMS, method="dense")
    assert results[0][2] is None
    assert np.allclose(results[0][1].eigenvalues, [0.5, 2.0, 4.5], rtol=1e-3)
    for theta, by_u, by_l in results[1:]:
        assert np.allclose(by_u.eigenvalues, by_l.eigenvalues, atol=1e-8)


def test_potential_can_be_gauged_away():
    U = random_unitary(2, seed=3)
    original, gauged = gauge_away_spectra(U, _sine_potential, np.pi, 200, 4, PARAMS, method="dense")
    assert np.allclose(original.eigenvalues, gauged.eigenvalues, atol=1e-8)


def test_gauge_function_of_a_constant_potential():
    chi = gauge_away_1d(lambda x: 2.0)
    x = np.array([0.0, 0.5, 1.5])
    assert np.allclose(chi.chi(x), 2.0 * x)
    assert np.allclose(chi.U(x), np.exp(-2j * x))
    assert np.allclose(chi.grad(x), 2.0)


@pytest.mark.parametrize("alpha", [-3.0, 0.5, 1.0])
def test_robin_interval_matches_the_root_scan(alpha):
    spectrum = interval_spectrum(CayleyOperator(alpha * np.eye(2)), None, np.pi, 2000, k=3)
    expected = robin_interval_energies(alpha, np.pi, 3)
    assert np.allclose(spectrum.eigenvalues, expected, rtol=1e-3, atol=1e-4)


def test_positive_robin_parameter_binds_two_states():
    spectrum = interval_spectrum(CayleyOperator(np.eye(2)), None, np.pi, 1000, k=3)
    assert np.sum(spectrum.eigenvalues < 0) == 2


@pytest.mark.parametrize("alpha, peaked_at_ends", [(2.0, True), (-2.0, False)])
def test_robin_ground_state_profile(alpha, peaked_at_ends):
    profile = robin_profile(alpha, 1.0, 400, PARAMS)
    assert list(profile.columns) == ["x", "re", "im"]
    assert len(profile) == 400
    assert np.allclose(profile["im"], 0.0, atol=1e-10)
    h = 2.0 / 400
    assert np.sum(h * (profile["re"] ** 2 + profile["im"] ** 2)) == pytest.approx(1.0)
    ends, centre = profile["re"].iloc[0], profile["re"].iloc[200]
    assert (ends > centre) == peaked_at_ends
    assert profile["re"].iloc[0] == pytest.approx(profile["re"].iloc[-1], rel=1e-8)


def test_boundary_form_vanishes_on_the_domain(rng):
    n = 150
    H = interval_hamiltonian(random_unitary(2, seed=9), _sine_potential, np.pi, n)
    psi = H.to_bulk(rng.normal(size=n) + 1j * rng.normal(size=n))
    phi = H.to_bulk(rng.normal(size=n) + 1j * rng.normal(size=n))
    form = interval_boundary_form(_sine_potential, np.pi, n, psi, phi)
    scale = np.linalg.norm(psi) * np.linalg.norm(phi) * n / np.pi
    assert abs(form) < 1e-10 * scale


def test_boundary_form_checks_sizes():
    with pytest.raises(DimensionMismatchError):
        interval_boundary_form(None, np.pi, 100, np.zeros(100), np.zeros(100))
