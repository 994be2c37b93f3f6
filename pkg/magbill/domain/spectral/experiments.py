"""
Spectral Experiments Module
Landau levels, Aharonov-Bohm flux sweeps, Robin and chiral parameter scans,
gauge covariance checks and convergence studies.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, List, Optional, Sequence

import numpy as np
import pandas as pd

from magbill.domain.boundary.conditions import bc_operators, make_bc, transform_bc
from magbill.domain.errors import GeometryError, InadmissiblePotentialError
from magbill.domain.gauge.gauge_function import gauge_function, is_gauge_equivalent
from magbill.domain.gauge.links import link_phases, transform_links
from magbill.domain.gauge.potential import (
    AharonovBohm,
    Landau,
    PhysicalParams,
    PotentialSpec,
    Superposition,
    Symmetric,
)
from magbill.domain.geometry.grid import build_disk
from magbill.domain.operator.hamiltonian import assemble
from magbill.domain.spectral.eigensolver import DEFAULT_TOL, Spectrum, eigs_lowest
from magbill.domain.spectral.oracles import disk_dirichlet_energy, landau_level, magnetic_length

logger = logging.getLogger(__name__)

NONINCREASING_SLACK = 1e-10


def parallel_map(function: Callable, items: Sequence, threads: int = 1) -> list:
    """Order-preserving map; threads > 1 spreads the work over a thread pool."""
    if threads <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(function, items))


@dataclass(frozen=True, eq=False)
class BilliardSetup:
    """Everything an assembly needs except the link field, which is derived."""

    grid: object
    spec: PotentialSpec
    bc: object
    params: PhysicalParams = PhysicalParams()

    @cached_property
    def links(self):
        return link_phases(self.grid, self.spec, self.params)

    def assemble(self, check: bool = True):
        return assemble(self.grid, self.links, self.bc, self.params, check=check)

    def with_spec(self, spec: PotentialSpec) -> "BilliardSetup":
        return replace(self, spec=spec)

    def with_bc(self, bc) -> "BilliardSetup":
        return replace(self, bc=bc)


@dataclass
class SweepResult:
    parameter: str
    values: np.ndarray
    spectra: List[Spectrum]
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.values) <= 0):
            raise ValueError(f"{self.parameter} values must be strictly increasing")

    def levels(self) -> np.ndarray:
        """values x k array of eigenvalues, aligned by sorted index."""
        if not self.spectra:
            return np.zeros((0, 0))
        k = min(s.k for s in self.spectra)
        return np.array([s.eigenvalues[:k] for s in self.spectra])

    def to_frame(self) -> pd.DataFrame:
        """Rows `param_value,index,lambda,residual`."""
        rows = []
        for value, spectrum in zip(self.values, self.spectra):
            for index, (energy, residual) in enumerate(zip(spectrum.eigenvalues, spectrum.residuals)):
                rows.append((float(value), index, float(energy), float(residual)))
        return pd.DataFrame(rows, columns=["param_value", "index", "lambda", "residual"])


def _solve(setup: BilliardSetup, k: int, method: str, tol: float, seed: int) -> Spectrum:
    return eigs_lowest(setup.assemble(), k, method=method, tol=tol, seed=seed)


@dataclass
class GaugeCovarianceReport:
    entry_defect: float
    spectral_discrepancy: float
    link_defect: float
    flux_quanta: List[int]
    spectrum: Spectrum
    transformed_spectrum: Spectrum


def gauge_covariance_check(
    setup: BilliardSetup,
    target: PotentialSpec,
    k: int = 5,
    method: str = "iterative",
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> GaugeCovarianceReport:
    """
    Compare H for setup.spec with the Hamiltonian rebuilt from transformed links
    and the transformed boundary operator.

    entry_defect is max |H' - D H D^dagger| / max |H| with D = diag(U) on the dofs.
    """
    grid, params = setup.grid, setup.params
    chi = gauge_function(setup.spec, target, grid, params=params)
    certificate = is_gauge_equivalent(setup.spec, target, grid, params)
    op = bc_operators(setup.bc, grid.chart, setup.spec, params)
    H = assemble(grid, setup.links, op, params)
    moved_links = transform_links(setup.links, chi)
    H_moved = assemble(grid, moved_links, transform_bc(op, chi, grid.chart), params)

    D = chi.U[H.dofs]
    reference = H.matrix.tocoo()
    expected = reference.copy()
    expected.data = D[reference.row] * reference.data * np.conj(D[reference.col])
    gap = (H_moved.matrix - expected.tocsr()).tocoo()
    scale = max(1.0, float(np.max(np.abs(reference.data), initial=0.0)))
    entry_defect = float(np.max(np.abs(gap.data), initial=0.0)) / scale

    direct = link_phases(grid, target, params)
    link_defect = float(np.max(np.abs(moved_links.values - direct.values), initial=0.0))
    spectrum = eigs_lowest(H, k, method=method, tol=tol, seed=seed)
    moved = eigs_lowest(H_moved, k, method=method, tol=tol, seed=seed)
    discrepancy = float(np.max(np.abs(spectrum.eigenvalues - moved.eigenvalues)))
    logger.info(
        "gauge covariance %s -> %s: entries %.2e, spectra %.2e", setup.spec.name, target.name, entry_defect, discrepancy
    )
    return GaugeCovarianceReport(entry_defect, discrepancy, link_defect, certificate.flux_quanta, spectrum, moved)


@dataclass
class LandauReport:
    B: float
    lowest: float
    expected: float
    deviation: float
    degeneracy: int
    gauge_discrepancy: Optional[float]
    spectrum: Spectrum


def landau_check(
    B: float,
    radius: float,
    resolution: Sequence[int],
    k: int = 6,
    params: PhysicalParams = PhysicalParams(),
    method: str = "iterative",
    tol: float = DEFAULT_TOL,
    window: float = 0.05,
    compare_gauges: bool = True,
    seed: int = 0,
) -> LandauReport:
    """
    Dirichlet disk in a uniform field, lowest level against hbar omega_c / 2.

    Requires magnetic length <= R/8 unless B = 0, where the reference is the
    disk Dirichlet ground state. degeneracy counts eigenvalues within
    `window` (relative) of the reference.
    """
    if B != 0 and magnetic_length(B, params) > radius / 8:
        raise GeometryError(
            f"magnetic length {magnetic_length(B, params):.4f} exceeds R/8 = {radius / 8:.4f}; not bulk dominated"
        )
    grid = build_disk(radius, *resolution)
    setup = BilliardSetup(grid, Symmetric(B), make_bc("dirichlet"), params)
    spectrum = _solve(setup, k, method, tol, seed)
    expected = landau_level(B, 0, params) if B != 0 else disk_dirichlet_energy(radius, params)
    deviation = (spectrum.lowest - expected) / expected
    degeneracy = int(np.sum(np.abs(spectrum.eigenvalues - expected) <= window * expected))
    gauge_discrepancy = None
    if compare_gauges:
        other = _solve(setup.with_spec(Landau(B)), k, method, tol, seed)
        gauge_discrepancy = float(np.max(np.abs(other.eigenvalues - spectrum.eigenvalues)))
    logger.info("Landau B=%g: lowest %.6f vs %.6f (%.3f%%)", B, spectrum.lowest, expected, 100 * deviation)
    return LandauReport(B, spectrum.lowest, expected, deviation, degeneracy, gauge_discrepancy, spectrum)


def _with_flux(spec: PotentialSpec, phi: float) -> PotentialSpec:
    others = tuple(part for part in spec.parts() if not isinstance(part, AharonovBohm))
    if not others:
        return AharonovBohm(phi)
    return Superposition(others + (AharonovBohm(phi),))


def periodicity_errors(result: SweepResult, period: float) -> List[float]:
    """Max level difference between sweep points one period apart."""
    levels = result.levels()
    errors = []
    for i, value in enumerate(result.values):
        match = np.flatnonzero(np.isclose(result.values, value + period, rtol=0, atol=1e-12 * max(1.0, period)))
        if len(match):
            errors.append(float(np.max(np.abs(levels[match[0]] - levels[i]))))
    return errors


def flux_sweep(
    setup: BilliardSetup,
    fluxes: Sequence[float],
    k: int = 6,
    method: str = "iterative",
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    threads: int = 1,
) -> SweepResult:
    """Spectra over Aharonov-Bohm fluxes through the hole of an annulus."""
    if setup.grid.kind != "annulus":
        raise InadmissiblePotentialError(f"flux sweeps need an annulus, got a {setup.grid.kind} grid")
    setups = [setup.with_spec(_with_flux(setup.spec, phi)) for phi in fluxes]
    spectra = parallel_map(lambda s: _solve(s, k, method, tol, seed), setups, threads)
    result = SweepResult("phi", fluxes, spectra)
    quantum = setup.params.flux_quantum()
    errors = periodicity_errors(result, quantum)
    result.diagnostics["flux_quantum"] = quantum
    result.diagnostics["periodicity_error"] = max(errors) if errors else None
    levels = result.levels()
    if len(levels) > 1:
        result.diagnostics["max_level_shift"] = float(np.max(np.abs(levels - levels[0])))
    return result


def robin_sweep(
    setup: BilliardSetup,
    alphas: Sequence[float],
    k: int = 4,
    method: str = "iterative",
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    threads: int = 1,
) -> SweepResult:
    """
    Spectra over constant Robin parameters.

    Diagnostics: the alpha = 0 assembly against the Neumann one (bitwise),
    whether lambda_1 is nonincreasing in alpha, and the relative gap between
    lambda_1 at the smallest alpha and the Dirichlet lambda_1.
    """
    setups = [setup.with_bc(make_bc("robin", alpha)) for alpha in alphas]
    spectra = parallel_map(lambda s: _solve(s, k, method, tol, seed), setups, threads)
    result = SweepResult("alpha", alphas, spectra)
    lowest = result.levels()[:, 0] if spectra else np.zeros(0)
    result.diagnostics["nonincreasing"] = bool(np.all(np.diff(lowest) <= NONINCREASING_SLACK))
    result.diagnostics["neumann_identical"] = robin_matches_neumann(setup)
    dirichlet = _solve(setup.with_bc(make_bc("dirichlet")), 1, method, tol, seed).lowest
    result.diagnostics["dirichlet_lowest"] = dirichlet
    if len(lowest):
        result.diagnostics["dirichlet_relative_gap"] = abs(lowest[0] - dirichlet) / abs(dirichlet)
    return result


def robin_matches_neumann(setup: BilliardSetup) -> bool:
    robin = setup.with_bc(make_bc("robin", 0.0)).assemble()
    neumann = setup.with_bc(make_bc("neumann")).assemble()
    if robin.stiffness.shape != neumann.stiffness.shape or not np.array_equal(robin.dofs, neumann.dofs):
        return False
    return (robin.stiffness != neumann.stiffness).nnz == 0


def chiral_sweep(
    setup: BilliardSetup,
    betas: Sequence[float],
    alpha: float = 0.0,
    k: int = 4,
    method: str = "iterative",
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    threads: int = 1,
    negative_threshold: float = -100.0,
) -> SweepResult:
    """
    Chiral spectra as beta grows, on polar grids only.

    Records the lowest eigenvalue per beta and flags values below
    negative_threshold; no acceptance bound is applied.
    """
    if not setup.grid.is_polar:
        raise GeometryError("chiral sweeps run on disks and annuli only")
    setups = [setup.with_bc(make_bc("chiral", alpha, beta)) for beta in betas]
    spectra = parallel_map(lambda s: _solve(s, k, method, tol, seed), setups, threads)
    result = SweepResult("beta", betas, spectra)
    lowest = [float(s.lowest) for s in spectra]
    result.diagnostics["lowest"] = lowest
    result.diagnostics["large_negative"] = [value < negative_threshold for value in lowest]
    if any(result.diagnostics["large_negative"]):
        logger.warning("chiral spectrum drops below %g for some beta", negative_threshold)
    return result


@dataclass
class ConvergenceTable:
    resolutions: np.ndarray
    eigenvalues: np.ndarray
    errors: np.ndarray
    orders: np.ndarray
    reference: Optional[float]
    monotone: bool

    def to_frame(self) -> pd.DataFrame:
        orders = np.full(len(self.resolutions), np.nan)
        orders[1:1 + len(self.orders)] = self.orders
        return pd.DataFrame(
            {
                "resolution": self.resolutions,
                "lambda": self.eigenvalues,
                "error": self.errors,
                "order": orders,
            }
        )


def convergence_study(
    factory: Callable[[int], object],
    resolutions: Sequence[int],
    reference: Optional[float] = None,
    index: int = 0,
    method: str = "iterative",
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    threads: int = 1,
) -> ConvergenceTable:
    """
    Observed order of the index-th eigenvalue under refinement.

    factory(resolution) returns a Hamiltonian. With a reference the errors are
    |lambda - reference|; without one, successive differences are used
    (Richardson), which yields one order fewer.
    """
    resolutions = np.asarray(resolutions, dtype=float)
    if len(resolutions) < 3:
        raise ValueError("a convergence study needs at least three resolutions")
    ratios = resolutions[1:] / resolutions[:-1]
    if np.any(ratios <= 1) or not np.allclose(ratios, ratios[0], rtol=1e-9):
        raise ValueError("resolutions must form an increasing geometric progression")

    def level(resolution):
        return eigs_lowest(factory(int(resolution)), index + 1, method=method, tol=tol, seed=seed).eigenvalues[index]

    values = np.array(parallel_map(level, list(resolutions), threads))
    if reference is not None:
        errors = np.abs(values - reference)
    else:
        errors = np.concatenate([np.abs(np.diff(values)), [np.nan]])
    finite = errors[np.isfinite(errors)]
    orders = np.log(finite[:-1] / finite[1:]) / np.log(ratios[0])
    monotone = bool(np.all(np.diff(finite) < 0))
    if not monotone:
        logger.warning("error sequence %s is not monotone", finite)
    return ConvergenceTable(resolutions, values, errors, orders, reference, monotone)
