"""
Experiment Runner Module
Executes one configured experiment, evaluates its property checks and writes
the CSV artifacts plus a run manifest (also when the experiment fails).
"""
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from scipy.sparse.linalg import norm as sparse_norm

import magbill
from magbill.api.selfadjoint1d.interval_api import gauge_away_spectra, scalar_family_spectra
from magbill.api.spectral.solve_api import check_gauge_covariance, solve_billiard
from magbill.api.spectral.sweep_api import check_landau, study_convergence, sweep_chiral, sweep_flux, sweep_robin
from magbill.domain.boundary.conditions import alpha_expression, make_bc
from magbill.domain.errors import MagbillError
from magbill.domain.gauge.links import link_table
from magbill.domain.gauge.potential import (
    Landau,
    PhysicalParams,
    Superposition,
    Symmetric,
    TabulatedPerturbation,
    make_potential,
)
from magbill.domain.geometry.grid import build_grid
from magbill.domain.operator.hamiltonian import hermiticity_defect
from magbill.domain.selfadjoint1d.interval import interval_hamiltonian, interval_spectrum
from magbill.domain.selfadjoint1d.unitary import UnitaryBC, cayley, scalar_cayley_value, scalar_unitary
from magbill.domain.spectral.eigensolver import spectral_realness
from magbill.domain.spectral.experiments import BilliardSetup, SweepResult, periodicity_errors
from magbill.domain.spectral.oracles import disk_dirichlet_energy, rectangle_dirichlet_energies
from magbill.pipeline.config import ExperimentConfig
from magbill.pipeline.emit import emit_csv, emit_manifest

logger = logging.getLogger(__name__)

BANNER = "=" * 70
HERMITIAN_TOL = 1e-12
REALNESS_TOL = 1e-9
REALNESS_DIM = 1500
COVARIANCE_ENTRY_TOL = 1e-13
SPECTRAL_TOL = 1e-9
HALF_FLUX_GAP = 1e-4
ORDER_RANGE = (1.7, 2.3)
LANDAU_WINDOW = 0.02
CAYLEY_TOL = 1e-10
MONOTONE_SLACK = 1e-9


@dataclass
class Check:
    value: object
    passed: bool


@dataclass
class RunManifest:
    """Config echo, code version, grid hash, status, timing, tolerances and per-property results."""

    experiment: str
    config: Dict[str, object] = field(default_factory=dict)
    version: str = magbill.__version__
    grid_hash: Optional[str] = None
    status: str = "running"
    error: Optional[str] = None
    wall_clock: float = 0.0
    tolerances: Dict[str, float] = field(default_factory=dict)
    checks: Dict[str, Check] = field(default_factory=dict)
    info: Dict[str, object] = field(default_factory=dict)
    artifacts: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.status == "passed"

    def record(self, name: str, value, passed: bool) -> None:
        self.checks[name] = Check(value, bool(passed))
        logger.info("check %-28s %-24s %s", name, value, "PASS" if passed else "FAIL")

    def entries(self) -> Dict[str, object]:
        lines: Dict[str, object] = {
            "status": self.status,
            "experiment": self.experiment,
            "version": self.version,
            "grid_hash": self.grid_hash or "none",
            "wall_clock": round(self.wall_clock, 3),
        }
        if self.error is not None:
            lines["error"] = self.error
        for name, value in self.tolerances.items():
            lines[f"tolerance.{name}"] = value
        for name, check in self.checks.items():
            lines[f"check.{name}"] = f"{_plain(check.value)} {'PASS' if check.passed else 'FAIL'}"
        for name, value in self.info.items():
            lines[f"info.{name}"] = value
        if self.artifacts:
            lines["artifacts"] = list(self.artifacts)
        for name, value in self.config.items():
            lines[f"config.{name}"] = value
        return lines


def _plain(value) -> str:
    if isinstance(value, (float, np.floating)):
        return "%.6e" % value
    return str(value)


def _spectrum_frame(values, spectra) -> pd.DataFrame:
    return SweepResult("value", values, list(spectra)).to_frame()


class ExperimentRunner:
    """
    Runs the experiment named by config.kind.

    Each `_run_<kind>` method records property checks on the manifest and
    emits its tables; `run` writes the manifest whatever happens.
    """

    def __init__(self, config: ExperimentConfig, out_dir: Optional[str] = None, threads: int = 1,
                 seed: Optional[int] = None):
        self.config = config
        self.out_dir = out_dir or config.output.directory
        self.threads = max(1, int(threads))
        self.seed = config.solver.seed if seed is None else int(seed)
        self.params = PhysicalParams(config.physics.hbar, config.physics.e, config.physics.m)
        self.manifest = RunManifest(experiment=config.kind, config=config.echo())
        self.manifest.tolerances = {"solver": config.solver.tol, "hermiticity": HERMITIAN_TOL}

    @property
    def solver(self) -> dict:
        return {"method": self.config.solver.method, "tol": self.config.solver.tol, "seed": self.seed}

    def run(self) -> RunManifest:
        started = time.perf_counter()
        logger.info(BANNER)
        logger.info("EXPERIMENT: %s", self.config.kind.upper())
        logger.info(BANNER)
        try:
            getattr(self, f"_run_{self.config.kind}")()
            failed = [name for name, check in self.manifest.checks.items() if not check.passed]
            self.manifest.status = "failed" if failed else "passed"
            if failed:
                self.manifest.error = "property checks failed: " + ", ".join(failed)
        except (MagbillError, ValueError, ArithmeticError) as exc:
            logger.error("%s failed: %s", self.config.kind, exc)
            self.manifest.status = "failed"
            self.manifest.error = f"{type(exc).__name__}: {exc}"
        except Exception as exc:
            logger.exception("%s crashed", self.config.kind)
            self.manifest.status = "failed"
            self.manifest.error = f"{type(exc).__name__}: {exc}"
            raise
        finally:
            self.manifest.wall_clock = time.perf_counter() - started
            self.write_manifest()
        logger.info("%s %s in %.2fs", self.config.kind, self.manifest.status.upper(), self.manifest.wall_clock)
        return self.manifest

    def write_manifest(self) -> str:
        path = os.path.join(self.out_dir, "manifest.txt")
        emit_manifest(self.manifest, path)
        return path

    def emit(self, name: str, table: pd.DataFrame, fmt: str = "csv") -> None:
        if fmt not in self.config.output.formats:
            return
        path = os.path.join(self.out_dir, f"{name}.csv")
        emit_csv(table, path)
        self.manifest.artifacts.append(os.path.basename(path))

    # ---- building blocks -------------------------------------------------

    def grid(self, **overrides):
        dimensions = self.config.domain.dimensions()
        dimensions.update(overrides)
        grid = build_grid(self.config.domain.kind, **dimensions)
        self.manifest.grid_hash = grid.fingerprint()
        return grid

    def potential(self):
        g = self.config.gauge
        return make_potential(g.gauge, g.B, g.phi)

    def _condition(self, family, alpha, beta, perimeter):
        if isinstance(alpha, str):
            alpha = alpha_expression(alpha, perimeter)
        return make_bc(family, alpha, beta)

    def boundary_condition(self, grid):
        c = self.config.bc
        outer = self._condition(c.bc, c.alpha, c.beta, grid.chart.perimeter)
        if c.inner_bc is None:
            return outer
        inner = self._condition(c.inner_bc, c.inner_alpha, c.inner_beta, grid.chart.perimeter)
        return [outer, inner]

    def setup(self, grid=None, bc=None) -> BilliardSetup:
        grid = grid if grid is not None else self.grid()
        bc = bc if bc is not None else self.boundary_condition(grid)
        return BilliardSetup(grid, self.potential(), bc, self.params)

    def _dump(self, setup: BilliardSetup, H) -> None:
        self.emit("nodes", setup.grid.node_table(), "dump")
        self.emit("links", link_table(setup.links), "dump")
        self.emit("matrix", H.triplets(), "dump")
        self.emit("weights", H.weight_table(), "dump")

    def _hermiticity(self, H, name: str = "hermiticity_defect") -> None:
        defect = hermiticity_defect(H)
        scale = max(1.0, float(np.max(np.abs(H.weighted.data), initial=0.0)))
        self.manifest.record(name, defect / scale, defect <= HERMITIAN_TOL * scale)

    def _realness(self, H, name: str = "max_imag_eigenvalue") -> None:
        if H.dim > REALNESS_DIM:
            self.manifest.info[name] = f"skipped (dimension {H.dim} > {REALNESS_DIM})"
            return
        imag = spectral_realness(H)
        self.manifest.record(name, imag, imag <= REALNESS_TOL)

    # ---- experiments -----------------------------------------------------

    def _run_solve(self) -> None:
        setup = self.setup()
        H = setup.assemble()
        self._hermiticity(H)
        self._realness(H)
        spectrum = solve_billiard(setup, self.config.solver.k, **self.solver)
        limit = self.config.solver.tol * max(1.0, float(sparse_norm(H.symmetrized(), 1)))
        self.manifest.record("max_residual", float(spectrum.residuals.max()), spectrum.residuals.max() <= limit)
        self.manifest.info["dimension"] = H.dim
        self.emit("eigenvalues", _spectrum_frame([0.0], [spectrum]))
        self._dump(setup, H)

        family = self.config.bc.bc
        if self.config.bc.inner_bc is None and family in ("dirichlet", "neumann"):
            other = "neumann" if family == "dirichlet" else "dirichlet"
            partner = solve_billiard(setup.with_bc(make_bc(other)), self.config.solver.k, **self.solver)
            dirichlet, neumann = (spectrum, partner) if family == "dirichlet" else (partner, spectrum)
            gap = float(np.min(dirichlet.eigenvalues - neumann.eigenvalues))
            slack = MONOTONE_SLACK * max(1.0, float(np.abs(dirichlet.eigenvalues).max()))
            self.manifest.record("dirichlet_above_neumann", gap, gap >= -slack)

    def _comparison_target(self, setup: BilliardSetup):
        g = self.config.gauge
        if g.compare == "landau":
            return Landau(g.B)
        if g.compare == "symmetric":
            return Symmetric(g.B)
        rng = np.random.default_rng(self.seed)
        perturbation = TabulatedPerturbation.random(rng, g.perturbation, setup.grid.size)
        return Superposition((setup.spec, perturbation))

    def _run_gauge_check(self) -> None:
        setup = self.setup()
        target = self._comparison_target(setup)
        report = check_gauge_covariance(setup, target, self.config.solver.k, **self.solver)
        self.manifest.tolerances["entrywise"] = COVARIANCE_ENTRY_TOL
        self.manifest.tolerances["spectral"] = SPECTRAL_TOL
        self.manifest.record("entry_defect", report.entry_defect, report.entry_defect <= COVARIANCE_ENTRY_TOL)
        self.manifest.record(
            "spectral_discrepancy", report.spectral_discrepancy, report.spectral_discrepancy < SPECTRAL_TOL
        )
        self.manifest.info["link_defect"] = report.link_defect
        self.manifest.info["flux_quanta"] = report.flux_quanta
        self.manifest.info["target"] = target.name
        table = pd.DataFrame(
            {
                "index": np.arange(report.spectrum.k),
                "lambda": report.spectrum.eigenvalues,
                "lambda_transformed": report.transformed_spectrum.eigenvalues,
            }
        )
        table["difference"] = table["lambda_transformed"] - table["lambda"]
        self.emit("gauge_check", table)
        self.emit("eigenvalues", _spectrum_frame([0.0], [report.spectrum]))

    def _run_flux_sweep(self) -> None:
        setup = self.setup()
        result = sweep_flux(setup, self.config.sweep.values, self.config.solver.k, threads=self.threads, **self.solver)
        quantum = result.diagnostics["flux_quantum"]
        self.manifest.info["flux_quantum"] = quantum
        self.manifest.info["max_level_shift"] = result.diagnostics.get("max_level_shift", 0.0)
        periodicity = result.diagnostics["periodicity_error"]
        if periodicity is not None:
            self.manifest.record("periodicity_error", periodicity, periodicity <= SPECTRAL_TOL)
        half = periodicity_errors(result, quantum / 2)
        if half:
            self.manifest.record("half_quantum_shift", max(half), max(half) > HALF_FLUX_GAP)
        self.emit("eigenvalues", result.to_frame())
        self.emit("sweep", self._sweep_table(result))

    def _run_robin_sweep(self) -> None:
        setup = self.setup(bc=make_bc("neumann"))
        result = sweep_robin(setup, self.config.sweep.values, self.config.solver.k, threads=self.threads, **self.solver)
        d = result.diagnostics
        self.manifest.record("robin_zero_is_neumann", d["neumann_identical"], d["neumann_identical"])
        self.manifest.record("lowest_nonincreasing", d["nonincreasing"], d["nonincreasing"])
        self.manifest.info["dirichlet_lowest"] = d["dirichlet_lowest"]
        if len(result.values) and result.values[0] <= -1e3:
            gap = d["dirichlet_relative_gap"]
            self.manifest.record("dirichlet_limit_gap", gap, gap <= 0.01)
        self.emit("eigenvalues", result.to_frame())
        self.emit("sweep", self._sweep_table(result))

    def _run_chiral_sweep(self) -> None:
        setup = self.setup(bc=make_bc("dirichlet"))
        alpha = self.config.bc.alpha if self.config.bc.alpha is not None else 0.0
        if isinstance(alpha, str):
            alpha = alpha_expression(alpha, setup.grid.chart.perimeter)
        result = sweep_chiral(
            setup, self.config.sweep.values, alpha, self.config.solver.k, threads=self.threads, **self.solver
        )
        for beta in result.values:
            self._hermiticity(
                setup.with_bc(make_bc("chiral", alpha, float(beta))).assemble(), f"hermiticity_beta_{beta:g}"
            )
        self.manifest.info["lowest"] = result.diagnostics["lowest"]
        self.manifest.info["large_negative"] = [bool(v) for v in result.diagnostics["large_negative"]]
        self.emit("eigenvalues", result.to_frame())
        self.emit("sweep", self._sweep_table(result))

    def _sweep_table(self, result: SweepResult) -> pd.DataFrame:
        """Plot-ready layout: one row per parameter value, one column per level."""
        levels = result.levels()
        table = pd.DataFrame({"param_value": result.values})
        for index in range(levels.shape[1] if levels.size else 0):
            table[f"lambda_{index}"] = levels[:, index]
        return table

    def _reference_level(self) -> Optional[float]:
        d, g, c = self.config.domain, self.config.gauge, self.config.bc
        if g.gauge != "none" or c.bc != "dirichlet" or c.inner_bc is not None:
            return None
        if d.kind == "rectangle":
            return float(rectangle_dirichlet_energies(d.a, d.b, 1, self.params)[0])
        if d.kind == "disk":
            return disk_dirichlet_energy(d.radius, self.params)
        return None

    def _resolution(self, resolution: int) -> dict:
        if self.config.domain.kind == "rectangle":
            return {"nx": resolution, "ny": resolution}
        return {"nr": resolution, "ntheta": 2 * resolution}

    def _run_convergence(self) -> None:
        def factory(resolution):
            return self.setup(self.grid(**self._resolution(resolution))).assemble()

        reference = self._reference_level()
        table = study_convergence(
            factory, self.config.sweep.resolutions, reference=reference, threads=self.threads, **self.solver
        )
        self.manifest.info["reference"] = "successive differences" if reference is None else reference
        self.manifest.info["monotone"] = table.monotone
        low, high = ORDER_RANGE
        for i, order in enumerate(table.orders):
            self.manifest.record(f"order_{i + 1}", float(order), low <= order <= high)
        self.emit("convergence", table.to_frame())

    def _run_landau(self) -> None:
        d = self.config.domain
        report = check_landau(self.config.gauge.B, d.radius, (d.nr, d.ntheta), self.config.solver.k, self.params,
                              **self.solver)
        self.manifest.grid_hash = build_grid("disk", **d.dimensions()).fingerprint()
        self.manifest.record("landau_deviation", report.deviation, abs(report.deviation) <= LANDAU_WINDOW)
        if report.B != 0:
            self.manifest.record("above_landau_level", report.lowest - report.expected, report.lowest > report.expected)
        if report.gauge_discrepancy is not None:
            limit = SPECTRAL_TOL * max(1.0, report.expected)
            self.manifest.record("gauge_discrepancy", report.gauge_discrepancy, report.gauge_discrepancy <= limit)
        self.manifest.info["degeneracy"] = report.degeneracy
        self.emit("eigenvalues", _spectrum_frame([report.B], [report.spectrum]))

    def _potential_1d(self):
        s = self.config.sae1d
        if s.potential == "constant":
            return lambda x: s.amplitude
        if s.potential == "sine":
            return lambda x: s.amplitude * np.sin(x)
        return None

    def _run_sae1d(self) -> None:
        s, k = self.config.sae1d, self.config.solver.k
        potential = self._potential_1d()
        spectra, values = [], []
        if s.u:
            bc = UnitaryBC(np.reshape(np.asarray(s.u, dtype=complex), (2, 2)))
            H = interval_hamiltonian(bc, potential, s.length, s.n, self.params)
            self._hermiticity(H)
            self._realness(H)
            if potential is not None:
                original, gauged = gauge_away_spectra(bc, potential, s.length, s.n, k, self.params, **self.solver)
                gap = float(np.max(np.abs(original.eigenvalues - gauged.eigenvalues)))
                self.manifest.record("gauge_away_discrepancy", gap, gap <= SPECTRAL_TOL)
                spectra.append(original)
            else:
                spectra.append(interval_spectrum(bc, None, s.length, s.n, k, self.params, **self.solver))
            values.append(0.0)
        if s.theta:
            family = scalar_family_spectra(s.theta, s.length, s.n, k, self.params, **self.solver)
            worst_cayley = 0.0
            worst_form = 0.0
            for theta, by_u, by_l in family:
                expected = scalar_cayley_value(theta)
                if by_l is not None:
                    L = cayley(scalar_unitary(theta)).L
                    worst_cayley = max(worst_cayley, float(np.max(np.abs(L - expected * np.eye(2)))))
                    worst_form = max(worst_form, float(np.max(np.abs(by_u.eigenvalues - by_l.eigenvalues))))
                spectra.append(by_u)
                values.append(theta)
            self.manifest.record("scalar_cayley_defect", worst_cayley, worst_cayley <= CAYLEY_TOL)
            self.manifest.record("cayley_form_discrepancy", worst_form, worst_form <= SPECTRAL_TOL)
        order = np.argsort(values, kind="stable")
        self.emit("eigenvalues", _spectrum_frame([values[i] for i in order], [spectra[i] for i in order]))


def run(config: ExperimentConfig, out_dir: Optional[str] = None, threads: int = 1,
        seed: Optional[int] = None) -> RunManifest:
    """
    Execute the configured experiment and write its artifacts.

    Args:
        config (ExperimentConfig): Parsed configuration.
        out_dir (str): Output directory; defaults to config.output.directory.
        threads (int): Worker threads for sweeps.
        seed (int): Overrides the solver seed of the config.

    Returns:
        RunManifest: Status, checks and artifacts; already written to manifest.txt.
    """
    return ExperimentRunner(config, out_dir, threads, seed).run()


def failed_manifest(error: Exception, out_dir: str, experiment: str = "unknown") -> RunManifest:
    """Manifest for a run that never got a valid config."""
    manifest = RunManifest(experiment=experiment, status="failed", error=f"{type(error).__name__}: {error}")
    emit_manifest(manifest, os.path.join(out_dir, "manifest.txt"))
    return manifest
