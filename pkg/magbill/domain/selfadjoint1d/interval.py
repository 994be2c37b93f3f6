"""
Magnetic Interval Module
-(hbar^2/2m) d_A^2 on [0, L] with a self-adjoint two-point boundary condition,
cell-centered with one ghost cell beyond each end.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.integrate import quad

from magbill.domain.errors import BoundaryConditionError, DimensionMismatchError, HermiticityError
from magbill.domain.gauge.potential import PhysicalParams
from magbill.domain.operator.hamiltonian import HERMITICITY_LIMIT, Hamiltonian, hermiticity_defect
from magbill.domain.selfadjoint1d.unitary import CayleyOperator, UnitaryBC
from magbill.domain.spectral.eigensolver import DEFAULT_TOL, Spectrum, eigs_lowest

logger = logging.getLogger(__name__)

MIN_CELLS = 100

Potential1D = Optional[Callable[[float], float]]


@dataclass(frozen=True)
class IntervalGrid:
    """
    Cells x_i = (i + 1/2) h, i < n; node n is the left ghost (-h/2), node n+1 the right ghost (L + h/2).
    """

    length: float
    n: int

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"interval length must be positive, got {self.length}")
        if self.n < MIN_CELLS:
            raise ValueError(f"interval needs at least {MIN_CELLS} cells, got {self.n}")

    @property
    def h(self) -> float:
        return self.length / self.n

    @cached_property
    def positions(self) -> np.ndarray:
        cells = (np.arange(self.n) + 0.5) * self.h
        return np.concatenate([cells, [-0.5 * self.h, self.length + 0.5 * self.h]])

    @property
    def anchors(self) -> np.ndarray:
        return np.array([0, self.n - 1])

    @property
    def ghosts(self) -> np.ndarray:
        return np.array([self.n, self.n + 1])

    def sample(self, function: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """A function evaluated at every node, ghosts included."""
        return np.asarray(function(self.positions), dtype=complex)


@dataclass(frozen=True, eq=False)
class GaugeFunction1D:
    """chi(x) = integral of A from 0 to x, so that A - chi' = 0."""

    potential: Callable[[float], float]
    params: PhysicalParams = PhysicalParams()

    def chi(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.array([quad(self.potential, 0.0, point, epsabs=1e-14, epsrel=1e-13, limit=200)[0] for point in x])

    def U(self, x) -> np.ndarray:
        return np.exp(-1j * self.params.coupling * self.chi(x))

    def grad(self, x) -> np.ndarray:
        return np.array([self.potential(point) for point in np.atleast_1d(x)], dtype=float)


def gauge_away_1d(potential: Callable[[float], float], params: PhysicalParams = PhysicalParams()) -> GaugeFunction1D:
    return GaugeFunction1D(potential, params)


def _node_phases(grid: IntervalGrid, potential: Potential1D, params: PhysicalParams) -> np.ndarray:
    """(e/hbar) chi at every node; link phases are differences of these."""
    if potential is None:
        return np.zeros(grid.n + 2)
    return params.coupling * GaugeFunction1D(potential, params).chi(grid.positions)


def interval_links(grid: IntervalGrid, potential: Potential1D, params: PhysicalParams = PhysicalParams()):
    """Edges (i, j) and u_{i->j}: cell chain, then left ghost -> cell 0 and last cell -> right ghost."""
    phase = _node_phases(grid, potential, params)
    cells = np.arange(grid.n - 1)
    edges = np.concatenate(
        [np.column_stack([cells, cells + 1]), [[grid.n, 0], [grid.n - 1, grid.n + 1]]]
    )
    return edges, np.exp(1j * (phase[edges[:, 1]] - phase[edges[:, 0]]))


def ghost_map(bc: Union[UnitaryBC, CayleyOperator], h: float) -> np.ndarray:
    """
    M with transported ghosts = M @ anchor values.

    U-form: [(I-U)/h - i(I+U)/2] g = [(I-U)/h + i(I+U)/2] l.
    Cayley form: (I - hL/2) g = (I + hL/2) l.
    """
    identity = np.eye(2)
    if isinstance(bc, UnitaryBC):
        lhs = (identity - bc.U) / h - 0.5j * (identity + bc.U)
        rhs = (identity - bc.U) / h + 0.5j * (identity + bc.U)
    elif isinstance(bc, CayleyOperator):
        lhs = identity - 0.5 * h * bc.L
        rhs = identity + 0.5 * h * bc.L
    else:
        raise BoundaryConditionError(f"expected UnitaryBC or CayleyOperator, got {type(bc).__name__}")
    if np.linalg.cond(lhs) > 1e12:
        raise BoundaryConditionError("boundary condition is singular for this cell size")
    return np.linalg.solve(lhs, rhs)


def interval_hamiltonian(
    bc: Union[UnitaryBC, CayleyOperator],
    potential: Potential1D = None,
    length: float = np.pi,
    n: int = 2000,
    params: PhysicalParams = PhysicalParams(),
    check: bool = True,
) -> Hamiltonian:
    """
    Finite-volume Hamiltonian with unit face conductances 1/h and cell weights h.

    The boundary pair is (left end, right end) in the frames of the end cells.
    """
    if bc.r != 2:
        raise DimensionMismatchError(f"an interval has 2 boundary points, the condition has r = {bc.r}")
    grid = IntervalGrid(length, n)
    h = grid.h
    edges, u = interval_links(grid, potential, params)
    c = np.full(len(edges), 1.0 / h)
    i, j = edges[:, 0], edges[:, 1]
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    data = np.concatenate([c, c, -c * np.conj(u), -c * np.conj(1.0 / u)])
    full = sp.coo_matrix((data, (rows, cols)), shape=(n + 2, n + 2)).tocsr()
    dofs = np.arange(n)
    reduced = full[dofs][:, dofs].tocoo()

    M = ghost_map(bc, h)
    anchors = grid.anchors
    a_rows, a_cols = np.meshgrid(anchors, anchors, indexing="ij")
    K = sp.coo_matrix(
        (
            np.concatenate([reduced.data, (-M / h).ravel()]),
            (np.concatenate([reduced.row, a_rows.ravel()]), np.concatenate([reduced.col, a_cols.ravel()])),
        ),
        shape=(n, n),
    ).tocsr()
    K.eliminate_zeros()
    ghost_hop = u[-2:]
    # left ghost edge is stored ghost -> cell, so its hop from the anchor is reversed
    anchor_to_ghost = np.array([1.0 / ghost_hop[0], ghost_hop[1]])
    H = Hamiltonian(
        stiffness=K,
        weights=np.full(n, h),
        prefactor=params.kinetic_prefactor,
        dofs=dofs,
        bulk_size=n + 2,
        ghost_nodes=grid.ghosts,
        ghost_anchor_rows=anchors,
        reconstruction=M,
        ghost_frame=1.0 / np.conj(anchor_to_ghost),
        metadata={"kind": "interval", "length": length, "n": n, "bc": type(bc).__name__},
    )
    if check:
        defect = hermiticity_defect(H)
        limit = HERMITICITY_LIMIT * max(1.0, float(np.max(np.abs(H.weighted.data))))
        if defect > limit:
            raise HermiticityError(defect, limit)
    return H


def interval_spectrum(
    bc: Union[UnitaryBC, CayleyOperator],
    potential: Potential1D = None,
    length: float = np.pi,
    n: int = 2000,
    k: int = 3,
    params: PhysicalParams = PhysicalParams(),
    method: str = "iterative",
    tol: float = DEFAULT_TOL,
    seed: int = 0,
) -> Spectrum:
    H = interval_hamiltonian(bc, potential, length, n, params)
    spectrum = eigs_lowest(H, k, method=method, tol=tol, seed=seed)
    logger.debug("interval spectrum (L=%g, n=%d): %s", length, n, spectrum.eigenvalues)
    return spectrum


def transform_unitary_bc(
    bc: Union[UnitaryBC, CayleyOperator], chi: GaugeFunction1D, length: float, n: int
) -> Union[UnitaryBC, CayleyOperator]:
    """U -> u U u^dagger (or L -> u L u^dagger) with u = exp(-i e chi / hbar) at the end cells."""
    grid = IntervalGrid(length, n)
    u = chi.U(grid.positions[grid.anchors])
    if isinstance(bc, UnitaryBC):
        return UnitaryBC(u[:, None] * bc.U * np.conj(u)[None, :])
    return CayleyOperator(u[:, None] * bc.L * np.conj(u)[None, :])


def interval_boundary_form(
    potential: Potential1D,
    length: float,
    n: int,
    psi: np.ndarray,
    phi: np.ndarray,
    params: PhysicalParams = PhysicalParams(),
) -> complex:
    """-(hbar^2/2m) sum over both ends of conj(Psi) Phi_dot - conj(Psi_dot) Phi, with outward normals."""
    grid = IntervalGrid(length, n)
    psi, phi = np.asarray(psi, dtype=complex), np.asarray(phi, dtype=complex)
    if psi.shape != (n + 2,) or phi.shape != (n + 2,):
        raise DimensionMismatchError(f"interval states need {n + 2} entries (cells and two ghosts)")
    edges, u = interval_links(grid, potential, params)
    anchor_to_ghost = np.array([1.0 / u[-2], u[-1]])

    def boundary_data(state):
        ghost = np.conj(anchor_to_ghost) * state[grid.ghosts]
        inside = state[grid.anchors]
        return 0.5 * (inside + ghost), (ghost - inside) / grid.h

    big_psi, dot_psi = boundary_data(psi)
    big_phi, dot_phi = boundary_data(phi)
    return complex(-params.kinetic_prefactor * np.sum(np.conj(big_psi) * dot_phi - np.conj(dot_psi) * big_phi))


def robin_ground_state(
    alpha: float,
    half_length: float,
    n: int = 400,
    params: PhysicalParams = PhysicalParams(),
) -> pd.DataFrame:
    """
    Ground state on (-L, L) with nu psi = alpha psi at both ends.

    Rows `x,re,im`, normalized in the cell-weighted inner product with the
    phase chosen so the largest component is real and positive.
    """
    bc = CayleyOperator(alpha * np.eye(2))
    H = interval_hamiltonian(bc, None, 2 * half_length, n, params)
    spectrum = eigs_lowest(H, 1, method="dense" if n <= 4000 else "iterative")
    vector = spectrum.eigenvectors[:, 0]
    vector = vector * np.exp(-1j * np.angle(vector[np.argmax(np.abs(vector))]))
    x = (np.arange(n) + 0.5) * (2 * half_length / n) - half_length
    logger.info("Robin ground state alpha=%g: energy %.6f", alpha, spectrum.lowest)
    return pd.DataFrame({"x": x, "re": vector.real, "im": vector.imag})
