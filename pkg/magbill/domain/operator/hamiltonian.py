"""
Hamiltonian Assembly Module
Finite-volume magnetic Laplacian on the kernel of a boundary condition.

The assembled operator is H = (hbar^2 / 2m) W^{-1} K, where W holds the metric
weights of the retained nodes and K is the stiffness built from edge
conductances and link factors, closed at the boundary with (T1, T2).
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd
import scipy.linalg
import scipy.sparse as sp

from magbill.domain.boundary.conditions import BoundaryCondition, BulkToBoundaryOp, bc_operators
from magbill.domain.errors import (
    AssemblyError,
    BoundaryConditionError,
    DimensionMismatchError,
    HermiticityError,
)

logger = logging.getLogger(__name__)

HERMITICITY_LIMIT = 1e-10
SINGULAR_RCOND = 1e-12


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    """
    Sparse Hamiltonian over the retained degrees of freedom.

    dofs lists the bulk node of every retained row: interior nodes by index,
    then retained boundary nodes in chart order. Ghost values are rebuilt from
    the anchor rows by `reconstruction` (in the anchor frames) followed by the
    frame change `ghost_frame`.
    """

    stiffness: sp.csr_matrix
    weights: np.ndarray
    prefactor: float
    dofs: np.ndarray
    bulk_size: int
    ghost_nodes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    ghost_anchor_rows: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    reconstruction: Optional[np.ndarray] = None
    ghost_frame: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.dofs)

    @property
    def weighted(self) -> sp.csr_matrix:
        """W H."""
        return (self.prefactor * self.stiffness).tocsr()

    @property
    def matrix(self) -> sp.csr_matrix:
        return (sp.diags(1.0 / self.weights) @ self.weighted).tocsr()

    def symmetrized(self) -> sp.csr_matrix:
        """W^{1/2} H W^{-1/2}, Hermitian whenever W H is."""
        scale = sp.diags(1.0 / np.sqrt(self.weights))
        return (scale @ self.weighted @ scale).tocsr()

    def restrict(self, bulk: np.ndarray) -> np.ndarray:
        bulk = np.asarray(bulk)
        if bulk.shape[0] != self.bulk_size:
            raise DimensionMismatchError(f"bulk vector has {bulk.shape[0]} entries, expected {self.bulk_size}")
        return bulk[self.dofs]

    def to_bulk(self, vector: np.ndarray) -> np.ndarray:
        """Bulk state whose boundary data satisfy the condition H was assembled with."""
        vector = np.asarray(vector)
        if vector.shape[0] != self.dim:
            raise DimensionMismatchError(f"vector has {vector.shape[0]} entries, H has dimension {self.dim}")
        bulk = np.zeros((self.bulk_size,) + vector.shape[1:], dtype=complex)
        bulk[self.dofs] = vector
        if self.reconstruction is not None:
            transported = self.reconstruction @ vector[self.ghost_anchor_rows]
            frame = self.ghost_frame if vector.ndim == 1 else self.ghost_frame[:, None]
            bulk[self.ghost_nodes] = frame * transported
        return bulk

    def inner(self, psi: np.ndarray, phi: np.ndarray) -> complex:
        return complex(np.vdot(psi, self.weights * phi))

    def triplets(self) -> pd.DataFrame:
        """Matrix dump `row,col,re,im` of H, rows sorted."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return pd.DataFrame(
            {
                "row": coo.row[order],
                "col": coo.col[order],
                "re": coo.data.real[order],
                "im": coo.data.imag[order],
            }
        )

    def weight_table(self) -> pd.DataFrame:
        return pd.DataFrame({"row": np.arange(self.dim), "node": self.dofs, "weight": self.weights})


def bulk_stiffness(grid, links) -> sp.csr_matrix:
    """Sum over edges of c (psi_i - conj(u_ij) psi_j) contributions, all nodes."""
    i, j = grid.edges[:, 0], grid.edges[:, 1]
    c = grid.conductance
    u = links.values
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([i, j, j, i])
    data = np.concatenate([c, c, -c * np.conj(u), -c * np.conj(1.0 / u)]).astype(complex)
    n = grid.n_nodes
    return sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def hermiticity_defect(H: Hamiltonian) -> float:
    """max |W H - (W H)^dagger|."""
    weighted = H.weighted
    gap = (weighted - weighted.conj().T).tocoo()
    return float(np.max(np.abs(gap.data), initial=0.0))


def ghost_reconstruction(op: BulkToBoundaryOp, spacing: np.ndarray) -> np.ndarray:
    """
    M with transported ghost = M @ anchor values, from T1 Psi = T2 Psi_dot,
    Psi = (l + g) / 2 and Psi_dot = (g - l) / spacing.
    """
    t2 = np.diag(op.T2) / spacing
    lhs = 0.5 * op.T1 - np.diag(t2)
    rhs = -(0.5 * op.T1 + np.diag(t2))
    try:
        lu = scipy.linalg.lu_factor(lhs)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise BoundaryConditionError(f"boundary condition cannot be solved for the ghost ring: {exc}") from exc
    pivots = np.abs(np.diag(lu[0]))
    if pivots.min(initial=np.inf) <= SINGULAR_RCOND * max(1.0, pivots.max(initial=0.0)):
        raise BoundaryConditionError(
            "boundary condition is singular on the ghost ring (alpha hits 2/dr?)"
        )
    return scipy.linalg.lu_solve(lu, rhs)


def _operator_for(grid, links, bc, params) -> BulkToBoundaryOp:
    if isinstance(bc, BulkToBoundaryOp):
        if bc.size != grid.chart.size:
            raise DimensionMismatchError(f"operator has {bc.size} rows, chart has {grid.chart.size} nodes")
        return bc
    if isinstance(bc, BoundaryCondition) or isinstance(bc, (list, tuple)):
        return bc_operators(bc, grid.chart, links.spec, params)
    raise BoundaryConditionError(f"cannot build a boundary operator from {type(bc).__name__}")


def _assemble_rectangle(grid, stiffness: sp.csr_matrix, op: BulkToBoundaryOp):
    chart = grid.chart
    t2 = np.diag(op.T2)
    if np.all(t2 == 0):
        dofs = grid.interior_nodes
        return stiffness[dofs][:, dofs].tocsr(), dofs
    if not np.all(t2 == 1):
        raise BoundaryConditionError("rectangles take one family on the whole boundary")
    dofs = np.concatenate([grid.interior_nodes, chart.anchor])
    reduced = stiffness[dofs][:, dofs].tocoo()
    n_interior = len(grid.interior_nodes)
    closure = sp.coo_matrix(-op.weighted_T1())
    rows = np.concatenate([reduced.row, closure.row + n_interior])
    cols = np.concatenate([reduced.col, closure.col + n_interior])
    data = np.concatenate([reduced.data, closure.data])
    K = sp.coo_matrix((data, (rows, cols)), shape=reduced.shape).tocsr()
    return K, dofs


def _assemble_polar(grid, links, stiffness: sp.csr_matrix, op: BulkToBoundaryOp):
    chart = grid.chart
    dofs = grid.interior_nodes
    reduced = stiffness[dofs][:, dofs].tocoo()
    M = ghost_reconstruction(op, chart.spacing)
    index, _ = grid.lookup_edges(chart.anchor, chart.ghost)
    c_ghost = grid.conductance[index]
    closure = sp.coo_matrix(-c_ghost[:, None] * M)
    # interior nodes are numbered first, so anchors are their own dof rows
    anchor_rows = chart.anchor
    rows = np.concatenate([reduced.row, anchor_rows[closure.row]])
    cols = np.concatenate([reduced.col, anchor_rows[closure.col]])
    data = np.concatenate([reduced.data, closure.data])
    K = sp.coo_matrix((data, (rows, cols)), shape=reduced.shape).tocsr()
    ghost_frame = 1.0 / np.conj(links.hop(chart.anchor, chart.ghost))
    return K, dofs, M, anchor_rows, ghost_frame


def assemble(grid, links, bc, params=None, check: bool = True) -> Hamiltonian:
    """
    Assemble H on ker(T1 gamma - T2 nu).

    Rectangles: Dirichlet keeps the interior nodes; the other families keep
    every node and close the boundary cells with -diag(ds) T1. Polar grids
    eliminate the ghost ring through the boundary relation.
    """
    params = params if params is not None else links.params
    if links.grid is not grid:
        raise DimensionMismatchError("link field belongs to a different grid")
    op = _operator_for(grid, links, bc, params)
    stiffness = bulk_stiffness(grid, links)
    extras = {}
    if grid.is_polar:
        K, dofs, M, anchor_rows, ghost_frame = _assemble_polar(grid, links, stiffness, op)
        extras = dict(
            ghost_nodes=grid.chart.ghost,
            ghost_anchor_rows=anchor_rows,
            reconstruction=M,
            ghost_frame=ghost_frame,
        )
    else:
        K, dofs = _assemble_rectangle(grid, stiffness, op)
    K.eliminate_zeros()
    H = Hamiltonian(
        stiffness=K,
        weights=grid.weights[dofs],
        prefactor=params.kinetic_prefactor,
        dofs=np.asarray(dofs, dtype=np.int64),
        bulk_size=grid.n_nodes,
        metadata={
            "grid": grid.fingerprint(),
            "gauge": links.spec.name if links.spec is not None else "custom",
            "bc": op.tag,
            "params": params,
        },
        **extras,
    )
    if np.any(H.weights <= 0):
        raise AssemblyError("retained node with non-positive metric weight")
    defect = hermiticity_defect(H)
    logger.debug("assembled %s H: dim %d, nnz %d, defect %.2e", grid.kind, H.dim, K.nnz, defect)
    if check:
        limit = HERMITICITY_LIMIT * max(1.0, float(np.max(np.abs(H.weighted.data), initial=0.0)))
        if defect > limit:
            raise HermiticityError(defect, limit)
    return H
