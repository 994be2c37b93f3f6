"""
Peierls Link Module
Unit-modulus phases on grid edges and loop holonomies.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from magbill.domain.errors import DimensionMismatchError, GeometryError
from magbill.domain.gauge.potential import PhysicalParams, PotentialSpec, check_admissible

logger = logging.getLogger(__name__)

UNIT_MODULUS_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class LinkField:
    """
    u_e = exp(i theta_e) for every stored edge i -> j of the grid.

    A link traversed backwards contributes 1/u (which is conj(u) for unit links).
    `phases` keeps the unwrapped theta_e so that holonomies keep their winding.
    """

    grid: object
    values: np.ndarray
    phases: np.ndarray
    spec: Optional[PotentialSpec] = None
    params: PhysicalParams = PhysicalParams()

    def __post_init__(self):
        if len(self.values) != self.grid.n_edges or len(self.phases) != self.grid.n_edges:
            raise DimensionMismatchError(
                f"link field has {len(self.values)} values for {self.grid.n_edges} edges"
            )

    @classmethod
    def from_values(cls, grid, values: np.ndarray, spec=None, params=PhysicalParams()) -> "LinkField":
        values = np.asarray(values, dtype=complex)
        return cls(grid, values, np.angle(values), spec, params)

    def modulus_defect(self) -> float:
        return float(np.max(np.abs(np.abs(self.values) - 1.0), initial=0.0))

    def check(self, tol: float = UNIT_MODULUS_TOL) -> None:
        defect = self.modulus_defect()
        if defect > tol:
            raise ValueError(f"link modulus deviates from 1 by {defect:.3e}")

    def hop(self, i, j) -> np.ndarray:
        """Directed link factor u_{i -> j} for (arrays of) adjacent nodes."""
        index, forward = self.grid.lookup_edges(i, j)
        u = self.values[index]
        return np.where(forward, u, 1.0 / u)

    def directed_phase(self, i: int, j: int) -> float:
        k, forward = self.grid.edge_lookup(i, j)
        return float(self.phases[k] if forward else -self.phases[k])

    def transport(self, target, source, values: np.ndarray) -> np.ndarray:
        """Carry node values at `source` into the frames of adjacent `target` nodes: conj(u_{t->s}) psi_s."""
        return np.conj(self.hop(target, source)) * values

    def with_values(self, values: np.ndarray, phases: np.ndarray) -> "LinkField":
        return LinkField(self.grid, values, phases, self.spec, self.params)


def link_phases(grid, spec: PotentialSpec, params: PhysicalParams = PhysicalParams()) -> LinkField:
    """theta_e = (e/hbar) * integral of A along each edge."""
    check_admissible(spec, grid)
    start = grid.points[grid.edges[:, 0]]
    end = grid.points[grid.edges[:, 1]]
    phases = params.coupling * spec.line_integral(start, end)
    links = LinkField(grid, np.exp(1j * phases), phases, spec, params)
    logger.debug("link field for %s: %d edges", spec.name, grid.n_edges)
    return links


@dataclass(frozen=True)
class Holonomy:
    total: float
    wrapped: float
    winding: int


def loop_holonomy(links: LinkField, loop: Sequence[int]) -> Holonomy:
    """Signed phase sum around a node cycle; the closing node may be repeated or omitted."""
    nodes = [int(n) for n in loop]
    if len(nodes) > 1 and nodes[0] == nodes[-1]:
        nodes = nodes[:-1]
    if len(nodes) < 2:
        raise GeometryError("a loop needs at least two distinct nodes")
    total = 0.0
    for a, b in zip(nodes, nodes[1:] + nodes[:1]):
        try:
            total += links.directed_phase(a, b)
        except GeometryError as exc:
            raise GeometryError(f"broken cycle: {exc}") from exc
    wrapped = float(np.pi - np.mod(np.pi - total, 2 * np.pi))
    return Holonomy(total=total, wrapped=wrapped, winding=int(round((total - wrapped) / (2 * np.pi))))


def plaquettes(grid) -> np.ndarray:
    """Elementary counterclockwise cycles (4 nodes each) of the lattice."""
    nx, ny = grid.resolution
    if grid.kind == "rectangle":
        stride = nx + 1
        i, j = np.meshgrid(np.arange(nx), np.arange(ny))
        base = (j * stride + i).ravel()
        return np.column_stack([base, base + 1, base + 1 + stride, base + stride])
    nr, ntheta = grid.resolution
    j, k = np.meshgrid(np.arange(nr - 1), np.arange(ntheta), indexing="ij")
    j, k = j.ravel(), k.ravel()
    kn = (k + 1) % ntheta
    return np.column_stack([j * ntheta + k, (j + 1) * ntheta + k, (j + 1) * ntheta + kn, j * ntheta + kn])


def hole_loops(grid) -> list:
    """One counterclockwise loop around each hole (the innermost physical ring)."""
    if grid.kind != "annulus":
        return []
    ntheta = grid.resolution[1]
    return [list(range(ntheta))]


def transform_links(links: LinkField, chi) -> LinkField:
    """u'_{i->j} = U(j) u_{i->j} conj(U(i))."""
    if len(chi.U) != links.grid.n_nodes:
        raise DimensionMismatchError(
            f"gauge function has {len(chi.U)} nodes, grid has {links.grid.n_nodes}"
        )
    i, j = links.grid.edges[:, 0], links.grid.edges[:, 1]
    values = chi.U[j] * links.values * np.conj(chi.U[i])
    phases = links.phases + np.angle(chi.U[j]) - np.angle(chi.U[i])
    return links.with_values(values, phases)


def link_table(links: LinkField) -> pd.DataFrame:
    """Debug dump: `edge_index,node_i,node_j,phase`."""
    return pd.DataFrame(
        {
            "edge_index": np.arange(links.grid.n_edges),
            "node_i": links.grid.edges[:, 0],
            "node_j": links.grid.edges[:, 1],
            "phase": links.phases,
        }
    )
