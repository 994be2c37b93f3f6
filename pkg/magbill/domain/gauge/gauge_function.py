"""
Gauge Function Module
Decides whether two potentials are gauge equivalent on a grid and builds the
unitary node factors that carry one into the other.
"""
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import breadth_first_order

from magbill.domain.errors import DimensionMismatchError, GaugeEquivalenceError
from magbill.domain.gauge.links import hole_loops, link_phases, loop_holonomy, transform_links
from magbill.domain.gauge.potential import PhysicalParams, PotentialSpec, check_admissible, curl_field

logger = logging.getLogger(__name__)

CURL_TOL = 1e-8
HOLONOMY_TOL = 1e-8
HELD_OUT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class GaugeFunction:
    """
    U(node) = exp(-i e chi / hbar) together with grad chi = A - A2 at each node.

    chi is accumulated along a spanning tree from the basepoint, so it may be
    multivalued around a hole while U stays single valued.
    """

    U: np.ndarray
    chi: np.ndarray
    grad: np.ndarray
    basepoint: int

    @classmethod
    def constant(cls, n_nodes: int, chi: float = 0.0, params: PhysicalParams = PhysicalParams()):
        values = np.full(n_nodes, float(chi))
        return cls(
            U=np.exp(-1j * params.coupling * values),
            chi=values,
            grad=np.zeros((n_nodes, 2)),
            basepoint=0,
        )

    def inverse(self) -> "GaugeFunction":
        return GaugeFunction(U=np.conj(self.U), chi=-self.chi, grad=-self.grad, basepoint=self.basepoint)


@dataclass
class EquivalenceCertificate:
    equivalent: bool
    max_curl_difference: float
    holonomy_differences: List[float] = field(default_factory=list)
    flux_quanta: List[int] = field(default_factory=list)
    reason: str = ""

    def __bool__(self) -> bool:
        return self.equivalent


def is_gauge_equivalent(
    A: PotentialSpec, A2: PotentialSpec, grid, params: PhysicalParams = PhysicalParams()
) -> EquivalenceCertificate:
    """
    Equal curls at the interior nodes and hole holonomies differing by whole flux quanta.

    flux_quanta[h] is (holonomy of A2 - holonomy of A) / 2 pi around hole h.
    """
    check_admissible(A, grid)
    check_admissible(A2, grid)
    nodes = grid.interior_nodes
    x, y = grid.x[nodes], grid.y[nodes]
    curl_gap = float(
        np.max(np.abs(curl_field(A, x, y, grid.size) - curl_field(A2, x, y, grid.size)), initial=0.0)
    )
    certificate = EquivalenceCertificate(equivalent=True, max_curl_difference=curl_gap)
    if curl_gap > CURL_TOL:
        certificate.equivalent = False
        certificate.reason = f"magnetic fields differ by up to {curl_gap:.3e}"
        return certificate

    links, links2 = link_phases(grid, A, params), link_phases(grid, A2, params)
    for loop in hole_loops(grid):
        difference = loop_holonomy(links2, loop).total - loop_holonomy(links, loop).total
        quanta = int(round(difference / (2 * np.pi)))
        certificate.holonomy_differences.append(difference)
        certificate.flux_quanta.append(quanta)
        if abs(difference - 2 * np.pi * quanta) > HOLONOMY_TOL:
            certificate.equivalent = False
            certificate.reason = (
                f"hole holonomies differ by {difference:.6f}, not a multiple of 2 pi"
            )
    return certificate


def spanning_tree(grid, basepoint: int):
    """Breadth-first order and predecessors of every node, rooted at basepoint."""
    n = grid.n_nodes
    ones = np.ones(grid.n_edges)
    adjacency = sp.coo_matrix((ones, (grid.edges[:, 0], grid.edges[:, 1])), shape=(n, n)).tocsr()
    order, predecessors = breadth_first_order(adjacency, basepoint, directed=False, return_predecessors=True)
    if len(order) != n:
        raise GaugeEquivalenceError("grid graph is not connected")
    return order, predecessors


def gauge_function(
    A: PotentialSpec,
    A2: PotentialSpec,
    grid,
    basepoint: int = 0,
    params: PhysicalParams = PhysicalParams(),
) -> GaugeFunction:
    """
    Build chi with grad chi = A - A2 and chi(basepoint) = 0.

    Edge increments of chi are the differences of the two link phases, so
    transform_links(links(A), chi) reproduces links(A2) on every tree edge;
    the remaining edges are checked against links(A2).
    """
    certificate = is_gauge_equivalent(A, A2, grid, params)
    if not certificate:
        raise GaugeEquivalenceError(f"potentials are not gauge equivalent: {certificate.reason}")

    links, links2 = link_phases(grid, A, params), link_phases(grid, A2, params)
    order, predecessors = spanning_tree(grid, basepoint)
    chi = np.zeros(grid.n_nodes)
    U = np.ones(grid.n_nodes, dtype=complex)
    parents, children = predecessors[order[1:]], order[1:]
    index, forward = grid.lookup_edges(parents, children)
    sign = np.where(forward, 1.0, -1.0)
    delta_phase = sign * (links.phases[index] - links2.phases[index])
    delta_u = np.exp(-1j * delta_phase)
    # BFS order guarantees a parent is finished before its children
    for parent, child, dphase, du in zip(parents, children, delta_phase, delta_u):
        chi[child] = chi[parent] + dphase / params.coupling
        U[child] = U[parent] * du

    ax, ay = A.value(grid.x, grid.y)
    bx, by = A2.value(grid.x, grid.y)
    result = GaugeFunction(U=U, chi=chi, grad=np.column_stack([ax - bx, ay - by]), basepoint=int(basepoint))

    moved = transform_links(links, result)
    held_out = float(np.max(np.abs(moved.values - links2.values), initial=0.0))
    if held_out > HELD_OUT_TOL:
        raise GaugeEquivalenceError(f"transformed links miss the target links by {held_out:.3e}")
    logger.debug("gauge function over %d nodes, held-out defect %.2e", grid.n_nodes, held_out)
    return result


def apply_gauge(state: np.ndarray, chi: GaugeFunction) -> np.ndarray:
    state = np.asarray(state)
    if state.shape[0] != len(chi.U):
        raise DimensionMismatchError(f"state has {state.shape[0]} entries, gauge function has {len(chi.U)}")
    if state.ndim == 1:
        return chi.U * state
    return chi.U[:, None] * state
