"""
Boundary Trace Module
Boundary values and covariant outward normal derivatives of bulk states.
"""
from dataclasses import dataclass

import numpy as np

from magbill.domain.errors import DimensionMismatchError
from magbill.domain.geometry.chart import BoundaryChart


@dataclass(frozen=True, eq=False)
class BoundaryVector:
    """One complex value per chart node, components in chart order."""

    values: np.ndarray
    chart: BoundaryChart

    def __post_init__(self):
        if len(self.values) != self.chart.size:
            raise DimensionMismatchError(
                f"boundary vector has {len(self.values)} entries, chart has {self.chart.size} nodes"
            )

    def component(self, index: int) -> np.ndarray:
        return self.values[self.chart.slices()[index]]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def _require_bulk(grid, state: np.ndarray) -> np.ndarray:
    state = np.asarray(state)
    if state.shape[0] != grid.n_nodes:
        raise DimensionMismatchError(f"state has {state.shape[0]} entries, grid has {grid.n_nodes} nodes")
    return state


def _transported_ghost(grid, links, state: np.ndarray) -> np.ndarray:
    chart = grid.chart
    if links is None:
        return state[chart.ghost]
    return links.transport(chart.anchor, chart.ghost, state[chart.ghost])


def trace(grid, state: np.ndarray, links=None) -> BoundaryVector:
    """
    Psi at the chart nodes.

    Rectangles read the lattice boundary node. Polar grids average the last
    ring with its ghost (carried along the ghost link when links are given),
    which is the midpoint value at the boundary circle.
    """
    state = _require_bulk(grid, state)
    chart = grid.chart
    if not grid.is_polar:
        return BoundaryVector(state[chart.anchor].astype(complex), chart)
    inside = state[chart.anchor]
    return BoundaryVector(0.5 * (inside + _transported_ghost(grid, links, state)), chart)


def covariant_normal_derivative(grid, links, state: np.ndarray) -> BoundaryVector:
    """
    Psi_dot = n . grad psi - i (e/hbar)(n . A) Psi, realized with parallel transport.

    Rectangles use the one-sided second-order stencil
    (3 psi_b - 4 psi_1 + psi_2) / 2h along -n; polar grids the centered
    difference between ghost and last ring.
    """
    state = _require_bulk(grid, state)
    chart = grid.chart
    if grid.is_polar:
        inside = state[chart.anchor]
        return BoundaryVector((_transported_ghost(grid, links, state) - inside) / chart.spacing, chart)
    b = chart.anchor
    p1, p2 = chart.inward[:, 0], chart.inward[:, 1]
    if links is None:
        first, second = state[p1], state[p2]
    else:
        first = links.transport(b, p1, state[p1])
        second = links.transport(b, p1, links.transport(p1, p2, state[p2]))
    derivative = (3 * state[b] - 4 * first + second) / (2 * chart.spacing)
    return BoundaryVector(derivative, chart)
