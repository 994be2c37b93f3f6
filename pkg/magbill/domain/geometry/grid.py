"""
Billiard Grid Module
Builds rectangle, disk and annulus lattices with finite-volume metric data.
"""
import hashlib
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Tuple

import numpy as np
import pandas as pd

from magbill.domain.errors import GeometryError
from magbill.domain.geometry.chart import (
    BoundaryChart,
    circle_component,
    component_from_polyline,
)

logger = logging.getLogger(__name__)

INTERIOR = 0
BOUNDARY = 1
NODE_CLASS_NAMES = {INTERIOR: "interior", BOUNDARY: "boundary"}

KINDS = ("rectangle", "disk", "annulus")


@dataclass(frozen=True, eq=False)
class Grid2D:
    """
    A discretized billiard.

    Edges are stored once, oriented from the lower to the higher node index,
    with their chord length, chord midpoint and finite-volume conductance
    (dual face length over edge length). Polar grids carry ghost rings of
    class boundary and weight zero outside Omega.
    """

    kind: str
    dimensions: Dict[str, float]
    resolution: Tuple[int, int]
    x: np.ndarray
    y: np.ndarray
    node_class: np.ndarray
    weights: np.ndarray
    edges: np.ndarray
    edge_length: np.ndarray
    edge_midpoint: np.ndarray
    conductance: np.ndarray
    chart: BoundaryChart
    spacing: Tuple[float, float]
    radii: np.ndarray = field(default=None)

    @property
    def n_nodes(self) -> int:
        return len(self.x)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def is_polar(self) -> bool:
        return self.kind in ("disk", "annulus")

    @property
    def hole_count(self) -> int:
        return 1 if self.kind == "annulus" else 0

    @property
    def size(self) -> float:
        """Characteristic length of the domain."""
        if self.kind == "rectangle":
            return max(self.dimensions["a"], self.dimensions["b"])
        return 2.0 * self.dimensions["R_out"]

    @cached_property
    def interior_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.node_class == INTERIOR)

    @cached_property
    def boundary_nodes(self) -> np.ndarray:
        return np.flatnonzero(self.node_class == BOUNDARY)

    @cached_property
    def boundary_adjacent_nodes(self) -> np.ndarray:
        """Grid nodes that anchor chart nodes (the outermost ring on polar grids)."""
        return np.unique(self.chart.anchor)

    @cached_property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.y])

    @property
    def area(self) -> float:
        return float(self.weights.sum())

    @cached_property
    def _edge_keys(self) -> Tuple[np.ndarray, np.ndarray]:
        keys = self.edges[:, 0] * self.n_nodes + self.edges[:, 1]
        order = np.argsort(keys)
        return keys[order], order

    def lookup_edges(self, i, j) -> Tuple[np.ndarray, np.ndarray]:
        """Edge indices joining i[n] and j[n], and whether each is stored as i -> j."""
        i, j = np.atleast_1d(np.asarray(i, dtype=np.int64)), np.atleast_1d(np.asarray(j, dtype=np.int64))
        forward = i < j
        keys = np.where(forward, i * self.n_nodes + j, j * self.n_nodes + i)
        sorted_keys, order = self._edge_keys
        position = np.clip(np.searchsorted(sorted_keys, keys), 0, len(sorted_keys) - 1)
        missing = sorted_keys[position] != keys
        if np.any(missing):
            n = int(np.flatnonzero(missing)[0])
            raise GeometryError(f"nodes {i[n]} and {j[n]} are not joined by an edge")
        return order[position], forward

    def edge_lookup(self, i: int, j: int) -> Tuple[int, bool]:
        """Return (edge index, True if the edge is stored as i -> j)."""
        index, forward = self.lookup_edges(i, j)
        return int(index[0]), bool(forward[0])

    @cached_property
    def neighbors(self) -> Tuple[np.ndarray, ...]:
        adjacency = [[] for _ in range(self.n_nodes)]
        for i, j in self.edges:
            adjacency[i].append(j)
            adjacency[j].append(i)
        return tuple(np.array(sorted(a), dtype=np.int64) for a in adjacency)

    def check_connectivity(self) -> None:
        """Every interior node keeps its full stencil and no boundary node is isolated."""
        full_stencil = 4
        degrees = np.array([len(n) for n in self.neighbors])
        if self.kind == "rectangle":
            if np.any(degrees[self.interior_nodes] != full_stencil):
                raise GeometryError("interior node with an incomplete stencil")
        elif np.any(degrees[self.interior_nodes] < 3):
            raise GeometryError("interior node with an incomplete stencil")
        if np.any(degrees[self.boundary_nodes] == 0):
            raise GeometryError("isolated boundary node")

    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.kind.encode())
        digest.update(repr(sorted(self.dimensions.items())).encode())
        digest.update(repr(self.resolution).encode())
        for array in (self.x, self.y, self.weights, self.edges):
            digest.update(np.ascontiguousarray(array).tobytes())
        return digest.hexdigest()[:16]

    def node_table(self) -> pd.DataFrame:
        """Debug dump: one row per node, `index,class,x,y,weight`."""
        return pd.DataFrame(
            {
                "index": np.arange(self.n_nodes),
                "class": [NODE_CLASS_NAMES[c] for c in self.node_class],
                "x": self.x,
                "y": self.y,
                "weight": self.weights,
            }
        )


def _require_resolution(name: str, value: int, minimum: int) -> None:
    if int(value) != value or value < minimum:
        raise GeometryError(f"{name} must be an integer >= {minimum}, got {value}")


def _edge_geometry(x: np.ndarray, y: np.ndarray, edges: np.ndarray):
    dx = x[edges[:, 1]] - x[edges[:, 0]]
    dy = y[edges[:, 1]] - y[edges[:, 0]]
    midpoint = np.column_stack(
        [0.5 * (x[edges[:, 0]] + x[edges[:, 1]]), 0.5 * (y[edges[:, 0]] + y[edges[:, 1]])]
    )
    return np.hypot(dx, dy), midpoint


def build_rectangle(a: float, b: float, nx: int, ny: int) -> Grid2D:
    """
    Uniform (nx+1) x (ny+1) lattice on [0, a] x [0, b], node index j*(nx+1) + i.

    The chart runs counterclockwise from the origin corner. The bottom segment
    owns both bottom corners, the right segment owns (a, b) and the top segment
    owns (0, b).
    """
    if not (a > 0 and b > 0):
        raise GeometryError(f"rectangle sides must be positive, got a={a}, b={b}")
    _require_resolution("Nx", nx, 4)
    _require_resolution("Ny", ny, 4)
    hx, hy = a / nx, b / ny
    stride = nx + 1

    ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
    ii, jj = ii.ravel(), jj.ravel()
    x, y = ii * hx, jj * hy
    on_x_side = (ii == 0) | (ii == nx)
    on_y_side = (jj == 0) | (jj == ny)
    node_class = np.where(on_x_side | on_y_side, BOUNDARY, INTERIOR)
    weights = hx * hy * np.where(on_x_side, 0.5, 1.0) * np.where(on_y_side, 0.5, 1.0)

    nodes = jj * stride + ii
    horizontal = nodes[ii < nx]
    vertical = nodes[jj < ny]
    edges = np.concatenate(
        [np.column_stack([horizontal, horizontal + 1]), np.column_stack([vertical, vertical + stride])]
    )
    # faces lying on the boundary are halved
    face_h = np.where(on_y_side[ii < nx], 0.5, 1.0) * hy
    face_v = np.where(on_x_side[jj < ny], 0.5, 1.0) * hx
    conductance = np.concatenate([face_h / hx, face_v / hy])
    edge_length, edge_midpoint = _edge_geometry(x, y, edges)

    def node(i, j):
        return j * stride + i

    segments = [
        ([node(i, 0) for i in range(0, nx + 1)], (0.0, -1.0), stride, hy),
        ([node(nx, j) for j in range(1, ny + 1)], (1.0, 0.0), -1, hx),
        ([node(i, ny) for i in range(nx - 1, -1, -1)], (0.0, 1.0), -stride, hy),
        ([node(0, j) for j in range(ny - 1, 0, -1)], (-1.0, 0.0), 1, hx),
    ]
    order, normals, inward, spacing = [], [], [], []
    for members, normal, step, h in segments:
        order.extend(members)
        normals.extend([normal] * len(members))
        inward.extend([(k + step, k + 2 * step) for k in members])
        spacing.extend([h] * len(members))
    order = np.array(order, dtype=np.int64)
    outer = component_from_polyline(
        name="outer",
        positions=np.column_stack([x[order], y[order]]),
        normal=np.array(normals),
        anchor=order,
        ghost=np.full(len(order), -1),
        inward=np.array(inward),
        spacing=np.array(spacing),
    )
    grid = Grid2D(
        kind="rectangle",
        dimensions={"a": float(a), "b": float(b)},
        resolution=(int(nx), int(ny)),
        x=x.astype(float),
        y=y.astype(float),
        node_class=node_class,
        weights=weights,
        edges=edges,
        edge_length=edge_length,
        edge_midpoint=edge_midpoint,
        conductance=conductance,
        chart=BoundaryChart((outer,)),
        spacing=(hx, hy),
    )
    grid.check_connectivity()
    logger.debug("rectangle %gx%g: %d nodes, %d edges", a, b, grid.n_nodes, grid.n_edges)
    return grid


def _build_polar(kind: str, r_min: float, r_out: float, nr: int, ntheta: int) -> Grid2D:
    """
    Cell-centered polar lattice: ring j at r_j = r_min + (j + 1/2) dr, node j*ntheta + k.

    The outer ghost ring (r = r_out + dr/2) follows the nr physical rings; an
    annulus appends a second ghost ring at r_in - dr/2. Edges never cross the
    disk center.
    """
    dr = (r_out - r_min) / nr
    dtheta = 2 * np.pi / ntheta
    theta = dtheta * np.arange(ntheta)
    rings = r_min + (np.arange(nr) + 0.5) * dr
    ghost_rings = [r_out + 0.5 * dr]
    if kind == "annulus":
        ghost_rings.append(r_min - 0.5 * dr)
    radii = np.concatenate([rings, ghost_rings])
    n_rings = len(radii)

    r_node = np.repeat(radii, ntheta)
    t_node = np.tile(theta, n_rings)
    x, y = r_node * np.cos(t_node), r_node * np.sin(t_node)
    node_class = np.where(np.arange(n_rings * ntheta) < nr * ntheta, INTERIOR, BOUNDARY)
    weights = np.where(node_class == INTERIOR, r_node * dr * dtheta, 0.0)

    k = np.arange(ntheta)
    edge_blocks, conductance_blocks = [], []
    for j in range(nr):
        base = j * ntheta
        edge_blocks.append(np.column_stack([base + k, base + (k + 1) % ntheta]))
        conductance_blocks.append(np.full(ntheta, dr / (rings[j] * dtheta)))
    for j in range(nr - 1):
        r_face = r_min + (j + 1) * dr
        edge_blocks.append(np.column_stack([j * ntheta + k, (j + 1) * ntheta + k]))
        conductance_blocks.append(np.full(ntheta, r_face * dtheta / dr))
    outer_ghost = nr * ntheta + k
    edge_blocks.append(np.column_stack([(nr - 1) * ntheta + k, outer_ghost]))
    conductance_blocks.append(np.full(ntheta, r_out * dtheta / dr))
    components = [
        circle_component("outer", r_out, theta, (nr - 1) * ntheta + k, outer_ghost, dr, hole=False)
    ]
    if kind == "annulus":
        inner_ghost = (nr + 1) * ntheta + k
        edge_blocks.append(np.column_stack([k, inner_ghost]))
        conductance_blocks.append(np.full(ntheta, r_min * dtheta / dr))
        components.append(circle_component("inner", r_min, theta, k, inner_ghost, dr, hole=True))

    edges = np.concatenate(edge_blocks)
    edges = np.sort(edges, axis=1)
    edge_length, edge_midpoint = _edge_geometry(x, y, edges)
    dimensions = {"R_out": float(r_out)}
    if kind == "annulus":
        dimensions["R_in"] = float(r_min)
    grid = Grid2D(
        kind=kind,
        dimensions=dimensions,
        resolution=(int(nr), int(ntheta)),
        x=x,
        y=y,
        node_class=node_class,
        weights=weights,
        edges=edges,
        edge_length=edge_length,
        edge_midpoint=edge_midpoint,
        conductance=np.concatenate(conductance_blocks),
        chart=BoundaryChart(tuple(components)),
        spacing=(dr, dtheta),
        radii=radii,
    )
    grid.check_connectivity()
    logger.debug("%s R=%g: %d nodes, %d edges", kind, r_out, grid.n_nodes, grid.n_edges)
    return grid


def build_disk(radius: float, nr: int, ntheta: int) -> Grid2D:
    if not radius > 0:
        raise GeometryError(f"disk radius must be positive, got {radius}")
    _require_resolution("Nr", nr, 4)
    _require_resolution("Ntheta", ntheta, 8)
    return _build_polar("disk", 0.0, float(radius), nr, ntheta)


def build_annulus(r_in: float, r_out: float, nr: int, ntheta: int) -> Grid2D:
    if not 0 < r_in < r_out:
        raise GeometryError(f"annulus radii must satisfy 0 < R_in < R_out, got R_in={r_in}, R_out={r_out}")
    _require_resolution("Nr", nr, 4)
    _require_resolution("Ntheta", ntheta, 8)
    return _build_polar("annulus", float(r_in), float(r_out), nr, ntheta)


def boundary_chart(grid: Grid2D) -> BoundaryChart:
    """Chart of grid's boundary. s starts at the origin corner (rectangle) or at theta = 0 (polar)."""
    return grid.chart


def build_grid(kind: str, **dimensions) -> Grid2D:
    """Dispatch on the domain kind used in experiment configs."""
    if kind == "rectangle":
        return build_rectangle(dimensions["a"], dimensions["b"], dimensions["nx"], dimensions["ny"])
    if kind == "disk":
        return build_disk(dimensions["radius"], dimensions["nr"], dimensions["ntheta"])
    if kind == "annulus":
        return build_annulus(dimensions["r_in"], dimensions["r_out"], dimensions["nr"], dimensions["ntheta"])
    raise GeometryError(f"unknown domain kind '{kind}', expected one of {', '.join(KINDS)}")
