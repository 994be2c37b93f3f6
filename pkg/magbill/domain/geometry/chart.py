"""
Boundary Chart Module
Arclength coordinates, unit normals and tangents on the boundary of a billiard.
"""
from dataclasses import dataclass
from functools import cached_property
from typing import List, Tuple

import numpy as np

from magbill.domain.errors import GeometryError


def rotate_quarter_turn(vectors: np.ndarray) -> np.ndarray:
    """Rotate 2-vectors by +90 degrees: (x, y) -> (-y, x)."""
    return np.column_stack([-vectors[:, 1], vectors[:, 0]])


@dataclass(frozen=True, eq=False)
class BoundaryComponent:
    """One closed boundary curve, sampled at chart nodes in the order of increasing s.

    anchor holds the grid node whose gauge frame each chart node shares;
    ghost holds the ghost node outside the domain (polar grids) or -1;
    inward holds the first two grid nodes along -n (rectangles) or -1.
    """

    name: str
    positions: np.ndarray
    s: np.ndarray
    normal: np.ndarray
    tangent: np.ndarray
    ds: np.ndarray
    anchor: np.ndarray
    ghost: np.ndarray
    inward: np.ndarray
    spacing: np.ndarray
    length: float

    @property
    def size(self) -> int:
        return len(self.s)

    def total_turning(self) -> float:
        """Sum of the signed turning angles of the tangent around the component."""
        angles = np.arctan2(self.tangent[:, 1], self.tangent[:, 0])
        steps = np.diff(np.append(angles, angles[0]))
        steps = (steps + np.pi) % (2 * np.pi) - np.pi
        return float(steps.sum())


def component_from_polyline(
    name: str,
    positions: np.ndarray,
    normal: np.ndarray,
    anchor: np.ndarray,
    ghost: np.ndarray,
    inward: np.ndarray,
    spacing: np.ndarray,
) -> BoundaryComponent:
    """Build a closed component; s is cumulative chord length from node 0, ds is half the span to both neighbours."""
    gaps = np.linalg.norm(np.roll(positions, -1, axis=0) - positions, axis=1)
    s = np.concatenate([[0.0], np.cumsum(gaps[:-1])])
    ds = 0.5 * (gaps + np.roll(gaps, 1))
    return BoundaryComponent(
        name=name,
        positions=positions,
        s=s,
        normal=normal,
        tangent=rotate_quarter_turn(normal),
        ds=ds,
        anchor=np.asarray(anchor, dtype=np.int64),
        ghost=np.asarray(ghost, dtype=np.int64),
        inward=np.asarray(inward, dtype=np.int64),
        spacing=np.asarray(spacing, dtype=float),
        length=float(gaps.sum()),
    )


def circle_component(
    name: str,
    radius: float,
    theta: np.ndarray,
    anchor: np.ndarray,
    ghost: np.ndarray,
    spacing: float,
    hole: bool,
) -> BoundaryComponent:
    """Exact chart on a circle. Hole boundaries run clockwise so that Omega stays on the left."""
    order = np.arange(len(theta))
    if hole:
        order = (-order) % len(theta)
    theta = theta[order]
    radial = np.column_stack([np.cos(theta), np.sin(theta)])
    normal = -radial if hole else radial
    dtheta = 2 * np.pi / len(theta)
    n = len(theta)
    return BoundaryComponent(
        name=name,
        positions=radius * radial,
        s=radius * dtheta * np.arange(n),
        normal=normal,
        tangent=rotate_quarter_turn(normal),
        ds=np.full(n, radius * dtheta),
        anchor=np.asarray(anchor, dtype=np.int64)[order],
        ghost=np.asarray(ghost, dtype=np.int64)[order],
        inward=np.full((n, 2), -1, dtype=np.int64),
        spacing=np.full(n, spacing),
        length=2 * np.pi * radius,
    )


@dataclass(frozen=True, eq=False)
class BoundaryChart:
    components: Tuple[BoundaryComponent, ...]

    def __post_init__(self):
        for component in self.components:
            if component.size < 3:
                raise GeometryError(f"boundary component '{component.name}' has fewer than 3 nodes")

    @property
    def size(self) -> int:
        return sum(component.size for component in self.components)

    @cached_property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum([c.size for c in self.components])])

    def slices(self) -> List[slice]:
        return [slice(int(self.offsets[i]), int(self.offsets[i + 1])) for i in range(len(self.components))]

    def _stack(self, field: str) -> np.ndarray:
        return np.concatenate([getattr(component, field) for component in self.components])

    @cached_property
    def s(self) -> np.ndarray:
        return self._stack("s")

    @cached_property
    def ds(self) -> np.ndarray:
        return self._stack("ds")

    @cached_property
    def normal(self) -> np.ndarray:
        return self._stack("normal")

    @cached_property
    def tangent(self) -> np.ndarray:
        return self._stack("tangent")

    @cached_property
    def positions(self) -> np.ndarray:
        return self._stack("positions")

    @cached_property
    def anchor(self) -> np.ndarray:
        return self._stack("anchor")

    @cached_property
    def ghost(self) -> np.ndarray:
        return self._stack("ghost")

    @cached_property
    def inward(self) -> np.ndarray:
        return self._stack("inward")

    @cached_property
    def spacing(self) -> np.ndarray:
        return self._stack("spacing")

    @cached_property
    def cyclic_neighbors(self) -> Tuple[np.ndarray, np.ndarray]:
        """Global indices of the previous and next chart node on the same component."""
        previous, following = [], []
        for start, component in zip(self.offsets[:-1], self.components):
            local = np.arange(component.size)
            previous.append(start + np.roll(local, 1))
            following.append(start + np.roll(local, -1))
        return np.concatenate(previous), np.concatenate(following)

    @property
    def perimeter(self) -> float:
        return float(self.ds.sum())
