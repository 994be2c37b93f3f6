"""
Boundary Form and Current Module
The sesquilinear boundary form, its bulk counterpart built from the
unconstrained operator, and the probability current density.
"""
from dataclasses import dataclass

import numpy as np

from magbill.domain.boundary.traces import covariant_normal_derivative, trace
from magbill.domain.errors import DimensionMismatchError
from magbill.domain.operator.hamiltonian import bulk_stiffness


def _check_pair(grid, psi, phi):
    psi, phi = np.asarray(psi), np.asarray(phi)
    if psi.shape != (grid.n_nodes,) or phi.shape != (grid.n_nodes,):
        raise DimensionMismatchError(f"states must have {grid.n_nodes} entries, got {psi.shape} and {phi.shape}")
    return psi, phi


def boundary_form(grid, links, psi, phi) -> complex:
    """-(hbar^2 / 2m) sum over the chart of ds (conj(Psi) Phi_dot - conj(Psi_dot) Phi)."""
    psi, phi = _check_pair(grid, psi, phi)
    chart = grid.chart
    big_psi, big_phi = trace(grid, psi, links).values, trace(grid, phi, links).values
    dot_psi = covariant_normal_derivative(grid, links, psi).values
    dot_phi = covariant_normal_derivative(grid, links, phi).values
    integrand = np.conj(big_psi) * dot_phi - np.conj(dot_psi) * big_phi
    return complex(-links.params.kinetic_prefactor * np.sum(chart.ds * integrand))


def unconstrained_weighted(grid, links, state) -> np.ndarray:
    """
    W H_u psi over all nodes, with no boundary condition imposed.

    Boundary cells of rectangles lose the outward flux ds * Psi_dot; polar
    interior rows couple to the ghost ring directly and ghost rows vanish.
    """
    state = np.asarray(state)
    result = bulk_stiffness(grid, links) @ state
    if grid.is_polar:
        result[grid.weights == 0] = 0.0
    else:
        chart = grid.chart
        flux = chart.ds * covariant_normal_derivative(grid, links, state).values
        np.subtract.at(result, chart.anchor, flux)
    return links.params.kinetic_prefactor * result


def unconstrained_operator(grid, links, state) -> np.ndarray:
    """H_u psi on the nodes of positive weight (zero on ghosts)."""
    weighted = unconstrained_weighted(grid, links, state)
    out = np.zeros_like(weighted)
    positive = grid.weights > 0
    out[positive] = weighted[positive] / grid.weights[positive]
    return out


def bulk_boundary_form(grid, links, psi, phi) -> complex:
    """<psi, H_u phi> - <H_u psi, phi> in the weighted inner product."""
    psi, phi = _check_pair(grid, psi, phi)
    left = np.vdot(psi, unconstrained_weighted(grid, links, phi))
    right = np.vdot(unconstrained_weighted(grid, links, psi), phi)
    return complex(left - right)


@dataclass(frozen=True, eq=False)
class CurrentField:
    """Complex 2-vector per node; ghost nodes carry zero."""

    values: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.values[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.values[:, 1]


def _directional_derivative(links, state, node, ahead, behind, step):
    """Covariant difference along one lattice direction; ahead/behind are -1 where missing."""
    value = state[node]
    has_ahead, has_behind = ahead >= 0, behind >= 0
    forward = np.zeros(len(node), dtype=complex)
    backward = np.zeros(len(node), dtype=complex)
    if np.any(has_ahead):
        forward[has_ahead] = links.transport(node[has_ahead], ahead[has_ahead], state[ahead[has_ahead]])
    if np.any(has_behind):
        backward[has_behind] = links.transport(node[has_behind], behind[has_behind], state[behind[has_behind]])
    both = has_ahead & has_behind
    derivative = np.zeros(len(node), dtype=complex)
    derivative[both] = (forward[both] - backward[both]) / (2 * step[both])
    only_ahead = has_ahead & ~has_behind
    derivative[only_ahead] = (forward[only_ahead] - value[only_ahead]) / step[only_ahead]
    only_behind = has_behind & ~has_ahead
    derivative[only_behind] = (value[only_behind] - backward[only_behind]) / step[only_behind]
    return derivative


def covariant_gradient(grid, links, state) -> np.ndarray:
    """grad psi - i (e/hbar) A psi at every node of positive weight, from link transports."""
    state = np.asarray(state)
    gradient = np.zeros((grid.n_nodes, 2), dtype=complex)
    if grid.kind == "rectangle":
        nx, ny = grid.resolution
        stride = nx + 1
        node = np.arange(grid.n_nodes)
        i, j = node % stride, node // stride
        hx, hy = grid.spacing
        east = np.where(i < nx, node + 1, -1)
        west = np.where(i > 0, node - 1, -1)
        north = np.where(j < ny, node + stride, -1)
        south = np.where(j > 0, node - stride, -1)
        gradient[:, 0] = _directional_derivative(links, state, node, east, west, np.full(len(node), hx))
        gradient[:, 1] = _directional_derivative(links, state, node, north, south, np.full(len(node), hy))
        return gradient

    nr, ntheta = grid.resolution
    dr, dtheta = grid.spacing
    node = grid.interior_nodes
    j, k = node // ntheta, node % ntheta
    radius = grid.radii[j]
    outward = np.where(j < nr - 1, node + ntheta, nr * ntheta + k)
    if grid.kind == "annulus":
        inward = np.where(j > 0, node - ntheta, (nr + 1) * ntheta + k)
    else:
        inward = np.where(j > 0, node - ntheta, -1)
    ccw = j * ntheta + (k + 1) % ntheta
    cw = j * ntheta + (k - 1) % ntheta
    d_r = _directional_derivative(links, state, node, outward, inward, np.full(len(node), dr))
    d_t = _directional_derivative(links, state, node, ccw, cw, radius * dtheta)
    theta = k * dtheta
    gradient[node, 0] = d_r * np.cos(theta) - d_t * np.sin(theta)
    gradient[node, 1] = d_r * np.sin(theta) + d_t * np.cos(theta)
    return gradient


def current(grid, links, psi, phi) -> CurrentField:
    """j = -(hbar^2 / 2m) [conj(psi) grad_A phi - conj(grad_A psi) phi]."""
    psi, phi = _check_pair(grid, psi, phi)
    grad_psi = covariant_gradient(grid, links, psi)
    grad_phi = covariant_gradient(grid, links, phi)
    values = np.conj(psi)[:, None] * grad_phi - np.conj(grad_psi) * phi[:, None]
    values[grid.weights == 0] = 0.0
    return CurrentField(-links.params.kinetic_prefactor * values)
