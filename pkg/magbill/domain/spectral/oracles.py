"""
Analytic Spectrum Oracles
Closed forms and root scans the numerical spectra are checked against.
"""
import numpy as np
from scipy.optimize import brentq
from scipy.special import jn_zeros

from magbill.domain.gauge.potential import PhysicalParams


def bessel_zero(order: int, index: int = 1) -> float:
    """index-th positive zero of J_order."""
    return float(jn_zeros(order, index)[-1])


def disk_dirichlet_energy(radius: float, params: PhysicalParams = PhysicalParams()) -> float:
    return params.kinetic_prefactor * (bessel_zero(0, 1) / radius) ** 2


def rectangle_dirichlet_energies(a: float, b: float, k: int, params: PhysicalParams = PhysicalParams()) -> np.ndarray:
    n = np.arange(1, k + 2)
    levels = np.sort(((n[:, None] * np.pi / a) ** 2 + (n[None, :] * np.pi / b) ** 2).ravel())
    return params.kinetic_prefactor * levels[:k]


def interval_dirichlet_energies(length: float, k: int, params: PhysicalParams = PhysicalParams()) -> np.ndarray:
    n = np.arange(1, k + 1)
    return params.kinetic_prefactor * (n * np.pi / length) ** 2


def landau_level(B: float, n: int = 0, params: PhysicalParams = PhysicalParams()) -> float:
    """hbar omega_c (n + 1/2)."""
    omega = params.e * abs(B) / params.m
    return params.hbar * omega * (n + 0.5)


def magnetic_length(B: float, params: PhysicalParams = PhysicalParams()) -> float:
    return float(np.sqrt(params.hbar / (params.e * abs(B)))) if B != 0 else np.inf


def robin_interval_energies(
    alpha: float, length: float, k: int, params: PhysicalParams = PhysicalParams(), scan_points: int = 20000
) -> np.ndarray:
    """
    Lowest k levels on [0, L] with nu psi = alpha psi at both ends (outward normals).

    Oscillating modes solve (alpha^2 - q^2) sin(qL) = 2 alpha q cos(qL);
    for alpha > 0 up to two bound states solve (kappa^2 + alpha^2) sinh(kappa L) = 2 alpha kappa cosh(kappa L)
    and carry negative energy.
    """
    energies = []
    if alpha > 0:
        def bound(kappa):
            return (kappa ** 2 + alpha ** 2) * np.tanh(kappa * length) - 2 * alpha * kappa
        grid = np.linspace(1e-9, 4 * alpha + 10.0 / length, scan_points)
        values = bound(grid)
        for left, right, fl, fr in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
            if fl == 0:
                energies.append(-left ** 2)
            elif fl * fr < 0:
                energies.append(-brentq(bound, left, right, xtol=1e-15) ** 2)

    def oscillating(q):
        return (alpha ** 2 - q ** 2) * np.sin(q * length) - 2 * alpha * q * np.cos(q * length)

    top = (k + 2) * np.pi / length
    grid = np.linspace(1e-9, top, scan_points)
    values = oscillating(grid)
    for left, right, fl, fr in zip(grid[:-1], grid[1:], values[:-1], values[1:]):
        if fl * fr < 0:
            energies.append(brentq(oscillating, left, right, xtol=1e-15) ** 2)
    if alpha == 0:
        energies.append(0.0)
    energies = np.sort(np.asarray(energies))
    return params.kinetic_prefactor * energies[:k]
