import numpy as np

from magbill.domain.selfadjoint1d.interval import (
    gauge_away_1d,
    interval_spectrum,
    robin_ground_state,
    transform_unitary_bc,
)
from magbill.domain.selfadjoint1d.unitary import cayley, scalar_unitary


def scalar_family_spectra(thetas: list, length: float, n: int, k: int, params, **solver) -> list:
    """
    Interval spectra for U = exp(i theta) I, computed in U-form and, where defined, in Cayley form.

    Args:
        thetas (list): Angles in (0, 2 pi).
        length (float): Interval length.
        n (int): Number of cells.
        k (int): Number of eigenvalues.
        params (PhysicalParams): Physical constants.
        **solver: method, tol and seed.

    Returns:
        list: One (theta, unitary spectrum, cayley spectrum or None) tuple per angle.
    """
    results = []
    for theta in thetas:
        bc = scalar_unitary(theta)
        by_u = interval_spectrum(bc, None, length, n, k, params, **solver)
        by_l = None
        if not np.isclose(np.mod(theta, 2 * np.pi), 0.0):
            by_l = interval_spectrum(cayley(bc), None, length, n, k, params, **solver)
        results.append((theta, by_u, by_l))
    return results


def gauge_away_spectra(bc, potential, length: float, n: int, k: int, params, **solver) -> tuple:
    """
    Interval spectra with a potential and with the potential gauged away.

    Args:
        bc (UnitaryBC | CayleyOperator): Boundary condition in the original gauge.
        potential (callable): A(x) on [0, length].
        length (float): Interval length.
        n (int): Number of cells.
        k (int): Number of eigenvalues.
        params (PhysicalParams): Physical constants.
        **solver: method, tol and seed.

    Returns:
        tuple: (spectrum with A, spectrum with A = 0 and transformed condition).
    """
    chi = gauge_away_1d(potential, params)
    original = interval_spectrum(bc, potential, length, n, k, params, **solver)
    gauged = interval_spectrum(transform_unitary_bc(bc, chi, length, n), None, length, n, k, params, **solver)
    return original, gauged


def robin_profile(alpha: float, half_length: float, n: int, params):
    """
    Ground-state profile on (-L, L) for a constant Robin parameter.

    Args:
        alpha (float): Robin parameter.
        half_length (float): L.
        n (int): Number of cells.
        params (PhysicalParams): Physical constants.

    Returns:
        pandas.DataFrame: Columns x, re, im.
    """
    return robin_ground_state(alpha, half_length, n, params)
