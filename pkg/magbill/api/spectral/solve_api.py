from magbill.domain.spectral.eigensolver import Spectrum, eigs_lowest
from magbill.domain.spectral.experiments import BilliardSetup, GaugeCovarianceReport, gauge_covariance_check


def solve_billiard(setup: BilliardSetup, k: int, method: str = "iterative", tol: float = 1e-9, seed: int = 0) -> Spectrum:
    """
    Assemble the Hamiltonian described by the setup and compute its lowest eigenvalues.

    Args:
        setup (BilliardSetup): Grid, potential, boundary condition and physical constants.
        k (int): Number of eigenvalues to compute.
        method (str): 'iterative' or 'dense'.
        tol (float): Relative residual tolerance.
        seed (int): Seed of the Lanczos start vectors.

    Returns:
        Spectrum: The k lowest eigenpairs.
    """
    hamiltonian = setup.assemble()
    return eigs_lowest(hamiltonian, k, method=method, tol=tol, seed=seed)


def check_gauge_covariance(setup: BilliardSetup, target, k: int, method: str = "iterative",
                           tol: float = 1e-9, seed: int = 0) -> GaugeCovarianceReport:
    """
    Compare the Hamiltonian of the setup with its gauge-transformed counterpart.

    Args:
        setup (BilliardSetup): The reference configuration.
        target (PotentialSpec): A potential gauge equivalent to setup.spec.
        k (int): Number of eigenvalues compared.
        method (str): 'iterative' or 'dense'.
        tol (float): Relative residual tolerance.
        seed (int): Seed of the Lanczos start vectors.

    Returns:
        GaugeCovarianceReport: Entrywise and spectral discrepancies.
    """
    report = gauge_covariance_check(setup, target, k=k, method=method, tol=tol, seed=seed)
    return report
