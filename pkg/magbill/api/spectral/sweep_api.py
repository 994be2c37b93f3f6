from magbill.domain.spectral.experiments import (
    BilliardSetup,
    ConvergenceTable,
    LandauReport,
    SweepResult,
    chiral_sweep,
    convergence_study,
    flux_sweep,
    landau_check,
    robin_sweep,
)


def sweep_flux(setup: BilliardSetup, fluxes: list, k: int, **solver) -> SweepResult:
    """
    Spectra of an annulus billiard over Aharonov-Bohm fluxes.

    Args:
        setup (BilliardSetup): Annulus configuration.
        fluxes (list): Strictly increasing flux values.
        k (int): Number of eigenvalues per flux.
        **solver: method, tol, seed and threads passed to the sweep.

    Returns:
        SweepResult: Spectra and the flux-quantum periodicity diagnostic.
    """
    return flux_sweep(setup, fluxes, k=k, **solver)


def sweep_robin(setup: BilliardSetup, alphas: list, k: int, **solver) -> SweepResult:
    """
    Spectra over constant Robin parameters.

    Args:
        setup (BilliardSetup): Base configuration; its boundary condition is replaced.
        alphas (list): Strictly increasing alpha values.
        k (int): Number of eigenvalues per alpha.
        **solver: method, tol, seed and threads passed to the sweep.

    Returns:
        SweepResult: Spectra with Neumann, monotonicity and Dirichlet diagnostics.
    """
    return robin_sweep(setup, alphas, k=k, **solver)


def sweep_chiral(setup: BilliardSetup, betas: list, alpha: float, k: int, **solver) -> SweepResult:
    """
    Spectra of chiral boundary conditions as beta grows.

    Args:
        setup (BilliardSetup): Disk or annulus configuration.
        betas (list): Strictly increasing beta values.
        alpha (float): Constant alpha of the chiral condition.
        k (int): Number of eigenvalues per beta.
        **solver: method, tol, seed and threads passed to the sweep.

    Returns:
        SweepResult: Spectra with the lowest eigenvalue per beta.
    """
    return chiral_sweep(setup, betas, alpha=alpha, k=k, **solver)


def study_convergence(factory, resolutions: list, reference=None, **solver) -> ConvergenceTable:
    """
    Observed convergence order of the lowest eigenvalue.

    Args:
        factory (callable): Maps a resolution to an assembled Hamiltonian.
        resolutions (list): At least three resolutions in geometric progression.
        reference (float): Exact eigenvalue, or None for successive differences.
        **solver: method, tol, seed and threads.

    Returns:
        ConvergenceTable: Eigenvalues, errors and observed orders.
    """
    return convergence_study(factory, resolutions, reference=reference, **solver)


def check_landau(B: float, radius: float, resolution: tuple, k: int, params, **solver) -> LandauReport:
    """
    Lowest Dirichlet disk level in a uniform field against the Landau level.

    Args:
        B (float): Field strength.
        radius (float): Disk radius.
        resolution (tuple): (Nr, Ntheta).
        k (int): Number of eigenvalues.
        params (PhysicalParams): Physical constants.
        **solver: method, tol and seed.

    Returns:
        LandauReport: Lowest level, reference, deviation and gauge cross-check.
    """
    return landau_check(B, radius, resolution, k=k, params=params, **solver)
