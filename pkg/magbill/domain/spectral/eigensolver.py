"""
Eigensolver Module
Lowest eigenpairs of assembled Hamiltonians via the symmetrized matrix
S = W^{1/2} H W^{-1/2}.
"""
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackNoConvergence, eigsh
from scipy.sparse.linalg import norm as sparse_norm

from magbill.domain.errors import ConvergenceError, DimensionMismatchError

logger = logging.getLogger(__name__)

METHODS = ("iterative", "dense")
DENSE_LIMIT = 20000
DEFAULT_TOL = 1e-9
MAX_RESTARTS = 4


@dataclass
class Spectrum:
    """
    Ascending eigenvalues with optional W-orthonormal eigenvectors over the dofs.

    residuals[k] = |S y_k - lambda_k y_k| for unit y_k.
    """

    eigenvalues: np.ndarray
    residuals: np.ndarray
    eigenvectors: Optional[np.ndarray] = None
    method: str = "iterative"
    iterations: int = 0
    tol: float = DEFAULT_TOL
    elapsed: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    @property
    def lowest(self) -> float:
        return float(self.eigenvalues[0])

    def orthonormality_defect(self, weights: np.ndarray) -> float:
        if self.eigenvectors is None:
            return 0.0
        X = self.eigenvectors
        gram = X.conj().T @ (weights[:, None] * X)
        return float(np.max(np.abs(gram - np.eye(X.shape[1]))))


def gershgorin_lower_bound(S: sp.csr_matrix) -> float:
    absolute = abs(S)
    diagonal = S.diagonal().real
    off_diagonal = np.asarray(absolute.sum(axis=1)).ravel() - np.abs(S.diagonal())
    return float(np.min(diagonal - off_diagonal))


def _residuals(S, values, vectors) -> np.ndarray:
    return np.linalg.norm(S @ vectors - vectors * values[None, :], axis=0)


def _dense(S: sp.csr_matrix, k: int):
    values, vectors = scipy.linalg.eigh(S.toarray(), subset_by_index=[0, k - 1])
    return values, vectors, 1


def _iterative(S: sp.csr_matrix, k: int, seed: int, limit: float):
    """Shift-invert Lanczos below the Gershgorin bound, restarted with fresh starts and more vectors."""
    n = S.shape[0]
    sigma = gershgorin_lower_bound(S) - 1.0
    rng = np.random.default_rng(seed)
    best = None
    ncv = min(n - 1, max(2 * k + 1, 20))
    for attempt in range(MAX_RESTARTS + 1):
        v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        try:
            values, vectors = eigsh(S, k=k, sigma=sigma, which="LM", v0=v0, ncv=ncv, tol=0.0)
        except ArpackNoConvergence as exc:
            values, vectors = exc.eigenvalues, exc.eigenvectors
        if len(values) == k:
            order = np.argsort(values)
            values, vectors = values[order], vectors[:, order]
            residuals = _residuals(S, values, vectors)
            if best is None or residuals.max() < best[2].max():
                best = (values, vectors, residuals)
            if residuals.max() <= limit:
                return values, vectors, attempt + 1
        logger.warning("eigsh restart %d (k=%d, ncv=%d)", attempt + 1, k, ncv)
        ncv = min(n - 1, 2 * ncv)
    residuals = best[2] if best is not None else None
    raise ConvergenceError(f"eigensolver did not reach residual {limit:.2e} after {MAX_RESTARTS} restarts", residuals)


def eigs_lowest(H, k: int, method: str = "iterative", tol: float = DEFAULT_TOL, seed: int = 0) -> Spectrum:
    """
    k smallest eigenvalues of H.

    Convergence means residual <= tol * max(1, |S|_1) for every pair; the dense
    path is limited to dimensions up to 20000.
    """
    n = H.dim
    if method not in METHODS:
        raise ValueError(f"unknown eigensolver method '{method}'")
    if k < 1 or k > n:
        raise DimensionMismatchError(f"k must lie in [1, {n}], got {k}")
    # ARPACK needs k < n - 1, so nearly full spectra go dense too
    dense = method == "dense" or k >= n - 1
    if dense and n > DENSE_LIMIT:
        raise DimensionMismatchError(f"dense eigensolver is limited to dimension {DENSE_LIMIT}, got {n}")
    S = H.symmetrized()
    limit = tol * max(1.0, float(sparse_norm(S, 1)))
    started = time.perf_counter()
    if dense:
        values, vectors, iterations = _dense(S, k)
        method = "dense"
    else:
        values, vectors, iterations = _iterative(S, k, seed, limit)
    residuals = _residuals(S, values, vectors)
    if residuals.max() > limit:
        raise ConvergenceError(f"residual {residuals.max():.2e} exceeds {limit:.2e}", residuals)
    elapsed = time.perf_counter() - started
    logger.debug("%s solve: dim %d, k %d, %.2fs, max residual %.2e", method, n, k, elapsed, residuals.max())
    return Spectrum(
        eigenvalues=np.asarray(values, dtype=float),
        residuals=residuals,
        eigenvectors=vectors / np.sqrt(H.weights)[:, None],
        method=method,
        iterations=iterations,
        tol=tol,
        elapsed=elapsed,
    )


def spectral_realness(H) -> float:
    """max |Im lambda| of the unsymmetrized H from a general dense eigensolver."""
    if H.dim > DENSE_LIMIT:
        raise DimensionMismatchError(f"realness check is limited to dimension {DENSE_LIMIT}, got {H.dim}")
    values = scipy.linalg.eigvals(H.matrix.toarray())
    return float(np.max(np.abs(values.imag), initial=0.0))
