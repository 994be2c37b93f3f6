"""
Unitary Boundary Parametrization Module
Self-adjoint boundary conditions at r boundary points as r x r unitaries U,
i(I + U) gamma psi = (I - U) nu psi, and their Cayley form nu psi = L gamma psi.
"""
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg
from scipy.stats import unitary_group

from magbill.domain.errors import CayleyError, HermitianInputError, UnitarityError

UNITARITY_TOL = 1e-12
CAYLEY_SINGULAR_TOL = 1e-10


def _square(matrix, name: str) -> np.ndarray:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=complex))
    if matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"{name} must be square, got shape {matrix.shape}")
    return matrix


@dataclass(frozen=True, eq=False)
class UnitaryBC:
    U: np.ndarray

    def __post_init__(self):
        U = _square(self.U, "U")
        defect = float(np.max(np.abs(U.conj().T @ U - np.eye(len(U)))))
        if defect > UNITARITY_TOL:
            raise UnitarityError(f"U is not unitary (|U^dagger U - I| = {defect:.3e})")
        object.__setattr__(self, "U", U)

    @property
    def r(self) -> int:
        return len(self.U)

    @property
    def T1(self) -> np.ndarray:
        return 1j * (np.eye(self.r) + self.U)

    @property
    def T2(self) -> np.ndarray:
        return np.eye(self.r) - self.U


@dataclass(frozen=True, eq=False)
class CayleyOperator:
    L: np.ndarray

    def __post_init__(self):
        L = _square(self.L, "L")
        defect = float(np.max(np.abs(L - L.conj().T)))
        if defect > UNITARITY_TOL:
            raise HermitianInputError(f"L is not Hermitian (|L - L^dagger| = {defect:.3e})")
        object.__setattr__(self, "L", L)

    @property
    def r(self) -> int:
        return len(self.L)


def bc_from_unitary(U) -> Tuple[np.ndarray, np.ndarray]:
    """(T1, T2) = (i(I + U), I - U)."""
    bc = U if isinstance(U, UnitaryBC) else UnitaryBC(U)
    return bc.T1, bc.T2


def cayley(U) -> CayleyOperator:
    """L = i(I + U)(I - U)^{-1}; undefined when 1 is an eigenvalue of U."""
    bc = U if isinstance(U, UnitaryBC) else UnitaryBC(U)
    identity = np.eye(bc.r)
    gap = identity - bc.U
    smallest = scipy.linalg.svdvals(gap).min()
    if smallest <= CAYLEY_SINGULAR_TOL:
        raise CayleyError(
            f"1 is an eigenvalue of U (smallest singular value of I - U is {smallest:.2e}); no Cayley form"
        )
    L = 1j * (identity + bc.U) @ np.linalg.inv(gap)
    # Hermitian up to rounding
    return CayleyOperator(0.5 * (L + L.conj().T))


def inverse_cayley(L) -> UnitaryBC:
    """U = (L + iI)^{-1}(L - iI)."""
    op = L if isinstance(L, CayleyOperator) else CayleyOperator(L)
    identity = np.eye(op.r)
    return UnitaryBC(np.linalg.solve(op.L + 1j * identity, op.L - 1j * identity))


def scalar_unitary(theta: float, r: int = 2) -> UnitaryBC:
    """U = exp(i theta) I, the same Robin-type condition at every boundary point."""
    return UnitaryBC(np.exp(1j * theta) * np.eye(r))


def scalar_cayley_value(theta: float) -> float:
    """-cot(theta / 2), the Cayley transform of exp(i theta)."""
    return -1.0 / np.tan(theta / 2)


def random_unitary(r: int = 2, seed: Optional[int] = None) -> UnitaryBC:
    return UnitaryBC(unitary_group.rvs(r, random_state=seed))


def kernel_probe(U, xi) -> Tuple[np.ndarray, np.ndarray]:
    """Boundary data (Psi, Psi_dot) = ((I - U) xi, i(I + U) xi) satisfying the U-condition."""
    bc = U if isinstance(U, UnitaryBC) else UnitaryBC(U)
    xi = np.asarray(xi, dtype=complex)
    return bc.T2 @ xi, bc.T1 @ xi


def unitary_residual(U, psi, psi_dot) -> float:
    """max |i(I + U) Psi - (I - U) Psi_dot|."""
    bc = U if isinstance(U, UnitaryBC) else UnitaryBC(U)
    return float(np.max(np.abs(bc.T1 @ np.asarray(psi) - bc.T2 @ np.asarray(psi_dot))))


def kernels_differ(U, V, tol: float = 1e-8) -> bool:
    """True when some probe of ker B_U violates the V-condition."""
    bc = U if isinstance(U, UnitaryBC) else UnitaryBC(U)
    for xi in np.eye(bc.r):
        psi, psi_dot = kernel_probe(bc, xi)
        if unitary_residual(V, psi, psi_dot) > tol:
            return True
    return False
