"""
Boundary Condition Module
Dirichlet, Neumann, Robin and chiral families and their bulk-to-boundary
operators B = T1 gamma - T2 nu.
"""
import logging
from dataclasses import dataclass
from numbers import Real
from typing import Callable, Optional, Sequence, Union

import numpy as np

from magbill.domain.boundary.traces import BoundaryVector
from magbill.domain.errors import BoundaryConditionError, DimensionMismatchError
from magbill.domain.gauge.potential import PhysicalParams, PotentialSpec, ZeroPotential

logger = logging.getLogger(__name__)

FAMILIES = ("dirichlet", "neumann", "robin", "chiral")
HERMITIAN_TOL = 1e-12

AlphaLike = Union[float, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str
    alpha: Optional[AlphaLike] = None
    beta: Optional[float] = None

    def describe(self) -> str:
        if self.kind in ("dirichlet", "neumann"):
            return self.kind
        alpha = self.alpha if isinstance(self.alpha, Real) else getattr(self.alpha, "__name__", "alpha(s)")
        if self.kind == "robin":
            return f"robin(alpha={alpha})"
        return f"chiral(alpha={alpha}, beta={self.beta})"


def _finite_real(name: str, value) -> float:
    if not isinstance(value, Real) or not np.isfinite(value):
        raise BoundaryConditionError(f"{name} must be a finite real number, got {value!r}")
    return float(value)


def make_bc(kind: str, alpha: Optional[AlphaLike] = None, beta: Optional[float] = None) -> BoundaryCondition:
    kind = kind.lower()
    if kind not in FAMILIES:
        raise BoundaryConditionError(f"unknown boundary condition '{kind}', expected one of {', '.join(FAMILIES)}")
    if kind in ("robin", "chiral"):
        if alpha is None:
            raise BoundaryConditionError(f"{kind} boundary condition needs alpha")
        if not callable(alpha):
            alpha = _finite_real("alpha", alpha)
    if kind == "chiral":
        if beta is None:
            raise BoundaryConditionError("chiral boundary condition needs beta")
        beta = _finite_real("beta", beta)
    if kind in ("dirichlet", "neumann"):
        alpha, beta = None, None
    return BoundaryCondition(kind, alpha, beta)


def sample_alpha(bc: BoundaryCondition, s: np.ndarray) -> np.ndarray:
    """alpha at the arclength coordinates s."""
    if callable(bc.alpha):
        values = np.asarray(bc.alpha(np.asarray(s, dtype=float)))
        if np.iscomplexobj(values):
            if np.any(values.imag != 0):
                raise BoundaryConditionError("alpha(s) must be real")
            values = values.real
        values = np.broadcast_to(values.astype(float), np.shape(s)).copy()
    else:
        values = np.full(np.shape(s), float(bc.alpha))
    if not np.all(np.isfinite(values)):
        raise BoundaryConditionError("alpha(s) is not finite at every chart node")
    return values


def alpha_expression(name: str, perimeter: float) -> Callable[[np.ndarray], np.ndarray]:
    """Named position-dependent alpha profiles usable from experiment configs."""
    if name == "cos_perimeter":
        def cos_perimeter(s):
            return np.cos(2 * np.pi * s / perimeter)
        return cos_perimeter
    if name == "sin_perimeter":
        def sin_perimeter(s):
            return np.sin(2 * np.pi * s / perimeter)
        return sin_perimeter
    raise BoundaryConditionError(f"unknown alpha expression '{name}'")


@dataclass(frozen=True, eq=False)
class BulkToBoundaryOp:
    """
    The pair (T1, T2) over the chart, with the line weights ds it is Hermitian against.

    T2 is diagonal with entries 0 (Dirichlet rows, where T1 is the identity row)
    or 1; diag(ds) T1 is Hermitian.
    """

    T1: np.ndarray
    T2: np.ndarray
    ds: np.ndarray
    tag: str = ""

    def __post_init__(self):
        n = len(self.ds)
        if self.T1.shape != (n, n) or self.T2.shape != (n, n):
            raise DimensionMismatchError(f"T1/T2 must be {n}x{n}, got {self.T1.shape} and {self.T2.shape}")
        t2 = np.diag(self.T2)
        if np.any(self.T2 - np.diag(t2) != 0) or not np.all((t2 == 0) | (t2 == 1)):
            raise BoundaryConditionError("T2 must be diagonal with entries 0 or 1")
        dirichlet = t2 == 0
        if np.any(dirichlet):
            rows = self.T1[dirichlet]
            if np.max(np.abs(rows - np.eye(n)[dirichlet])) > HERMITIAN_TOL:
                raise BoundaryConditionError("rows with T2 = 0 must carry the identity in T1")
        defect = self.hermiticity_defect()
        scale = max(1.0, float(np.max(np.abs(self.weighted_T1()), initial=0.0)))
        if defect > HERMITIAN_TOL * scale:
            raise BoundaryConditionError(f"T1 is not Hermitian on the boundary (defect {defect:.3e})")

    @property
    def size(self) -> int:
        return len(self.ds)

    @property
    def dirichlet_rows(self) -> np.ndarray:
        return np.diag(self.T2) == 0

    def weighted_T1(self) -> np.ndarray:
        return self.ds[:, None] * self.T1

    def hermiticity_defect(self) -> float:
        weighted = self.weighted_T1()
        return float(np.max(np.abs(weighted - weighted.conj().T), initial=0.0))

    def apply(self, psi: np.ndarray, psi_dot: np.ndarray) -> np.ndarray:
        return self.T1 @ psi - self.T2 @ psi_dot


def tangential_difference(component) -> np.ndarray:
    """Centered periodic d/ds on one closed component: (f[k+1] - f[k-1]) / (s[k+1] - s[k-1])."""
    n = component.size
    matrix = np.zeros((n, n))
    k = np.arange(n)
    span = 2.0 * component.ds
    matrix[k, (k + 1) % n] += 1.0 / span
    matrix[k, (k - 1) % n] -= 1.0 / span
    return matrix


def _component_blocks(bc: BoundaryCondition, component, spec: PotentialSpec, params: PhysicalParams):
    n = component.size
    identity = np.eye(n, dtype=complex)
    if bc.kind == "dirichlet":
        return identity, np.zeros((n, n), dtype=complex)
    if bc.kind == "neumann":
        return np.zeros((n, n), dtype=complex), identity
    alpha = sample_alpha(bc, component.s)
    T1 = np.diag(alpha).astype(complex)
    if bc.kind == "chiral" and bc.beta != 0:
        ax, ay = spec.value(component.positions[:, 0], component.positions[:, 1])
        t_dot_a = component.tangent[:, 0] * ax + component.tangent[:, 1] * ay
        T1 = T1 + 1j * bc.beta * tangential_difference(component)
        T1 = T1 + bc.beta * params.coupling * np.diag(t_dot_a)
    return T1, identity


def bc_operators(
    bc: Union[BoundaryCondition, Sequence[BoundaryCondition]],
    chart,
    spec: Optional[PotentialSpec] = None,
    params: PhysicalParams = PhysicalParams(),
) -> BulkToBoundaryOp:
    """
    Assemble (T1, T2) over the whole chart, block diagonal by component.

    A single condition applies to every component; a sequence gives one
    condition per component in chart order.
    """
    spec = spec if spec is not None else ZeroPotential()
    conditions = [bc] * len(chart.components) if isinstance(bc, BoundaryCondition) else list(bc)
    if len(conditions) != len(chart.components):
        raise BoundaryConditionError(
            f"{len(conditions)} boundary conditions given for {len(chart.components)} boundary components"
        )
    n = chart.size
    T1 = np.zeros((n, n), dtype=complex)
    T2 = np.zeros((n, n), dtype=complex)
    for window, component, condition in zip(chart.slices(), chart.components, conditions):
        block1, block2 = _component_blocks(condition, component, spec, params)
        T1[window, window] = block1
        T2[window, window] = block2
    tag = "+".join(c.describe() for c in conditions) + f"|gauge={spec.name}"
    return BulkToBoundaryOp(T1, T2, chart.ds.copy(), tag)


def bc_residual(op: BulkToBoundaryOp, psi, psi_dot) -> float:
    """max |T1 Psi - T2 Psi_dot|."""
    psi, psi_dot = np.asarray(psi), np.asarray(psi_dot)
    if psi.shape != (op.size,) or psi_dot.shape != (op.size,):
        raise DimensionMismatchError(f"boundary data must have {op.size} entries")
    return float(np.max(np.abs(op.apply(psi, psi_dot)), initial=0.0))


def transform_bc(op: BulkToBoundaryOp, chi, chart) -> BulkToBoundaryOp:
    """T_i -> u T_i u^dagger with u the gauge factor at each chart node's anchor."""
    if chart.size != op.size:
        raise DimensionMismatchError(f"operator has {op.size} rows, chart has {chart.size} nodes")
    u = chi.U[chart.anchor]
    T1 = u[:, None] * op.T1 * np.conj(u)[None, :]
    # T2 is diagonal, so it commutes with the gauge factors
    return BulkToBoundaryOp(T1, op.T2.copy(), op.ds, op.tag + "|transformed")


def boundary_vector(values: np.ndarray, chart) -> BoundaryVector:
    return BoundaryVector(np.asarray(values, dtype=complex), chart)
