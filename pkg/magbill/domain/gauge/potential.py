"""
Vector Potential Module
Closed-form vector potentials, their magnetic fields and edge line integrals.
"""
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from magbill.domain.errors import InadmissiblePotentialError

# below this radius an Aharonov-Bohm potential is treated as evaluated at its singularity
AB_CORE_RADIUS = 1e-12
CURL_STEP_FRACTION = 1e-5


@dataclass(frozen=True)
class PhysicalParams:
    hbar: float = 1.0
    e: float = 1.0
    m: float = 1.0

    def __post_init__(self):
        for name in ("hbar", "e", "m"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value}")

    def flux_quantum(self) -> float:
        return 2 * np.pi * self.hbar / self.e

    @property
    def coupling(self) -> float:
        """e / hbar, the factor turning line integrals of A into phases."""
        return self.e / self.hbar

    @property
    def kinetic_prefactor(self) -> float:
        """hbar^2 / 2m."""
        return self.hbar ** 2 / (2 * self.m)


class PotentialSpec:
    """
    Base class of the vector potential variants.

    Subclasses implement `value` and may override `field_strength` (analytic
    curl, None when unknown) and `line_integral` (exact edge integrals; the
    default is the midpoint rule).
    """

    name = "potential"

    def value(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def field_strength(self, x: np.ndarray, y: np.ndarray) -> Optional[np.ndarray]:
        return None

    def line_integral(self, start: np.ndarray, end: np.ndarray) -> np.ndarray:
        start, end = np.atleast_2d(start), np.atleast_2d(end)
        mid = 0.5 * (start + end)
        ax, ay = self.value(mid[:, 0], mid[:, 1])
        delta = end - start
        return ax * delta[:, 0] + ay * delta[:, 1]

    @property
    def has_singularity(self) -> bool:
        return False

    def parts(self) -> Tuple["PotentialSpec", ...]:
        return (self,)

    def __add__(self, other: "PotentialSpec") -> "Superposition":
        return Superposition(tuple(self.parts()) + tuple(other.parts()))


@dataclass(frozen=True)
class ZeroPotential(PotentialSpec):
    name = "none"

    def value(self, x, y):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x), np.zeros_like(x)

    def field_strength(self, x, y):
        return np.zeros_like(np.asarray(x, dtype=float))

    def line_integral(self, start, end):
        return np.zeros(len(np.atleast_2d(start)))


@dataclass(frozen=True)
class Landau(PotentialSpec):
    """A = (0, B x)."""

    B: float
    name = "landau"

    def value(self, x, y):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x), self.B * x

    def field_strength(self, x, y):
        return np.full_like(np.asarray(x, dtype=float), self.B)


@dataclass(frozen=True)
class Symmetric(PotentialSpec):
    """A = (-B y / 2, B x / 2)."""

    B: float
    name = "symmetric"

    def value(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        return -0.5 * self.B * y, 0.5 * self.B * x

    def field_strength(self, x, y):
        return np.full_like(np.asarray(x, dtype=float), self.B)


def wrapped_angle_step(start: np.ndarray, end: np.ndarray) -> np.ndarray:
    """Polar angle increment from start to end, in (-pi, pi]."""
    step = np.arctan2(end[:, 1], end[:, 0]) - np.arctan2(start[:, 1], start[:, 0])
    return np.pi - np.mod(np.pi - step, 2 * np.pi)


@dataclass(frozen=True)
class AharonovBohm(PotentialSpec):
    """Flux line at the origin: A = (phi / 2 pi) (-y, x) / r^2."""

    phi: float
    name = "ab"

    def value(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        r2 = x ** 2 + y ** 2
        if np.any(r2 < AB_CORE_RADIUS ** 2):
            raise InadmissiblePotentialError("Aharonov-Bohm potential evaluated at its singularity")
        scale = self.phi / (2 * np.pi) / r2
        return -scale * y, scale * x

    def field_strength(self, x, y):
        self.value(x, y)
        return np.zeros_like(np.asarray(x, dtype=float))

    def line_integral(self, start, end):
        start, end = np.atleast_2d(start), np.atleast_2d(end)
        self.value(start[:, 0], start[:, 1])
        self.value(end[:, 0], end[:, 1])
        return self.phi / (2 * np.pi) * wrapped_angle_step(start, end)

    @property
    def has_singularity(self) -> bool:
        return True


@dataclass(frozen=True)
class TabulatedPerturbation(PotentialSpec):
    """
    Pure-gauge perturbation A = grad f with f = sum_k a_k sin(kx_k x + ky_k y + p_k).

    The modes are tabulated as rows (a, kx, ky, p). No analytic curl is
    reported, so `curl` falls back to finite differences.
    """

    modes: Tuple[Tuple[float, float, float, float], ...]
    name = "perturbation"

    def _rows(self) -> np.ndarray:
        return np.asarray(self.modes, dtype=float).reshape(-1, 4)

    def scalar(self, x, y) -> np.ndarray:
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        total = np.zeros(np.broadcast(x, y).shape)
        for a, kx, ky, p in self._rows():
            total = total + a * np.sin(kx * x + ky * y + p)
        return total

    def value(self, x, y):
        x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
        ax = np.zeros(np.broadcast(x, y).shape)
        ay = np.zeros_like(ax)
        for a, kx, ky, p in self._rows():
            c = a * np.cos(kx * x + ky * y + p)
            ax = ax + kx * c
            ay = ay + ky * c
        return ax, ay

    def line_integral(self, start, end):
        start, end = np.atleast_2d(start), np.atleast_2d(end)
        return self.scalar(end[:, 0], end[:, 1]) - self.scalar(start[:, 0], start[:, 1])

    @classmethod
    def random(cls, rng: np.random.Generator, amplitude: float, size: float, n_modes: int = 3):
        """Smooth random modes with wavelengths comparable to the domain size."""
        rows = []
        for _ in range(n_modes):
            kx, ky = rng.uniform(-2.0, 2.0, size=2) * np.pi / size
            rows.append((amplitude * rng.uniform(0.5, 1.0), kx, ky, rng.uniform(0, 2 * np.pi)))
        return cls(tuple(tuple(float(v) for v in row) for row in rows))


@dataclass(frozen=True)
class Superposition(PotentialSpec):
    terms: Tuple[PotentialSpec, ...] = field(default_factory=tuple)
    name = "sum"

    def parts(self):
        return self.terms

    def value(self, x, y):
        x = np.asarray(x, dtype=float)
        ax, ay = np.zeros_like(x), np.zeros_like(x)
        for term in self.terms:
            tx, ty = term.value(x, y)
            ax, ay = ax + tx, ay + ty
        return ax, ay

    def field_strength(self, x, y):
        total = np.zeros_like(np.asarray(x, dtype=float))
        for term in self.terms:
            part = term.field_strength(x, y)
            if part is None:
                return None
            total = total + part
        return total

    def line_integral(self, start, end):
        total = np.zeros(len(np.atleast_2d(start)))
        for term in self.terms:
            total = total + term.line_integral(start, end)
        return total

    @property
    def has_singularity(self) -> bool:
        return any(term.has_singularity for term in self.terms)


def zero_potential() -> PotentialSpec:
    return ZeroPotential()


def eval_potential(spec: PotentialSpec, point: Sequence[float]) -> np.ndarray:
    ax, ay = spec.value(np.asarray(point[0], dtype=float), np.asarray(point[1], dtype=float))
    return np.array([float(ax), float(ay)])


def curl_field(spec: PotentialSpec, x: np.ndarray, y: np.ndarray, size: float = 1.0) -> np.ndarray:
    """B = dAy/dx - dAx/dy at many points, analytic where the variant knows it."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    exact = spec.field_strength(x, y)
    if exact is not None:
        return exact
    step = CURL_STEP_FRACTION * size
    _, ay_plus = spec.value(x + step, y)
    _, ay_minus = spec.value(x - step, y)
    ax_plus, _ = spec.value(x, y + step)
    ax_minus, _ = spec.value(x, y - step)
    return (ay_plus - ay_minus) / (2 * step) - (ax_plus - ax_minus) / (2 * step)


def curl(spec: PotentialSpec, point: Sequence[float], size: float = 1.0) -> float:
    return float(curl_field(spec, np.asarray(point[0]), np.asarray(point[1]), size))


def check_admissible(spec: PotentialSpec, grid) -> None:
    """Flux lines must sit inside a hole of the domain."""
    if spec.has_singularity and grid.kind != "annulus":
        raise InadmissiblePotentialError(f"AB requires annulus, got a {grid.kind} grid")


def make_potential(gauge: str, B: float = 0.0, phi: float = 0.0) -> PotentialSpec:
    """Potential named by a config entry: none | landau | symmetric | ab | sum (symmetric B plus AB flux)."""
    if gauge == "none":
        return ZeroPotential()
    if gauge == "landau":
        return Landau(B)
    if gauge == "symmetric":
        return Symmetric(B)
    if gauge == "ab":
        return AharonovBohm(phi)
    if gauge == "sum":
        return Superposition((Symmetric(B), AharonovBohm(phi)))
    raise ValueError(f"unknown gauge '{gauge}', expected none, landau, symmetric, ab or sum")
