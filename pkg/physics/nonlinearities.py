# physics/nonlinearities.py
"""
Physical models for c_K(-Delta)u + V u + N(x, u) = lambda u.

Lattice potentials are evaluated at physical coordinates with period 1, so a
box [-16, 16)^2 holds 32 x 32 lattice cells.
"""

from abc import ABC, abstractmethod
from collections.abc import Callable
from dataclasses import dataclass, field
from functools import lru_cache
from typing import ClassVar

import numpy as np
from numpy.typing import NDArray

from spectral.grids import Field, Grid, check_grid, require_same_grid
from spectral.operators import laplacian_values

KERR = "kerr"
SATURABLE = "saturable"
CUBIC = "cubic"
CUSTOM = "custom"

KIND_CHOICES = [
    (KERR, "Kerr lattice"),
    (SATURABLE, "Saturable lattice"),
    (CUBIC, "Cubic, no potential"),
]

DEFAULT_KINETIC_FACTOR = 0.5


class ModelError(ValueError):
    """Invalid model parameters or an inconsistent custom linearization."""


@lru_cache(maxsize=16)
def _sine_lattice(grid: Grid) -> NDArray[np.float64]:
    # sum_i sin^2(pi x_i)
    return sum(np.sin(np.pi * x) ** 2 for x in grid.coordinates())


@lru_cache(maxsize=16)
def _cosine_lattice(grid: Grid) -> NDArray[np.float64]:
    # prod_i cos^2(pi x_i)
    result = np.ones(grid.shape)
    for x in grid.coordinates():
        result = result * np.cos(np.pi * x) ** 2
    return result


@dataclass(frozen=True, kw_only=True)
class Model(ABC):
    """A potential V(x), a local nonlinearity N(x, u) and its derivative dN/du."""

    kind: ClassVar[str]
    kinetic_factor: float = DEFAULT_KINETIC_FACTOR

    def __post_init__(self):
        if not np.isfinite(self.kinetic_factor) or self.kinetic_factor <= 0:
            raise ModelError(f"kinetic_factor must be positive, got {self.kinetic_factor}.")

    @abstractmethod
    def potential(self, grid: Grid) -> NDArray[np.float64]:
        """V on the grid."""

    @abstractmethod
    def nonlinearity(self, grid: Grid, u: NDArray[np.float64]) -> NDArray[np.float64]:
        """N(x, u) pointwise."""

    @abstractmethod
    def nonlinearity_derivative(self, grid: Grid, u: NDArray[np.float64]) -> NDArray[np.float64]:
        """dN/du (x, u) pointwise."""

    @property
    def cubic_coefficient(self) -> float | None:
        """g when N(x, u) = -g u^3, otherwise None."""
        return None

    def describe(self) -> dict:
        return {"kind": self.kind, "kinetic_factor": self.kinetic_factor}


@dataclass(frozen=True, kw_only=True)
class KerrModel(Model):
    """(V0/2) sum_i sin^2(pi x_i) u - sigma u^3; sigma = +1 focusing, -1 defocusing."""

    kind: ClassVar[str] = KERR
    V0: float
    sigma: int

    def __post_init__(self):
        super().__post_init__()
        if self.sigma not in (1, -1):
            raise ModelError(f"Kerr sigma must be +1 or -1, got {self.sigma}.")

    def potential(self, grid):
        return 0.5 * self.V0 * _sine_lattice(grid)

    def nonlinearity(self, grid, u):
        return -self.sigma * u**3

    def nonlinearity_derivative(self, grid, u):
        return -3.0 * self.sigma * u**2

    @property
    def cubic_coefficient(self):
        return float(self.sigma)

    def describe(self):
        return {**super().describe(), "V0": self.V0, "sigma": self.sigma}


@dataclass(frozen=True, kw_only=True)
class SaturableModel(Model):
    """
    N = V0 u / (1 + A^2 prod_i cos^2(pi x_i) + u^2) with V = 0.

    The lattice acts only through N; the denominator is at least 1.
    """

    kind: ClassVar[str] = SATURABLE
    V0: float
    A: float = 1.0

    def potential(self, grid):
        return np.zeros(grid.shape)

    def _lattice_denominator(self, grid):
        return 1.0 + self.A**2 * _cosine_lattice(grid)

    def nonlinearity(self, grid, u):
        return self.V0 * u / (self._lattice_denominator(grid) + u**2)

    def nonlinearity_derivative(self, grid, u):
        base = self._lattice_denominator(grid)
        return self.V0 * (base - u**2) / (base + u**2) ** 2

    def describe(self):
        return {**super().describe(), "V0": self.V0, "A": self.A}


@dataclass(frozen=True, kw_only=True)
class CubicModel(Model):
    """N = -g u^3 with no potential; the sech family lives here."""

    kind: ClassVar[str] = CUBIC
    coefficient: float = 1.0

    def potential(self, grid):
        return np.zeros(grid.shape)

    def nonlinearity(self, grid, u):
        return -self.coefficient * u**3

    def nonlinearity_derivative(self, grid, u):
        return -3.0 * self.coefficient * u**2

    @property
    def cubic_coefficient(self):
        return float(self.coefficient)

    def describe(self):
        return {**super().describe(), "coefficient": self.coefficient}


@dataclass(frozen=True, kw_only=True)
class CustomModel(Model):
    """
    User-supplied V(coords), N(coords, u) and dN/du(coords, u).

    Call ``verify`` on the grid of interest before solving; it runs the
    central-difference consistency check.
    """

    kind: ClassVar[str] = CUSTOM
    V: Callable = field(repr=False)
    N: Callable = field(repr=False)
    dN_du: Callable = field(repr=False)

    def potential(self, grid):
        return np.broadcast_to(np.asarray(self.V(grid.coordinates()), dtype=float), grid.shape).copy()

    def nonlinearity(self, grid, u):
        return np.asarray(self.N(grid.coordinates(), u), dtype=float)

    def nonlinearity_derivative(self, grid, u):
        return np.asarray(self.dN_du(grid.coordinates(), u), dtype=float)

    def verify(self, grid: Grid, trials: int = 10, seed: int = 0) -> float:
        """Worst observed central-difference order over random (u, w); raises below 1.9."""
        rng = np.random.default_rng(seed)
        worst = np.inf
        for _ in range(trials):
            u = Field(grid, rng.standard_normal(grid.shape))
            w = Field(grid, rng.standard_normal(grid.shape))
            worst = min(worst, finite_difference_order(self, grid, u, w))
        if worst < 1.9:
            raise ModelError(f"dN_du is inconsistent with N: observed order {worst:.2f} < 1.9.")
        return worst


def nonlinear_apply(model: Model, grid: Grid, u: Field) -> Field:
    """V u + N(x, u)."""
    check_grid(grid, u)
    return u.like(model.potential(grid) * u.values + model.nonlinearity(grid, u.values))


def linearization(model: Model, grid: Grid, u: Field) -> Field:
    """L_u = V + dN/du, pointwise."""
    check_grid(grid, u)
    return u.like(model.potential(grid) + model.nonlinearity_derivative(grid, u.values))


def residual_values(model: Model, grid: Grid, u: NDArray[np.float64], lambda_: float) -> NDArray[np.float64]:
    u = u.reshape(grid.shape)
    return (
        model.kinetic_factor * laplacian_values(grid, u)
        + model.potential(grid) * u
        + model.nonlinearity(grid, u)
        - lambda_ * u
    )


def residual(model: Model, grid: Grid, u: Field, lambda_: float) -> Field:
    """r = c_K(-Delta u) + V u + N(x, u) - lambda u."""
    check_grid(grid, u)
    return u.like(residual_values(model, grid, u.values, lambda_))


def finite_difference_order(
    model: Model, grid: Grid, u: Field, w: Field, steps: tuple[float, float] = (1e-3, 1e-4)
) -> float:
    """Observed order of the central difference of N against (L_u - V) w."""
    derivative = model.nonlinearity_derivative(grid, u.values) * w.values
    errors = []
    for eps in steps:
        plus = model.nonlinearity(grid, u.values + eps * w.values)
        minus = model.nonlinearity(grid, u.values - eps * w.values)
        errors.append(np.max(np.abs((plus - minus) / (2.0 * eps) - derivative)))
    if errors[1] == 0.0:
        return np.inf
    return float(np.log(errors[0] / errors[1]) / np.log(steps[0] / steps[1]))


@dataclass(frozen=True, eq=False)
class LinearizedOperator:
    """A = c_K(-Delta) + L_u - lambda at the linearization point u."""

    grid: Grid
    model: Model
    u: Field
    lambda_: float
    Lu: Field
    l: float

    @property
    def size(self) -> int:
        return self.grid.size

    def matvec(self, v: NDArray[np.float64]) -> NDArray[np.float64]:
        """A v on flat values, the form Krylov solvers consume."""
        v = v.reshape(self.grid.shape)
        out = (
            self.model.kinetic_factor * laplacian_values(self.grid, v)
            + (self.Lu.values - self.lambda_) * v
        )
        return out.reshape(-1)


def linearize(model: Model, grid: Grid, u: Field, lambda_: float) -> LinearizedOperator:
    Lu = linearization(model, grid, u)
    return LinearizedOperator(
        grid=grid,
        model=model,
        u=u,
        lambda_=float(lambda_),
        Lu=Lu,
        l=float(np.mean(Lu.values)),
    )


def linop_apply(op: LinearizedOperator, v: Field) -> Field:
    """c_K(-Delta v) + L_u v - lambda v."""
    require_same_grid(op.Lu, v)
    return v.like(op.matvec(v.flat))
