# spectral/grids.py
"""
Periodic-box grids and the real fields living on them.

A grid covers the box [origin_offset, origin_offset + box_len)^d with n points
per side; fields store their values as an n x ... x n float64 array in
row-major (C) order over the index set J = {0, ..., n-1}^d.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import NDArray

MIN_POINTS = 4
SUPPORTED_DIMENSIONS = (1, 2, 3)


class GridError(ValueError):
    """Invalid grid parameters or non-finite field values."""


class GridMismatchError(ValueError):
    """Two operands live on different grids."""


@dataclass(frozen=True)
class Grid:
    """
    Periodic-box discretization and its Fourier dual.

    Grid points are x_j = origin_offset + j*h with h = box_len/n; the Fourier
    index set is K = {-n/2, ..., n/2-1}^d, stored in FFT order.
    """

    d: int
    n: int
    box_len: float
    origin_offset: float = 0.0

    def __post_init__(self):
        if self.d not in SUPPORTED_DIMENSIONS:
            raise GridError(f"Dimension must be one of {SUPPORTED_DIMENSIONS}, got {self.d}.")
        if self.n < MIN_POINTS or self.n % 2:
            raise GridError(f"Points per side must be even and at least {MIN_POINTS}, got {self.n}.")
        if not np.isfinite(self.box_len) or self.box_len <= 0:
            raise GridError(f"Box length must be positive, got {self.box_len}.")

    @property
    def h(self) -> float:
        return self.box_len / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def cell_volume(self) -> float:
        return self.h**self.d

    @cached_property
    def wavenumbers(self) -> NDArray[np.float64]:
        """Integer modes k in FFT order: 0, 1, ..., n/2-1, -n/2, ..., -1."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n)

    @cached_property
    def laplacian_symbol(self) -> NDArray[np.float64]:
        """4*pi^2*|k|^2/L^2 over K, shaped like the grid."""
        k = self.wavenumbers
        squares = np.zeros(self.shape)
        for axis in range(self.d):
            shape = [1] * self.d
            shape[axis] = self.n
            squares = squares + (k**2).reshape(shape)
        return (2.0 * np.pi / self.box_len) ** 2 * squares

    @cached_property
    def axis_points(self) -> NDArray[np.float64]:
        return self.origin_offset + self.h * np.arange(self.n)

    def coordinates(self) -> tuple[NDArray[np.float64], ...]:
        """Physical coordinates of every grid point, one array per axis."""
        return tuple(np.meshgrid(*([self.axis_points] * self.d), indexing="ij"))

    @property
    def center(self) -> float:
        return self.origin_offset + 0.5 * self.box_len


def build_grid(d: int, n: int, box_len: float, centered: bool = True) -> Grid:
    """Grid on [-L/2, L/2)^d when centered, otherwise on [0, L)^d."""
    origin = -0.5 * box_len if centered else 0.0
    return Grid(d=d, n=n, box_len=float(box_len), origin_offset=origin)


@dataclass(frozen=True, eq=False)
class Field:
    """Real grid function; values are float64, shaped like the grid, all finite."""

    grid: Grid
    values: NDArray[np.float64]

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.size != self.grid.size:
            raise GridMismatchError(
                f"Field has {values.size} values but the grid has {self.grid.size} points."
            )
        values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise GridError("Field values must be finite.")
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    @property
    def flat(self) -> NDArray[np.float64]:
        return self.values.reshape(-1)

    def like(self, values) -> "Field":
        return Field(self.grid, values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


def require_same_grid(*fields: Field) -> Grid:
    grid = fields[0].grid
    for other in fields[1:]:
        if other.grid != grid:
            raise GridMismatchError(f"Operands live on different grids: {grid} vs {other.grid}.")
    return grid


def power(f: Field) -> float:
    """P = h^d * sum_j f_j^2, the discrete integral of |u|^2 over the box."""
    return float(f.grid.cell_volume * np.sum(f.values**2))


def inner(f: Field, g: Field) -> float:
    """<f, g> = h^d * sum_j f_j g_j."""
    grid = require_same_grid(f, g)
    return float(grid.cell_volume * np.sum(f.values * g.values))


def participation_ratio(f: Field) -> float:
    """P^2 / int u^4; grows as a soliton delocalizes."""
    quartic = f.grid.cell_volume * np.sum(f.values**4)
    if quartic == 0.0:
        return 0.0
    return float(power(f) ** 2 / quartic)


def reflect(f: Field) -> Field:
    """
    f(-x) on a centered grid: index j maps to (n - j) mod n along every axis.
    """
    values = f.values
    for axis in range(f.grid.d):
        values = np.roll(np.flip(values, axis=axis), 1, axis=axis)
    return f.like(values)


def check_grid(grid: Grid, *fields: Field) -> None:
    for f in fields:
        if f.grid != grid:
            raise GridMismatchError(f"Field lives on {f.grid}, expected {grid}.")
