# spectral/operators.py
"""
Pseudospectral operators on periodic grids.

Transforms follow the normalization (F f)_k = n^-d sum_j e^{-2 pi i k.j/n} f_j
and (F^-1 g)_j = sum_k e^{2 pi i j.k/n} g_k, i.e. scipy.fft with
``norm="forward"``. Fields are real; complex arithmetic stays inside the
transform calls and the imaginary residue is checked before it is dropped.
"""

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import fft

from .grids import Field, Grid, require_same_grid

logger = logging.getLogger(__name__)

IMAGINARY_TOLERANCE = 1e-10
SINGULAR_FLOOR_FACTOR = 1e-6
SHIFT_FACTOR = 1e-3


class SpectralError(ArithmeticError):
    """A transform of real data produced a non-negligible imaginary part."""


def forward(values: NDArray[np.float64]) -> NDArray[np.complex128]:
    return fft.fftn(values, norm="forward")


def inverse_real(coefficients: NDArray[np.complex128], reference: float) -> NDArray[np.float64]:
    """F^-1 of coefficients of a real field; ``reference`` scales the realness check."""
    values = fft.ifftn(coefficients, norm="forward")
    scale = max(float(np.max(np.abs(values.real))), reference, np.finfo(float).tiny)
    residue = float(np.max(np.abs(values.imag)))
    if residue > IMAGINARY_TOLERANCE * scale:
        raise SpectralError(f"Imaginary residue {residue:.3e} exceeds {IMAGINARY_TOLERANCE:g} relative.")
    return np.ascontiguousarray(values.real)


def laplacian_values(grid: Grid, values: NDArray[np.float64]) -> NDArray[np.float64]:
    """-Delta applied to raw values shaped like the grid."""
    values = values.reshape(grid.shape)
    coefficients = grid.laplacian_symbol * forward(values)
    return inverse_real(coefficients, float(np.max(np.abs(values))))


def apply_laplacian(f: Field) -> Field:
    """-Delta f = F^-1 diag(4 pi^2 |k|^2 / L^2) F f."""
    return f.like(laplacian_values(f.grid, f.values))


@dataclass(frozen=True, eq=False)
class GreenKernel:
    """
    Inverse of the constant-coefficient operator c_K(-Delta) + (l - lambda + shift).

    ``symbol`` is stored over K in FFT order; ``g`` is the real-space kernel,
    so that G[j, j'] = g[(j - j') mod n].
    """

    grid: Grid
    l: float
    lambda_: float
    kinetic_factor: float
    symbol: NDArray[np.float64]
    g: Field
    shift_applied: float = 0.0

    @property
    def constant_shift(self) -> float:
        """l - lambda + shift, the zero-mode denominator."""
        return self.l - self.lambda_ + self.shift_applied


def _choose_shift(denominator: NDArray[np.float64], floor: float, magnitude: float) -> float:
    # Push the near-zero denominator further in its own direction first
    nearest = float(denominator.flat[np.argmin(np.abs(denominator))])
    direction = 1.0 if nearest >= 0.0 else -1.0
    for candidate in (direction * magnitude, -direction * magnitude):
        if np.min(np.abs(denominator + candidate)) >= floor:
            return candidate
    return direction * magnitude


def build_green_kernel(grid: Grid, l: float, lambda_: float, kinetic_factor: float = 1.0) -> GreenKernel:
    """
    Symbol 1/(c_K 4 pi^2 |k|^2/L^2 + l - lambda) and its real-space kernel.

    When the denominator comes within singular_floor = 1e-6 * max(1, |l - lambda|)
    of zero, a shift of magnitude 1e-3 * (1 + |lambda|) is added and recorded in
    ``shift_applied``; the caller folds the compensating -shift into L_u - l.
    """
    base = l - lambda_
    denominator = kinetic_factor * grid.laplacian_symbol + base
    floor = SINGULAR_FLOOR_FACTOR * max(1.0, abs(base))
    shift = 0.0
    if np.min(np.abs(denominator)) < floor:
        shift = _choose_shift(denominator, floor, SHIFT_FACTOR * (1.0 + abs(lambda_)))
        logger.warning(
            "Green symbol near-singular (l-lambda=%.6g); shifting by %.3e", base, shift
        )
        denominator = denominator + shift
    symbol = 1.0 / denominator
    g = np.real(fft.ifftn(symbol))
    return GreenKernel(
        grid=grid,
        l=float(l),
        lambda_=float(lambda_),
        kinetic_factor=float(kinetic_factor),
        symbol=symbol,
        g=Field(grid, g),
        shift_applied=float(shift),
    )


def green_values(kern: GreenKernel, values: NDArray[np.float64]) -> NDArray[np.float64]:
    values = values.reshape(kern.grid.shape)
    coefficients = kern.symbol * forward(values)
    reference = float(np.max(np.abs(values))) * float(np.max(np.abs(kern.symbol)))
    return inverse_real(coefficients, reference)


def apply_G(kern: GreenKernel, r: Field) -> Field:
    """G r = F^-1 (symbol * F r)."""
    require_same_grid(kern.g, r)
    return r.like(green_values(kern, r.values))
