# sparsifier/stencils.py
"""
Sparsifying stencils.

G is a periodic convolution, so every row of Q is a translate of one stencil
alpha over mu = {m : |m|_inf <= b}. alpha is the left singular vector of the
kernel block G(mu, C) for its smallest singular value, where C is the annulus
{m : b < |m|_inf <= b + w}; this makes Q(j, mu) G(mu, mu^c) small.
"""

import itertools
import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

from spectral.grids import Grid
from spectral.operators import GreenKernel

logger = logging.getLogger(__name__)

QUALITY_THRESHOLD = 1e-4


class StencilError(ValueError):
    """Stencil sizes incompatible with the grid."""


def offsets_within(d: int, radius: int) -> NDArray[np.int64]:
    """All m with |m|_inf <= radius, lexicographic, shape (count, d)."""
    span = range(-radius, radius + 1)
    return np.array(list(itertools.product(span, repeat=d)), dtype=np.int64).reshape(-1, d)


def annulus_offsets(d: int, b: int, w: int) -> NDArray[np.int64]:
    outer = offsets_within(d, b + w)
    return outer[np.max(np.abs(outer), axis=1) > b]


def kernel_block(kern: GreenKernel, rows: NDArray[np.int64], cols: NDArray[np.int64]) -> NDArray[np.float64]:
    """Entries g((m - c) mod n) for m in rows, c in cols."""
    n = kern.grid.n
    differences = (rows[:, None, :] - cols[None, :, :]) % n
    return kern.g.values[tuple(np.moveaxis(differences, -1, 0))]


@dataclass(frozen=True, eq=False)
class Stencil:
    """One row of Q (alpha) and of QG restricted to mu (beta), over ``offsets``."""

    grid: Grid
    b: int
    w: int
    offsets: NDArray[np.int64]
    alpha: NDArray[np.float64]
    beta: NDArray[np.float64]
    sigma_min: float
    block_norm: float

    @property
    def relative_sigma(self) -> float:
        return self.sigma_min / self.block_norm if self.block_norm else 0.0

    @property
    def degraded(self) -> bool:
        return self.relative_sigma > QUALITY_THRESHOLD

    @property
    def center_index(self) -> int:
        return int(np.flatnonzero(np.all(self.offsets == 0, axis=1))[0])


def build_stencil(kern: GreenKernel, b: int = 1, w: int = 3) -> Stencil:
    grid = kern.grid
    if b < 0 or w < 1:
        raise StencilError(f"Need b >= 0 and w >= 1, got b={b}, w={w}.")
    if 2 * (b + w) + 1 > grid.n:
        raise StencilError(f"Grid with n={grid.n} is too small for b+w={b + w}.")
    mu = offsets_within(grid.d, b)
    annulus = annulus_offsets(grid.d, b, w)
    if len(mu) >= len(annulus):
        raise StencilError(
            f"Annulus has {len(annulus)} columns but the stencil has {len(mu)} unknowns; increase w."
        )

    block = kernel_block(kern, mu, annulus)
    left, singular, _ = linalg.svd(block, full_matrices=False)
    alpha = left[:, -1].copy()
    center = int(np.flatnonzero(np.all(mu == 0, axis=1))[0])
    if alpha[center] < 0:
        alpha = -alpha
    beta = alpha @ kernel_block(kern, mu, mu)

    stencil = Stencil(
        grid=grid,
        b=b,
        w=w,
        offsets=mu,
        alpha=alpha,
        beta=beta,
        sigma_min=float(singular[-1]),
        block_norm=float(singular[0]),
    )
    if stencil.degraded:
        logger.warning(
            "Stencil quality degraded: sigma_min/|G(mu,C)| = %.3e > %.0e; consider b=%d",
            stencil.relative_sigma,
            QUALITY_THRESHOLD,
            b + 1,
        )
    return stencil
