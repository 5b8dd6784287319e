# sparsifier/preconditioner.py
"""
The sparsifying preconditioner v = P^-1 Q G r.

With A = c_K(-Delta) + L_u - lambda and G the inverse of its constant
coefficient part, A = G^-1 (I + G(L_u - l)). Q annihilates the far field of
G, so Q + QG(L_u - l) is essentially supported on S and its restriction P is
cheap to factor.
"""

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy import sparse

from physics.nonlinearities import LinearizedOperator
from spectral.grids import Field, Grid, check_grid
from spectral.operators import GreenKernel, build_green_kernel, green_values

from .factorization import NESTED_DISSECTION, Factorization, factorize
from .stencils import Stencil, build_stencil

logger = logging.getLogger(__name__)


def _shifted_indices(grid: Grid, offset: NDArray[np.int64]) -> NDArray[np.int64]:
    """Flat index of j + offset (mod n) for every j in row-major order."""
    index = np.indices(grid.shape).reshape(grid.d, -1)
    shifted = (index + offset[:, None]) % grid.n
    return np.ravel_multi_index(tuple(shifted), grid.shape)


def assemble_P(stencil: Stencil, Lu: Field, l: float) -> sparse.csr_matrix:
    """P(j, j+m) = alpha(m) + beta(m) (Lu_{j+m} - l) on S, periodic in every index."""
    grid = stencil.grid
    check_grid(grid, Lu)
    variation = Lu.flat - l
    rows = np.arange(grid.size)
    row_blocks, col_blocks, data_blocks = [], [], []
    for offset, a, b in zip(stencil.offsets, stencil.alpha, stencil.beta):
        cols = _shifted_indices(grid, offset)
        row_blocks.append(rows)
        col_blocks.append(cols)
        data_blocks.append(a + b * variation[cols])
    P = sparse.coo_matrix(
        (np.concatenate(data_blocks), (np.concatenate(row_blocks), np.concatenate(col_blocks))),
        shape=(grid.size, grid.size),
    )
    return P.tocsr()


def apply_Q(stencil: Stencil, values: NDArray[np.float64]) -> NDArray[np.float64]:
    """(Q y)_j = sum_m alpha(m) y_{j+m}."""
    values = values.reshape(stencil.grid.shape)
    out = np.zeros_like(values)
    axes = tuple(range(stencil.grid.d))
    for offset, a in zip(stencil.offsets, stencil.alpha):
        out += a * np.roll(values, tuple(-offset), axis=axes)
    return out


@dataclass(frozen=True)
class PreconditionerStats:
    nnz: int
    fill: float
    setup_seconds: float
    sigma_min: float
    relative_sigma: float
    shift_applied: float


@dataclass(frozen=True, eq=False)
class PrecondState:
    """Everything needed to apply P^-1 Q G; immutable once factorized."""

    stencil: Stencil
    kern: GreenKernel
    P: sparse.csr_matrix = field(repr=False)
    factorization: Factorization = field(repr=False)
    stats: PreconditionerStats
    l_eff: float

    def apply_values(self, r: NDArray[np.float64]) -> NDArray[np.float64]:
        """Flat-array form consumed by the Krylov solver."""
        y = green_values(self.kern, r)
        z = apply_Q(self.stencil, y)
        return self.factorization.solve(z.reshape(-1))


def build_preconditioner(
    op: LinearizedOperator, b: int = 1, w: int = 3, ordering: str = NESTED_DISSECTION
) -> PrecondState:
    """
    Green kernel at l = mean(L_u), stencil, P and its factorization.

    A shift applied to the Green symbol is absorbed into l so that P still
    restricts Q + QG(L_u - l - shift).
    """
    started = time.perf_counter()
    kern = build_green_kernel(op.grid, op.l, op.lambda_, kinetic_factor=op.model.kinetic_factor)
    stencil = build_stencil(kern, b=b, w=w)
    l_eff = op.l + kern.shift_applied
    P = assemble_P(stencil, op.Lu, l_eff)
    factorization = factorize(P, op.grid, ordering=ordering, halo=b)
    stats = PreconditionerStats(
        nnz=factorization.nnz,
        fill=factorization.fill,
        setup_seconds=time.perf_counter() - started,
        sigma_min=stencil.sigma_min,
        relative_sigma=stencil.relative_sigma,
        shift_applied=kern.shift_applied,
    )
    logger.debug(
        "Preconditioner ready: nnz=%d fill=%.2f sigma_min=%.3e setup=%.3fs",
        stats.nnz,
        stats.fill,
        stats.sigma_min,
        stats.setup_seconds,
    )
    return PrecondState(
        stencil=stencil,
        kern=kern,
        P=P,
        factorization=factorization,
        stats=stats,
        l_eff=l_eff,
    )


def apply_preconditioner(state: PrecondState, r: Field) -> Field:
    check_grid(state.stencil.grid, r)
    return r.like(state.apply_values(r.values))
