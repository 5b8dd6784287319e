# sparsifier/factorization.py
"""
Fill-reducing sparse LU of the sparsified matrix P.

The reference ordering is geometric nested dissection on the periodic grid
graph: two nodes are coupled when every periodic index difference is at most
the stencil half-width, so slabs of that width separate a box. A periodic
direction needs two slabs for its first cut. Leaves are ordered first and
each separator after the two halves it splits.
"""

import logging
import time
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy import sparse
from scipy.sparse.linalg import SuperLU, splu

from spectral.grids import Grid

logger = logging.getLogger(__name__)

NESTED_DISSECTION = "nested_dissection"
COLAMD = "colamd"
MMD_AT_PLUS_A = "mmd_at_plus_a"

ORDERING_CHOICES = [
    (NESTED_DISSECTION, "Geometric nested dissection"),
    (COLAMD, "SuperLU COLAMD"),
    (MMD_AT_PLUS_A, "SuperLU minimum degree on A^T + A"),
]

_SUPERLU_PERMC = {
    NESTED_DISSECTION: "NATURAL",
    COLAMD: "COLAMD",
    MMD_AT_PLUS_A: "MMD_AT_PLUS_A",
}

PIVOT_FLOOR = 1e-14
LEAF_SIZE = 64
DIAG_PIVOT_THRESHOLD = 0.1


class PreconditionerError(RuntimeError):
    """P is numerically singular; retrying with a larger stencil may help."""


def _box_indices(grid: Grid, box: list[tuple[int, int]]) -> NDArray[np.int64]:
    ranges = [np.arange(lo, hi) for lo, hi in box]
    mesh = np.meshgrid(*ranges, indexing="ij")
    return np.ravel_multi_index(tuple(m.reshape(-1) for m in mesh), grid.shape)


def nested_dissection_order(grid: Grid, halo: int = 1, leaf_size: int = LEAF_SIZE) -> NDArray[np.int64]:
    """Elimination order (a permutation of 0..n^d-1) for a stencil of half-width ``halo``."""
    halo = max(halo, 1)
    order: list[NDArray[np.int64]] = []

    def min_length(periodic: bool) -> int:
        return 2 * halo + 2 if periodic else halo + 2

    def dissect(box: list[tuple[int, int]], periodic: list[bool]) -> None:
        sizes = [hi - lo for lo, hi in box]
        candidates = [axis for axis in range(grid.d) if sizes[axis] >= min_length(periodic[axis])]
        if np.prod(sizes) <= leaf_size or not candidates:
            order.append(_box_indices(grid, box))
            return

        axis = max(candidates, key=lambda a: sizes[a])
        lo, hi = box[axis]
        separators = []
        if periodic[axis]:
            # the wrap-around neighbours of lo..lo+halo-1 sit in this slab
            separators.append((lo, lo + halo))
            lo += halo
        mid = lo + (hi - lo - halo) // 2
        separators.append((mid, mid + halo))

        flags = list(periodic)
        flags[axis] = False
        for part in ((lo, mid), (mid + halo, hi)):
            child = list(box)
            child[axis] = part
            dissect(child, flags)
        for slab in separators:
            child = list(box)
            child[axis] = slab
            order.append(_box_indices(grid, child))

    dissect([(0, grid.n)] * grid.d, [True] * grid.d)
    return np.concatenate(order)


@dataclass(frozen=True, eq=False)
class Factorization:
    """Solve-ready LU of P, with the symmetric permutation applied before SuperLU."""

    lu: SuperLU
    permutation: NDArray[np.int64] | None
    nnz: int
    fill: float
    setup_seconds: float
    ordering: str

    @property
    def size(self) -> int:
        return self.lu.shape[0]

    def solve(self, y: NDArray[np.float64]) -> NDArray[np.float64]:
        if self.permutation is None:
            return self.lu.solve(y)
        x = np.empty_like(y)
        x[self.permutation] = self.lu.solve(y[self.permutation])
        return x


def factorize(P: sparse.spmatrix, grid: Grid, ordering: str = NESTED_DISSECTION, halo: int = 1) -> Factorization:
    """
    Fill-reducing ordering followed by threshold partial-pivoting LU.

    Raises PreconditionerError when a pivot falls below 1e-14 * |P|_inf.
    """
    if ordering not in _SUPERLU_PERMC:
        raise ValueError(f"Unknown ordering '{ordering}'.")
    started = time.perf_counter()
    matrix = sparse.csr_matrix(P)
    permutation = None
    if ordering == NESTED_DISSECTION:
        permutation = nested_dissection_order(grid, halo)
        matrix = matrix[permutation][:, permutation]
    try:
        lu = splu(
            matrix.tocsc(),
            permc_spec=_SUPERLU_PERMC[ordering],
            diag_pivot_thresh=DIAG_PIVOT_THRESHOLD,
        )
    except RuntimeError as exc:
        raise PreconditionerError(f"Sparse LU failed: {exc}") from exc

    scale = sparse.linalg.norm(matrix, np.inf)
    smallest_pivot = float(np.min(np.abs(lu.U.diagonal())))
    if not np.isfinite(smallest_pivot) or smallest_pivot < PIVOT_FLOOR * scale:
        raise PreconditionerError(
            f"P is numerically singular: smallest pivot {smallest_pivot:.3e} vs |P| {scale:.3e}."
        )

    elapsed = time.perf_counter() - started
    fill = (lu.L.nnz + lu.U.nnz) / max(matrix.nnz, 1)
    logger.debug("Factorized P: n=%d nnz=%d fill=%.2f in %.3fs", matrix.shape[0], matrix.nnz, fill, elapsed)
    return Factorization(
        lu=lu,
        permutation=permutation,
        nnz=int(matrix.nnz),
        fill=float(fill),
        setup_seconds=elapsed,
        ordering=ordering,
    )
