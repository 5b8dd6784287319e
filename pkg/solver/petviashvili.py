# solver/petviashvili.py
"""
Petviashvili iteration, the spectral renormalization baseline.

For models with N = -g u^3 the equation reads (c_K(-Delta) - lambda) u =
g u^3 - V u. Each sweep divides the transformed right-hand side by the symbol
c_K 4 pi^2 |k|^2/L^2 - lambda and rescales it by M^gamma, where the
stabilizing factor M compares both sides projected onto the current iterate.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from physics.nonlinearities import Model, ModelError
from spectral.grids import Field, Grid, check_grid
from spectral.operators import forward, inverse_real

logger = logging.getLogger(__name__)

DIVERGENCE_BOUND = 1e8
SYMBOL_FLOOR = 1e-8

FAILURE_SINGULAR_SYMBOL = "singular_symbol"
FAILURE_STABILIZING_FACTOR = "stabilizing_factor"
FAILURE_DIVERGED = "diverged"
FAILURE_MAX_ITERS = "max_iters"


@dataclass(frozen=True)
class PetviashviliReport:
    iterations: int
    converged: bool
    increments: tuple[float, ...] = field(repr=False)
    stabilizing_factors: tuple[float, ...] = field(repr=False)
    failure: str | None = None


def petviashvili(
    model: Model,
    grid: Grid,
    lambda_: float,
    u0: Field,
    gamma: float = 1.5,
    max_iters: int = 500,
    tol: float = 1e-10,
) -> tuple[Field, PetviashviliReport]:
    """
    Returns the last iterate and a report; non-convergence is an expected outcome in a band gap.

    lambda uses the same sign as every other solver, c_K(-Delta)u + V u + N = lambda u,
    so the denominator is c_K 4 pi^2 |k|^2/L^2 - lambda. The textbook form
    (-Delta + mu) u = u^3 with mu > 0 corresponds to c_K = 1, g = 1 and lambda = -mu.
    """
    g = model.cubic_coefficient
    if g is None:
        raise ModelError(f"Petviashvili needs a pure cubic nonlinearity; '{model.kind}' is not one.")
    check_grid(grid, u0)

    denominator = model.kinetic_factor * grid.laplacian_symbol - lambda_
    potential = model.potential(grid)
    increments: list[float] = []
    factors: list[float] = []
    u = u0.values.copy()

    def report(converged, failure=None):
        return PetviashviliReport(
            iterations=len(increments),
            converged=converged,
            increments=tuple(increments),
            stabilizing_factors=tuple(factors),
            failure=failure,
        )

    if np.min(np.abs(denominator)) < SYMBOL_FLOOR * np.max(np.abs(denominator)):
        logger.info("Petviashvili: symbol vanishes at lambda=%.6g", lambda_)
        return u0, report(False, FAILURE_SINGULAR_SYMBOL)

    for _ in range(max_iters):
        coefficients = forward(u)
        rhs = forward(g * u**3 - potential * u)
        projected = float(np.sum(np.real(np.conj(coefficients) * rhs)))
        factor = float(np.sum(denominator * np.abs(coefficients) ** 2)) / projected if projected else np.nan
        factors.append(factor)
        if not np.isfinite(factor) or factor <= 0.0:
            return Field(grid, u), report(False, FAILURE_STABILIZING_FACTOR)

        updated = inverse_real(factor**gamma * rhs / denominator, float(np.max(np.abs(u))))
        increment = float(np.max(np.abs(updated - u)))
        increments.append(increment)
        if not np.all(np.isfinite(updated)) or np.max(np.abs(updated)) > DIVERGENCE_BOUND:
            return Field(grid, u), report(False, FAILURE_DIVERGED)
        u = updated
        if increment <= tol:
            logger.debug("Petviashvili converged in %d iterations (M=%.12g)", len(increments), factor)
            return Field(grid, u), report(True)

    logger.info("Petviashvili: no convergence in %d iterations at lambda=%.6g", max_iters, lambda_)
    return Field(grid, u), report(False, FAILURE_MAX_ITERS)
