# solver/newton.py
"""
Newton iteration for c_K(-Delta)u + V u + N(x, u) = lambda u.

Each step linearizes at the current iterate, rebuilds the sparsifying
preconditioner from L_u and solves the correction with preconditioned GMRES.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from krylov.gmres import KrylovError, KrylovOptions, gmres
from physics.nonlinearities import Model, linearize, residual_values
from sparsifier.factorization import NESTED_DISSECTION, PreconditionerError
from sparsifier.preconditioner import build_preconditioner
from spectral.grids import Field, Grid, check_grid, power

logger = logging.getLogger(__name__)

DAMPING_NONE = "none"
DAMPING_BACKTRACKING = "backtracking"

DAMPING_CHOICES = [
    (DAMPING_NONE, "Full Newton steps"),
    (DAMPING_BACKTRACKING, "Halve the step while the residual grows"),
]

FAILURE_MAX_NEWTON = "max_newton"
FAILURE_KRYLOV = "krylov"
FAILURE_PRECONDITIONER = "preconditioner"
FAILURE_DIVERGED = "diverged"
FAILURE_TURNING_POINT = "turning_point"
FAILURE_ZERO_SOLUTION = "zero_solution"

# |u|_inf below this fraction of the seed amplitude counts as the trivial solution
ZERO_SOLUTION_FLOOR = 1e-8


class SolverError(ValueError):
    """Invalid solver input, e.g. a zero initial guess in fixed-norm mode."""


@dataclass(frozen=True)
class NewtonOptions:
    res_tol: float = 1e-8
    max_newton: int = 50
    damping: str = DAMPING_BACKTRACKING
    max_halvings: int = 8
    krylov: KrylovOptions = field(default_factory=KrylovOptions)
    stencil_b: int = 1
    stencil_w: int = 3
    ordering: str = NESTED_DISSECTION

    def __post_init__(self):
        if not self.res_tol > 0:
            raise SolverError(f"res_tol must be positive, got {self.res_tol}.")
        if self.damping not in dict(DAMPING_CHOICES):
            raise SolverError(f"Unknown damping '{self.damping}'.")
        if self.max_newton < 0 or self.max_halvings < 0:
            raise SolverError("max_newton and max_halvings must be non-negative.")


@dataclass(frozen=True)
class NewtonReport:
    newton_iters: int
    residual_history: tuple[float, ...]
    gmres_iters_per_step: tuple[int, ...]
    converged: bool
    final_power: float
    failure: str | None = None
    failed_step: int | None = None
    lambda_history: tuple[float, ...] = ()

    @property
    def mean_gmres_iters(self) -> float:
        if not self.gmres_iters_per_step:
            return 0.0
        return float(np.mean(self.gmres_iters_per_step))


def tolerance_met(residual_norm: float, u_values, res_tol: float) -> bool:
    """|r|_inf <= res_tol * max(1, |u|_inf)."""
    return residual_norm <= res_tol * max(1.0, float(np.max(np.abs(u_values))))


def _line_search(model, grid, lambda_, u, v, r_norm, opts):
    """Trial u - t v; t halves while the residual grows, the last trial is kept."""
    t = 1.0
    for halving in range(opts.max_halvings + 1):
        trial = u - t * v
        r_trial = residual_values(model, grid, trial, lambda_) if np.all(np.isfinite(trial)) else None
        if r_trial is None or not np.all(np.isfinite(r_trial)):
            trial_norm = np.inf
        else:
            trial_norm = float(np.max(np.abs(r_trial)))
        if opts.damping == DAMPING_NONE or trial_norm <= r_norm or halving == opts.max_halvings:
            return trial, r_trial, trial_norm
        t *= 0.5


def newton_solve(
    model: Model, grid: Grid, lambda_: float, u0: Field, opts: NewtonOptions | None = None
) -> tuple[Field, NewtonReport]:
    """
    Newton with the sparsifying preconditioner rebuilt each step.

    Failures (iteration cap, GMRES, preconditioner, divergence) come back as a
    non-converged report holding the last finite iterate. u = 0 solves the
    equation at every lambda, so collapsing onto it from a non-zero seed is
    reported as a failure too.
    """
    opts = opts or NewtonOptions()
    check_grid(grid, u0)
    u = u0.values.copy()
    seed_amplitude = float(np.max(np.abs(u)))
    r = residual_values(model, grid, u, lambda_)
    r_norm = float(np.max(np.abs(r)))
    history = [r_norm]
    gmres_counts: list[int] = []
    failure = failed_step = None
    converged = False

    while True:
        step = len(gmres_counts) + 1
        if tolerance_met(r_norm, u, opts.res_tol):
            converged = True
            break
        if step > opts.max_newton:
            failure, failed_step = FAILURE_MAX_NEWTON, opts.max_newton
            break
        op = linearize(model, grid, Field(grid, u), lambda_)
        try:
            precond = build_preconditioner(op, b=opts.stencil_b, w=opts.stencil_w, ordering=opts.ordering)
            v, krylov_report = gmres(op.matvec, precond.apply_values, r.reshape(-1), opts.krylov)
        except PreconditionerError as exc:
            logger.warning("Newton step %d: %s", step, exc)
            failure, failed_step = FAILURE_PRECONDITIONER, step
            break
        except KrylovError as exc:
            logger.warning("Newton step %d: %s", step, exc)
            failure, failed_step = FAILURE_KRYLOV, step
            break
        gmres_counts.append(krylov_report.iterations)
        if not krylov_report.converged:
            logger.warning(
                "Newton step %d: GMRES did not converge in %d iterations", step, krylov_report.iterations
            )
            failure, failed_step = FAILURE_KRYLOV, step
            break

        trial, r_trial, trial_norm = _line_search(model, grid, lambda_, u, v.reshape(grid.shape), r_norm, opts)
        if not np.isfinite(trial_norm):
            failure, failed_step = FAILURE_DIVERGED, step
            break
        u, r, r_norm = trial, r_trial, trial_norm
        history.append(r_norm)
        logger.debug(
            "lambda=%.6g step=%d residual=%.3e gmres=%d", lambda_, step, r_norm, krylov_report.iterations
        )

    if converged and float(np.max(np.abs(u))) <= ZERO_SOLUTION_FLOOR * seed_amplitude:
        logger.warning("Newton collapsed onto u = 0 at lambda=%.6g; try a narrower or stronger seed", lambda_)
        converged = False
        failure, failed_step = FAILURE_ZERO_SOLUTION, len(history) - 1

    solution = Field(grid, u)
    report = NewtonReport(
        newton_iters=len(history) - 1,
        residual_history=tuple(history),
        gmres_iters_per_step=tuple(gmres_counts),
        converged=converged,
        final_power=power(solution),
        failure=failure,
        failed_step=failed_step,
    )
    if not converged:
        logger.info("Newton failed at lambda=%.6g: %s (step %s)", lambda_, failure, report.failed_step)
    return solution, report
