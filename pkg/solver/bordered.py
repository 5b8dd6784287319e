# solver/bordered.py
"""
Fixed-normalization Newton: |u|_2 = m is imposed and lambda becomes an unknown.

The Jacobian of (r(u, lambda), (|u|^2 - m^2)/2) is the bordered matrix

    [ A        -u ]
    [ <u, .>    0 ]

with A = c_K(-Delta) + L_u - lambda; it is solved by block elimination so only
systems with A reach GMRES.
"""

import logging
from dataclasses import dataclass

import numpy as np

from krylov.gmres import KrylovError, KrylovOptions, KrylovReport, gmres
from physics.nonlinearities import LinearizedOperator, Model, linearize, residual_values
from sparsifier.factorization import PreconditionerError
from sparsifier.preconditioner import build_preconditioner
from spectral.grids import Field, Grid, check_grid, inner, power

from .newton import (
    FAILURE_DIVERGED,
    FAILURE_KRYLOV,
    FAILURE_MAX_NEWTON,
    FAILURE_PRECONDITIONER,
    FAILURE_TURNING_POINT,
    NewtonOptions,
    NewtonReport,
    SolverError,
    tolerance_met,
)

logger = logging.getLogger(__name__)

TURNING_POINT_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class BorderedStep:
    v: Field
    mu: float
    singular: bool
    reports: tuple[KrylovReport, KrylovReport]

    @property
    def gmres_iters(self) -> int:
        return sum(report.iterations for report in self.reports)

    @property
    def converged(self) -> bool:
        return all(report.converged for report in self.reports)


def solve_bordered(
    op: LinearizedOperator,
    u: Field,
    r: Field,
    kappa: float,
    apply_M,
    krylov_opts: KrylovOptions | None = None,
) -> BorderedStep:
    """
    Solve A v - mu u = r, <u, v> = kappa.

    With A w1 = r and A w2 = u, mu = (kappa - <u, w1>) / <u, w2> and
    v = w1 + mu w2. A vanishing <u, w2> marks a turning point of the branch;
    the step is then returned with ``singular`` set and mu = nan.
    """
    check_grid(op.grid, u, r)
    w1, first = gmres(op.matvec, apply_M, r, krylov_opts)
    w2, second = gmres(op.matvec, apply_M, u, krylov_opts)
    denominator = inner(u, w2)
    scale = np.sqrt(power(u) * power(w2))
    if abs(denominator) <= TURNING_POINT_TOLERANCE * scale or scale == 0.0:
        return BorderedStep(v=w1, mu=float("nan"), singular=True, reports=(first, second))
    mu = (kappa - inner(u, w1)) / denominator
    return BorderedStep(
        v=w1.like(w1.values + mu * w2.values),
        mu=float(mu),
        singular=False,
        reports=(first, second),
    )


def newton_fixed_norm(
    model: Model,
    grid: Grid,
    m: float,
    u0: Field,
    lambda0: float,
    opts: NewtonOptions | None = None,
) -> tuple[Field, float, NewtonReport]:
    """Newton on (u, lambda) with power(u) = m^2. Full steps; no damping."""
    opts = opts or NewtonOptions()
    check_grid(grid, u0)
    if not m > 0:
        raise SolverError(f"Target norm must be positive, got {m}.")
    if power(u0) == 0.0:
        raise SolverError("Fixed-norm Newton needs a non-zero initial guess.")

    target = m * m
    u, lambda_ = u0, float(lambda0)
    history, lambdas, gmres_counts = [], [lambda_], []
    failure = failed_step = None
    converged = False

    while True:
        step = len(gmres_counts) + 1
        r = u.like(residual_values(model, grid, u.values, lambda_))
        r_norm = r.max_abs()
        constraint = power(u) - target
        history.append(r_norm)
        if tolerance_met(r_norm, u.values, opts.res_tol) and abs(constraint) <= opts.res_tol * max(1.0, target):
            converged = True
            break
        if step > opts.max_newton:
            failure, failed_step = FAILURE_MAX_NEWTON, opts.max_newton
            break

        op = linearize(model, grid, u, lambda_)
        try:
            precond = build_preconditioner(op, b=opts.stencil_b, w=opts.stencil_w, ordering=opts.ordering)
            bordered = solve_bordered(op, u, r, 0.5 * constraint, precond.apply_values, opts.krylov)
        except PreconditionerError as exc:
            logger.warning("Fixed-norm step %d: %s", step, exc)
            failure, failed_step = FAILURE_PRECONDITIONER, step
            break
        except KrylovError as exc:
            logger.warning("Fixed-norm step %d: %s", step, exc)
            failure, failed_step = FAILURE_KRYLOV, step
            break
        gmres_counts.append(bordered.gmres_iters)
        if bordered.singular:
            logger.warning("Fixed-norm step %d: bordered system singular at lambda=%.6g", step, lambda_)
            failure, failed_step = FAILURE_TURNING_POINT, step
            break
        if not bordered.converged:
            failure, failed_step = FAILURE_KRYLOV, step
            break

        updated = u.values - bordered.v.values
        if not np.all(np.isfinite(updated)) or not np.isfinite(bordered.mu):
            failure, failed_step = FAILURE_DIVERGED, step
            break
        u = u.like(updated)
        lambda_ -= bordered.mu
        lambdas.append(lambda_)
        logger.debug("m=%.6g step=%d lambda=%.10g residual=%.3e", m, step, lambda_, r_norm)

    report = NewtonReport(
        newton_iters=len(lambdas) - 1,
        residual_history=tuple(history),
        gmres_iters_per_step=tuple(gmres_counts),
        converged=converged,
        final_power=power(u),
        failure=failure,
        failed_step=failed_step,
        lambda_history=tuple(lambdas),
    )
    return u, lambda_, report
