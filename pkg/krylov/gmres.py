# krylov/gmres.py
"""
Restarted GMRES with left preconditioning.

Solves M A x = M b. Arnoldi uses modified Gram-Schmidt with a second pass when
the new basis vector has lost orthogonality; the small least-squares problem
is kept triangular with Givens rotations so the preconditioned residual is
known at every step without forming x.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy import linalg

from spectral.grids import Field

logger = logging.getLogger(__name__)

Operator = Callable[[NDArray[np.float64]], NDArray[np.float64]]

BREAKDOWN_TOLERANCE = 1e-300
REORTHOGONALIZATION_TOLERANCE = 1e-8


class KrylovError(ArithmeticError):
    """An operator returned non-finite values."""


@dataclass(frozen=True)
class KrylovOptions:
    rel_tol: float = 1e-10
    restart: int = 40
    max_iters: int = 200
    record_history: bool = True

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError(f"rel_tol must lie in (0, 1), got {self.rel_tol}.")
        if self.restart < 1:
            raise ValueError(f"restart must be at least 1, got {self.restart}.")
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be non-negative, got {self.max_iters}.")


@dataclass(frozen=True)
class KrylovReport:
    iterations: int
    preconditioned_residuals: tuple[float, ...] = field(repr=False)
    true_final_residual: float
    converged: bool
    breakdown: bool = False


def _checked(values: NDArray[np.float64], what: str) -> NDArray[np.float64]:
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(values)):
        raise KrylovError(f"{what} produced non-finite values.")
    return values


def _givens(a: float, b: float) -> tuple[float, float, float]:
    radius = float(np.hypot(a, b))
    if radius == 0.0:
        return 1.0, 0.0, 0.0
    return a / radius, b / radius, radius


def _cycle(apply_A, apply_M, r, beta, target, restart, budget):
    """
    One Arnoldi cycle started from the preconditioned residual r.

    Returns the correction, the residual estimates after each step and whether
    the Krylov space became invariant.
    """
    size = r.size
    V = np.zeros((size, restart + 1))
    H = np.zeros((restart + 1, restart))
    cs = np.zeros(restart)
    sn = np.zeros(restart)
    g = np.zeros(restart + 1)
    g[0] = beta
    V[:, 0] = r / beta
    estimates = []
    breakdown = False
    steps = 0

    for j in range(min(restart, budget)):
        w = _checked(apply_M(_checked(apply_A(V[:, j]), "Operator")), "Preconditioner")
        for i in range(j + 1):
            H[i, j] = V[:, i] @ w
            w -= H[i, j] * V[:, i]
        norm = linalg.norm(w)
        drift = V[:, : j + 1].T @ w
        if np.max(np.abs(drift)) > REORTHOGONALIZATION_TOLERANCE * max(norm, BREAKDOWN_TOLERANCE):
            w -= V[:, : j + 1] @ drift
            H[: j + 1, j] += drift
            norm = linalg.norm(w)
        H[j + 1, j] = norm

        for i in range(j):
            upper = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
            H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
            H[i, j] = upper
        cs[j], sn[j], H[j, j] = _givens(H[j, j], H[j + 1, j])
        H[j + 1, j] = 0.0
        g[j + 1] = -sn[j] * g[j]
        g[j] = cs[j] * g[j]

        steps = j + 1
        estimates.append(abs(float(g[j + 1])))
        if norm <= BREAKDOWN_TOLERANCE:
            breakdown = True
            break
        V[:, j + 1] = w / norm
        if estimates[-1] <= target:
            break

    try:
        y = linalg.solve_triangular(H[:steps, :steps], g[:steps], check_finite=False)
    except linalg.LinAlgError as exc:
        raise KrylovError(f"Singular Hessenberg factor after {steps} steps: {exc}") from exc
    return V[:, :steps] @ y, estimates, breakdown


def gmres(
    apply_A: Operator,
    apply_M: Operator,
    rhs: Field | NDArray[np.float64],
    opts: KrylovOptions | None = None,
    x0: Field | NDArray[np.float64] | None = None,
):
    """
    Returns (x, report) with |M(Ax - rhs)| <= rel_tol |M rhs| on convergence.

    ``x`` is a Field when ``rhs`` is one. Non-convergence is reported, never
    raised; non-finite operator output raises KrylovError.
    """
    opts = opts or KrylovOptions()
    b = _checked(rhs.flat if isinstance(rhs, Field) else rhs, "Right-hand side").copy()
    if x0 is None:
        x = np.zeros_like(b)
    else:
        x = _checked(x0.flat if isinstance(x0, Field) else x0, "Initial guess").copy()

    target = opts.rel_tol * linalg.norm(_checked(apply_M(b), "Preconditioner"))
    history: list[float] = []
    iterations = 0
    converged = breakdown = False

    while True:
        r = _checked(apply_M(b - _checked(apply_A(x), "Operator")), "Preconditioner")
        beta = float(linalg.norm(r))
        if not history:
            history.append(beta)
        if beta <= target:
            converged = True
            break
        if breakdown or iterations >= opts.max_iters:
            break
        correction, estimates, breakdown = _cycle(
            apply_A, apply_M, r, beta, target, opts.restart, opts.max_iters - iterations
        )
        x += correction
        iterations += len(estimates)
        history.extend(estimates)

    true_residual = float(linalg.norm(b - apply_A(x)))
    if not converged:
        logger.debug("GMRES stopped after %d iterations at %.3e (target %.3e)", iterations, beta, target)
    report = KrylovReport(
        iterations=iterations,
        preconditioned_residuals=tuple(history) if opts.record_history else (),
        true_final_residual=true_residual,
        converged=converged,
        breakdown=breakdown,
    )
    if isinstance(rhs, Field):
        return rhs.like(x), report
    return x, report
