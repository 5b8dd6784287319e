# continuation/sweeps.py
"""
lambda continuation with warm starts.

Every point of a path is seeded with the previous converged field; the first
point uses the plan's seed. A failed point ends its path.
"""

import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from physics.nonlinearities import Model
from solver.newton import NewtonOptions, NewtonReport, newton_solve
from spectral.grids import Field, Grid, check_grid, participation_ratio

from .seeds import GaussianSeed

logger = logging.getLogger(__name__)

MAX_REFINEMENTS = 4
LAMBDA_MATCH_TOLERANCE = 1e-12


class PlanError(ValueError):
    """Malformed continuation plan."""


def lambda_path(start: float, stop: float, step: float) -> list[float]:
    """
    start, start +- step, ... up to stop; stop itself always closes the path.

    The step magnitude is used and its sign follows the direction of travel.
    """
    step = abs(float(step))
    if not step > 0:
        raise PlanError("Continuation step must be non-zero.")
    span = float(stop) - float(start)
    count = int(np.floor(abs(span) / step + 1e-9))
    values = [float(start) + np.sign(span) * step * k for k in range(count + 1)]
    if abs(values[-1] - stop) > 1e-9 * step:
        values.append(float(stop))
    else:
        values[-1] = float(stop)
    return values


@dataclass(frozen=True)
class ContinuationPath:
    lambda_values: tuple[float, ...]
    label: str = "path"

    def __post_init__(self):
        values = np.asarray(self.lambda_values, dtype=float)
        if values.size == 0:
            raise PlanError(f"Path '{self.label}' has no lambda values.")
        if not np.all(np.isfinite(values)):
            raise PlanError(f"Path '{self.label}' has non-finite lambda values.")
        steps = np.diff(values)
        if steps.size and not (np.all(steps > 0) or np.all(steps < 0)):
            raise PlanError(f"Path '{self.label}' is not strictly monotone.")
        object.__setattr__(self, "lambda_values", tuple(float(v) for v in values))


@dataclass(frozen=True, eq=False)
class SweepPlan:
    """
    Paths share one seed. ``dump_lambdas`` selects the fields kept in the
    result; None keeps the first and last converged field of every path.
    """

    paths: tuple[ContinuationPath, ...]
    seed: GaussianSeed | Field = field(default_factory=GaussianSeed)
    auto_refine: bool = False
    dump_lambdas: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.paths:
            raise PlanError("A sweep needs at least one path.")

    @classmethod
    def single(cls, lambda_: float, seed=None, **kwargs) -> "SweepPlan":
        return cls(paths=(ContinuationPath((lambda_,), label="single"),), seed=seed or GaussianSeed(), **kwargs)

    def seed_field(self, grid: Grid) -> Field:
        if isinstance(self.seed, Field):
            check_grid(grid, self.seed)
            return self.seed
        return self.seed.build(grid)


@dataclass(frozen=True)
class CurvePoint:
    path: str
    lambda_: float
    power: float
    newton_iters: int
    mean_gmres_iters: float
    converged: bool
    participation_ratio: float
    failure: str | None = None


@dataclass(frozen=True)
class PathFailure:
    path: str
    lambda_: float
    failure: str
    last_good_lambda: float | None

    @property
    def at_first_point(self) -> bool:
        return self.last_good_lambda is None


@dataclass(frozen=True, eq=False)
class CurveResult:
    """Points in path order; kept fields are keyed by (path label, lambda)."""

    points: tuple[CurvePoint, ...] = ()
    fields: dict[tuple[str, float], Field] = field(default_factory=dict)
    failed_paths: tuple[PathFailure, ...] = ()

    @property
    def converged(self) -> bool:
        return not self.failed_paths

    def for_path(self, label: str) -> list[CurvePoint]:
        return [point for point in self.points if point.path == label]


def _point(label: str, lambda_: float, u: Field, report: NewtonReport) -> CurvePoint:
    return CurvePoint(
        path=label,
        lambda_=float(lambda_),
        power=report.final_power,
        newton_iters=report.newton_iters,
        mean_gmres_iters=report.mean_gmres_iters,
        converged=report.converged,
        participation_ratio=participation_ratio(u) if report.converged else float("nan"),
        failure=report.failure,
    )


def _refine(model, grid, opts, label, start_lambda, start_field, target_lambda):
    """
    Retry the step start_lambda -> target_lambda in 2, 4, 8, 16 equal pieces.

    Returns (point, field) pairs for every piece, or None when every level fails.
    """
    for level in range(1, MAX_REFINEMENTS + 1):
        pieces = 2**level
        u, points = start_field, []
        for lambda_ in np.linspace(start_lambda, target_lambda, pieces + 1)[1:]:
            u, report = newton_solve(model, grid, float(lambda_), u, opts)
            points.append((_point(label, lambda_, u, report), u))
            if not report.converged:
                break
        else:
            logger.info("Refined step to lambda=%.6g with %d pieces", target_lambda, pieces)
            return points
    return None


def _wanted(lambda_: float, dump_lambdas: Sequence[float]) -> bool:
    return any(abs(lambda_ - wanted) <= LAMBDA_MATCH_TOLERANCE * max(1.0, abs(wanted)) for wanted in dump_lambdas)


def sweep(
    model: Model,
    grid: Grid,
    plan: SweepPlan,
    opts: NewtonOptions | None = None,
    progress: Callable[[CurvePoint], None] | None = None,
) -> CurveResult:
    """Run every path of the plan in order; see CurveResult for what is kept."""
    opts = opts or NewtonOptions()
    points: list[CurvePoint] = []
    fields: dict[tuple[str, float], Field] = {}
    failures: list[PathFailure] = []

    def record(point: CurvePoint, u: Field) -> None:
        points.append(point)
        if progress is not None:
            progress(point)
        if point.converged and plan.dump_lambdas is not None and _wanted(point.lambda_, plan.dump_lambdas):
            fields[point.path, point.lambda_] = u

    for path in plan.paths:
        u = plan.seed_field(grid)
        last_good: tuple[float, Field] | None = None
        for lambda_ in path.lambda_values:
            trial, report = newton_solve(model, grid, lambda_, u, opts)
            point = _point(path.label, lambda_, trial, report)
            if not report.converged and plan.auto_refine and last_good is not None:
                refined = _refine(model, grid, opts, path.label, last_good[0], last_good[1], lambda_)
                if refined is not None:
                    for extra, extra_field in refined[:-1]:
                        record(extra, extra_field)
                    point, trial = refined[-1]
            record(point, trial)
            if not point.converged:
                failures.append(
                    PathFailure(
                        path=path.label,
                        lambda_=float(lambda_),
                        failure=point.failure or "unknown",
                        last_good_lambda=None if last_good is None else last_good[0],
                    )
                )
                if last_good is None:
                    logger.error(
                        "Path '%s' failed at its first point lambda=%.6g: %s", path.label, lambda_, point.failure
                    )
                else:
                    logger.warning(
                        "Path '%s' stopped at lambda=%.6g; last converged lambda=%.6g",
                        path.label,
                        lambda_,
                        last_good[0],
                    )
                break
            if plan.dump_lambdas is None and last_good is None:
                fields[point.path, point.lambda_] = trial
            u = trial
            last_good = (float(lambda_), trial)
            logger.info(
                "%s lambda=%.6g P=%.10g newton=%d gmres=%.1f",
                path.label,
                lambda_,
                point.power,
                point.newton_iters,
                point.mean_gmres_iters,
            )
        if plan.dump_lambdas is None and last_good is not None:
            fields[path.label, last_good[0]] = last_good[1]

    return CurveResult(points=tuple(points), fields=fields, failed_paths=tuple(failures))
