# runs/management/commands/solitons.py
"""
manage.py solitons {solve,sweep,fixed-norm,petviashvili,presets}

Exit status: 0 on success, 1 when a solver does not converge, 2 for usage or
configuration errors. Per-point progress goes to stderr.
"""

import json
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from continuation.sweeps import CurvePoint, CurveResult, sweep
from physics.nonlinearities import ModelError
from runs.config import ConfigError, parse_config
from runs.outputs import OutputError, emit_outputs, write_field
from runs.presets import describe_presets
from solver.bordered import newton_fixed_norm
from solver.newton import SolverError, newton_solve
from solver.petviashvili import petviashvili
from spectral.grids import participation_ratio

USAGE_ERROR = 2
NOT_CONVERGED = 1


class Command(BaseCommand):
    help = "Compute gap solitons: single solves, lambda sweeps, fixed-norm solves and the Petviashvili baseline."

    requires_system_checks = []

    def add_arguments(self, parser):
        subcommands = parser.add_subparsers(dest="subcommand", required=True)

        def runnable(name, help_text):
            sub = subcommands.add_parser(name, help=help_text)
            source = sub.add_mutually_exclusive_group(required=True)
            source.add_argument("--preset", help="Built-in configuration (see 'presets').")
            source.add_argument("--config", type=Path, help="JSON run-config file.")
            sub.add_argument("--out", type=Path, help="Output directory (overrides output.directory).")
            return sub

        solve = runnable("solve", "Newton solve at one lambda.")
        solve.add_argument("--lambda", dest="lambda_", type=float, help="Defaults to the first lambda of the plan.")

        runnable("sweep", "Continuation along the plan's lambda paths.")

        fixed = runnable("fixed-norm", "Bordered Newton with |u|_2 = m and lambda unknown.")
        fixed.add_argument("--norm", type=float, required=True, help="Target L2 norm m.")
        fixed.add_argument("--lambda0", type=float, help="Initial lambda; defaults to the first lambda of the plan.")

        baseline = runnable("petviashvili", "Petviashvili iteration (pure cubic models).")
        baseline.add_argument("--lambda", dest="lambda_", type=float, help="Defaults to the first lambda of the plan.")
        baseline.add_argument("--gamma", type=float, default=1.5)
        baseline.add_argument("--max-iters", dest="max_iters", type=int, default=500)
        baseline.add_argument("--tol", type=float, default=1e-10)

        subcommands.add_parser("presets", help="List built-in configurations.")

    def handle(self, *args, **options):
        subcommand = options["subcommand"]
        if subcommand == "presets":
            for preset in describe_presets():
                self.stdout.write(f"{preset['name']:28s} {preset['description']}")
            return

        config = self.load_config(options)
        out_dir = options.get("out") or config.output_dir
        handler = getattr(self, f"handle_{subcommand.replace('-', '_')}")
        try:
            handler(config, out_dir, options)
        except OutputError as exc:
            raise CommandError(str(exc), returncode=USAGE_ERROR)

    # -----------------------------
    # Helpers
    # -----------------------------
    def load_config(self, options):
        if options.get("preset"):
            text = json.dumps({"preset": options["preset"]})
        else:
            try:
                text = options["config"].read_text()
            except OSError as exc:
                raise CommandError(f"{options['config']}: {exc.strerror or exc}", returncode=USAGE_ERROR)
        try:
            return parse_config(text)
        except ConfigError as exc:
            raise CommandError(f"Invalid configuration:\n{exc}", returncode=USAGE_ERROR)

    def progress(self, point: CurvePoint):
        self.stderr.write(
            f"[{point.path}] lambda={point.lambda_:.10g} P={point.power:.10g} "
            f"newton={point.newton_iters} gmres={point.mean_gmres_iters:.1f} "
            f"{'ok' if point.converged else 'FAILED (' + str(point.failure) + ')'}"
        )

    @staticmethod
    def first_lambda(config):
        return config.plan.paths[0].lambda_values[0]

    # -----------------------------
    # Subcommands
    # -----------------------------
    def handle_solve(self, config, out_dir, options):
        lambda_ = options.get("lambda_")
        lambda_ = self.first_lambda(config) if lambda_ is None else lambda_
        seed = config.plan.seed_field(config.grid)
        u, report = newton_solve(config.model, config.grid, lambda_, seed, config.options)
        point = CurvePoint(
            path="solve",
            lambda_=lambda_,
            power=report.final_power,
            newton_iters=report.newton_iters,
            mean_gmres_iters=report.mean_gmres_iters,
            converged=report.converged,
            participation_ratio=participation_ratio(u),
            failure=report.failure,
        )
        self.progress(point)
        fields = {(point.path, lambda_): u} if report.converged else {}
        emit_outputs(CurveResult(points=(point,), fields=fields), out_dir, config.model)
        if not report.converged:
            raise CommandError(
                f"Newton did not converge at lambda={lambda_:g}: {report.failure} at step {report.failed_step}.",
                returncode=NOT_CONVERGED,
            )
        self.stdout.write(
            f"Converged at lambda={lambda_:.10g}: P={report.final_power:.12g}, "
            f"{report.newton_iters} Newton steps, {report.mean_gmres_iters:.1f} GMRES iterations per step."
        )

    def handle_sweep(self, config, out_dir, options):
        result = sweep(config.model, config.grid, config.plan, config.options, progress=self.progress)
        emit_outputs(result, out_dir, config.model)
        if result.failed_paths:
            details = "; ".join(
                f"{failure.path} at lambda={failure.lambda_:g} ({failure.failure}, last good "
                f"{'none' if failure.at_first_point else format(failure.last_good_lambda, 'g')})"
                for failure in result.failed_paths
            )
            raise CommandError(f"Sweep incomplete: {details}.", returncode=NOT_CONVERGED)
        self.stdout.write(f"Sweep complete: {len(result.points)} point(s) written to {out_dir}.")

    def handle_fixed_norm(self, config, out_dir, options):
        lambda0 = options.get("lambda0")
        lambda0 = self.first_lambda(config) if lambda0 is None else lambda0
        try:
            u, lambda_, report = newton_fixed_norm(
                config.model, config.grid, options["norm"], config.plan.seed_field(config.grid), lambda0, config.options
            )
        except SolverError as exc:
            raise CommandError(str(exc), returncode=USAGE_ERROR)
        point = CurvePoint(
            path="fixed-norm",
            lambda_=lambda_,
            power=report.final_power,
            newton_iters=report.newton_iters,
            mean_gmres_iters=report.mean_gmres_iters,
            converged=report.converged,
            participation_ratio=participation_ratio(u),
            failure=report.failure,
        )
        self.progress(point)
        fields = {(point.path, lambda_): u} if report.converged else {}
        emit_outputs(CurveResult(points=(point,), fields=fields), out_dir, config.model)
        if not report.converged:
            raise CommandError(
                f"Fixed-norm Newton did not converge: {report.failure} at step {report.failed_step}.",
                returncode=NOT_CONVERGED,
            )
        self.stdout.write(f"Converged: lambda={lambda_:.12g} for |u|_2={options['norm']:g}.")

    def handle_petviashvili(self, config, out_dir, options):
        lambda_ = options.get("lambda_")
        lambda_ = self.first_lambda(config) if lambda_ is None else lambda_
        try:
            u, report = petviashvili(
                config.model,
                config.grid,
                lambda_,
                config.plan.seed_field(config.grid),
                gamma=options["gamma"],
                max_iters=options["max_iters"],
                tol=options["tol"],
            )
        except ModelError as exc:
            raise CommandError(str(exc), returncode=USAGE_ERROR)
        if not report.converged:
            raise CommandError(
                f"Petviashvili did not converge at lambda={lambda_:g}: {report.failure} "
                f"after {report.iterations} iterations.",
                returncode=NOT_CONVERGED,
            )
        path = write_field(u, lambda_, out_dir, config.model, method="petviashvili", iterations=report.iterations)
        self.stdout.write(f"Converged in {report.iterations} iterations; field written to {path}.")
