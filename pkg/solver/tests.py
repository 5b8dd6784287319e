import numpy as np
from django.test import SimpleTestCase

from krylov.gmres import KrylovOptions
from physics.nonlinearities import CubicModel, ModelError, SaturableModel, linearize, residual
from sparsifier.preconditioner import build_preconditioner
from spectral.grids import Field, build_grid, inner, power, reflect

from .bordered import newton_fixed_norm, solve_bordered
from .newton import FAILURE_MAX_NEWTON, FAILURE_ZERO_SOLUTION, NewtonOptions, SolverError, newton_solve
from .petviashvili import FAILURE_SINGULAR_SYMBOL, petviashvili


def sech(x):
    return 1.0 / np.cosh(x)


class SechTestCase(SimpleTestCase):
    """-u'' - g u^3 = lambda u on a line long enough for sech tails to vanish."""

    def setUp(self):
        self.grid = build_grid(1, 512, 40.0)
        self.x = self.grid.coordinates()[0]
        self.model = CubicModel(coefficient=1.0, kinetic_factor=1.0)
        self.seed = Field(self.grid, 1.2 * sech(0.9 * self.x))

    def exact(self, lambda_=-1.0, coefficient=1.0):
        kappa = np.sqrt(-lambda_)
        return kappa * np.sqrt(2.0 / coefficient) * sech(kappa * self.x)


class NewtonTests(SechTestCase):
    def test_recovers_the_sech_soliton(self):
        u, report = newton_solve(self.model, self.grid, -1.0, self.seed)
        self.assertTrue(report.converged)
        self.assertIsNone(report.failure)
        self.assertLessEqual(np.max(np.abs(u.values - self.exact())), 1e-6)
        self.assertAlmostEqual(report.final_power, 4.0, places=6)
        self.assertEqual(len(report.gmres_iters_per_step), report.newton_iters)

    def test_residual_decays_quadratically(self):
        _, report = newton_solve(self.model, self.grid, -1.0, self.seed)
        history = report.residual_history
        self.assertGreaterEqual(len(history), 3)
        for before, after in zip(history, history[1:]):
            if before < 0.1:
                self.assertLessEqual(after, 100.0 * before**2 + 1e-9 * before + 1e-11)

    def test_reported_residual_is_the_true_residual(self):
        u, report = newton_solve(self.model, self.grid, -1.0, self.seed)
        r = residual(self.model, self.grid, u, -1.0)
        self.assertAlmostEqual(r.max_abs(), report.residual_history[-1], delta=1e-14)
        self.assertLessEqual(r.max_abs(), 1e-8 * max(1.0, u.max_abs()))

    def test_even_seed_gives_an_even_solution(self):
        u, _ = newton_solve(self.model, self.grid, -1.0, self.seed)
        np.testing.assert_allclose(reflect(u).values, u.values, atol=1e-10)

    def test_zero_seed_is_already_converged(self):
        u, report = newton_solve(self.model, self.grid, -1.0, Field.zeros(self.grid))
        self.assertTrue(report.converged)
        self.assertEqual(report.newton_iters, 0)
        self.assertEqual(report.final_power, 0.0)
        self.assertEqual(u.max_abs(), 0.0)

    def test_collapse_onto_the_zero_solution_is_a_failure(self):
        # a weak seed sits in the linear regime, where Newton contracts to u = 0
        weak = Field(self.grid, 0.05 * sech(self.x))
        with self.assertLogs("solver.newton", level="WARNING"):
            u, report = newton_solve(self.model, self.grid, -1.0, weak)
        self.assertFalse(report.converged)
        self.assertEqual(report.failure, FAILURE_ZERO_SOLUTION)
        self.assertEqual(report.failed_step, report.newton_iters)
        self.assertLess(u.max_abs(), 1e-9)

    def test_iteration_cap_is_a_reported_failure(self):
        u, report = newton_solve(self.model, self.grid, -1.0, self.seed, NewtonOptions(max_newton=1))
        self.assertFalse(report.converged)
        self.assertEqual(report.failure, FAILURE_MAX_NEWTON)
        self.assertEqual(report.failed_step, 1)
        self.assertEqual(report.newton_iters, 1)
        self.assertTrue(np.all(np.isfinite(u.values)))

    def test_options_are_validated(self):
        with self.assertRaises(SolverError):
            NewtonOptions(damping="wolfe")
        with self.assertRaises(SolverError):
            NewtonOptions(res_tol=0.0)


class FixedNormTests(SechTestCase):
    def setUp(self):
        super().setUp()
        self.model = CubicModel(coefficient=2.0, kinetic_factor=1.0)

    def test_exact_solution_stays_put(self):
        start = Field(self.grid, self.exact(coefficient=2.0))
        u, lambda_, report = newton_fixed_norm(self.model, self.grid, np.sqrt(power(start)), start, -1.0)
        self.assertTrue(report.converged)
        self.assertLessEqual(report.newton_iters, 2)
        self.assertAlmostEqual(lambda_, -1.0, delta=1e-8)

    def test_finds_the_eigenvalue_for_a_given_norm(self):
        # P = 2 sqrt(-lambda) for g = 2
        seed = Field(self.grid, 1.1 * sech(0.95 * self.x))
        u, lambda_, report = newton_fixed_norm(self.model, self.grid, np.sqrt(2.0), seed, -0.8)
        self.assertTrue(report.converged)
        self.assertAlmostEqual(lambda_, -1.0, delta=1e-7)
        self.assertAlmostEqual(power(u), 2.0, delta=3e-8)
        self.assertEqual(report.lambda_history[0], -0.8)
        self.assertEqual(report.lambda_history[-1], lambda_)
        self.assertLessEqual(np.max(np.abs(u.values - self.exact(coefficient=2.0))), 1e-6)

    def test_rejects_bad_targets(self):
        with self.assertRaises(SolverError):
            newton_fixed_norm(self.model, self.grid, 0.0, self.seed, -1.0)
        with self.assertRaises(SolverError):
            newton_fixed_norm(self.model, self.grid, 1.0, Field.zeros(self.grid), -1.0)


class BorderedSystemTests(SimpleTestCase):
    def test_block_elimination_matches_dense_bordered_solve(self):
        grid = build_grid(1, 32, 10.0)
        x = grid.coordinates()[0]
        u = Field(grid, 0.8 * sech(x))
        r = Field(grid, np.random.default_rng(21).standard_normal(32))
        kappa = 0.3
        op = linearize(CubicModel(coefficient=1.0, kinetic_factor=1.0), grid, u, lambda_=-1.3)
        precond = build_preconditioner(op)
        step = solve_bordered(op, u, r, kappa, precond.apply_values, KrylovOptions(rel_tol=1e-13))

        A = np.column_stack([op.matvec(np.eye(32)[j]) for j in range(32)])
        bordered = np.zeros((33, 33))
        bordered[:32, :32] = A
        bordered[:32, 32] = -u.values
        bordered[32, :32] = grid.cell_volume * u.values
        expected = np.linalg.solve(bordered, np.r_[r.values, kappa])

        self.assertFalse(step.singular)
        self.assertTrue(step.converged)
        np.testing.assert_allclose(step.v.values, expected[:32], atol=1e-9 * np.abs(expected).max())
        self.assertAlmostEqual(step.mu, expected[32], delta=1e-9 * np.abs(expected).max())
        self.assertAlmostEqual(inner(u, step.v), kappa, delta=1e-10)


class PetviashviliTests(SechTestCase):
    def test_agrees_with_newton_and_the_exact_soliton(self):
        u, report = petviashvili(self.model, self.grid, -1.0, self.seed)
        self.assertTrue(report.converged)
        self.assertLessEqual(np.max(np.abs(u.values - self.exact())), 1e-6)
        newton_u, _ = newton_solve(self.model, self.grid, -1.0, self.seed)
        self.assertLessEqual(np.max(np.abs(u.values - newton_u.values)), 1e-6)

    def test_stabilizing_factor_tends_to_one(self):
        _, report = petviashvili(self.model, self.grid, -1.0, self.seed)
        self.assertAlmostEqual(report.stabilizing_factors[-1], 1.0, delta=1e-8)
        self.assertEqual(len(report.increments), report.iterations)

    def test_vanishing_symbol_is_reported(self):
        lambda_ = float(self.grid.laplacian_symbol[3])
        u, report = petviashvili(self.model, self.grid, lambda_, self.seed)
        self.assertFalse(report.converged)
        self.assertEqual(report.failure, FAILURE_SINGULAR_SYMBOL)
        self.assertIs(u, self.seed)

    def test_needs_a_cubic_nonlinearity(self):
        with self.assertRaises(ModelError):
            petviashvili(SaturableModel(V0=36.3), self.grid, 1.0, self.seed)
