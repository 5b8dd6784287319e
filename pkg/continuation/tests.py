import numpy as np
from django.test import SimpleTestCase

from physics.nonlinearities import CubicModel
from solver.newton import FAILURE_MAX_NEWTON, NewtonOptions, newton_solve
from spectral.grids import Field, build_grid, power

from .seeds import GaussianSeed, SeedError, gaussian_seed
from .sweeps import ContinuationPath, PlanError, SweepPlan, lambda_path, sweep


class SeedTests(SimpleTestCase):
    def test_discrete_power_matches_the_target(self):
        grid = build_grid(2, 64, 16.0)
        for target in (4.0, 0.4):
            with self.subTest(target=target):
                seed = gaussian_seed(grid, sigma=1.0, target_power=target)
                self.assertAlmostEqual(power(seed) / target, 1.0, places=12)

    def test_peak_sits_at_the_box_center(self):
        grid = build_grid(2, 32, 8.0)
        seed = GaussianSeed(sigma=0.7, target_power=1.0).build(grid)
        self.assertEqual(np.unravel_index(np.argmax(seed.values), grid.shape), (16, 16))

    def test_narrow_gaussian_power_matches_the_continuum_integral(self):
        grid = build_grid(2, 128, 16.0)
        x, y = grid.coordinates()
        c, sigma = 1.3, 0.8
        f = Field(grid, c * np.exp(-(x**2 + y**2) / (2 * sigma**2)))
        self.assertAlmostEqual(power(f) / (c**2 * np.pi * sigma**2), 1.0, places=10)

    def test_invalid_parameters(self):
        with self.assertRaises(SeedError):
            GaussianSeed(sigma=0.0)
        with self.assertRaises(SeedError):
            gaussian_seed(build_grid(1, 8, 1.0), target_power=-1.0)


class PlanTests(SimpleTestCase):
    def test_lambda_path_closes_on_the_stop_value(self):
        self.assertEqual(lambda_path(-1.0, -2.0, 0.25), [-1.0, -1.25, -1.5, -1.75, -2.0])
        self.assertEqual(lambda_path(0.0, 1.0, 0.3)[-1], 1.0)
        self.assertEqual(len(lambda_path(0.0, 1.0, 0.3)), 5)
        self.assertEqual(lambda_path(0.0, 11.7498, 0.25)[-2:], [11.5, 11.7498])
        self.assertEqual(lambda_path(2.0, 2.0, 0.5), [2.0])

    def test_step_sign_follows_the_direction(self):
        self.assertEqual(lambda_path(1.0, 0.0, -0.5), [1.0, 0.5, 0.0])
        self.assertEqual(lambda_path(1.0, 0.0, 0.5), [1.0, 0.5, 0.0])
        with self.assertRaises(PlanError):
            lambda_path(0.0, 1.0, 0.0)

    def test_paths_must_be_monotone_and_plans_non_empty(self):
        with self.assertRaises(PlanError):
            ContinuationPath((0.0, 1.0, 0.5))
        with self.assertRaises(PlanError):
            ContinuationPath(())
        with self.assertRaises(PlanError):
            SweepPlan(paths=())


class SweepTests(SimpleTestCase):
    """-u'' - 2u^3 = lambda u: the sech family with P = 2 sqrt(-lambda)."""

    def setUp(self):
        self.grid = build_grid(1, 512, 40.0)
        self.model = CubicModel(coefficient=2.0, kinetic_factor=1.0)
        self.seed = GaussianSeed(sigma=1.0, target_power=2.0)
        path = ContinuationPath(tuple(lambda_path(-1.0, -2.0, 0.25)), label="down")
        self.plan = SweepPlan(paths=(path,), seed=self.seed)

    def test_single_point_equals_a_direct_solve(self):
        result = sweep(self.model, self.grid, SweepPlan.single(-1.0, seed=self.seed))
        u, report = newton_solve(self.model, self.grid, -1.0, self.seed.build(self.grid))
        self.assertEqual(len(result.points), 1)
        self.assertEqual(result.points[0].power, report.final_power)
        self.assertEqual(result.points[0].newton_iters, report.newton_iters)
        np.testing.assert_array_equal(result.fields["single", -1.0].values, u.values)

    def test_follows_the_sech_family(self):
        seen = []
        result = sweep(self.model, self.grid, self.plan, progress=seen.append)
        self.assertTrue(result.converged)
        self.assertEqual([point.lambda_ for point in result.points], [-1.0, -1.25, -1.5, -1.75, -2.0])
        for point in result.points:
            self.assertAlmostEqual(point.power, 2.0 * np.sqrt(-point.lambda_), delta=1e-6)
            self.assertLessEqual(point.newton_iters, 10)
        self.assertEqual(seen, list(result.points))
        self.assertEqual(sorted(result.fields), [("down", -2.0), ("down", -1.0)])
        self.assertEqual(len(result.for_path("down")), 5)

    def test_warm_starts_need_few_newton_steps(self):
        result = sweep(self.model, self.grid, self.plan)
        self.assertLess(max(point.newton_iters for point in result.points[1:]), result.points[0].newton_iters + 2)

    def test_selected_fields_are_kept(self):
        plan = SweepPlan(paths=self.plan.paths, seed=self.seed, dump_lambdas=(-1.5,))
        result = sweep(self.model, self.grid, plan)
        self.assertEqual(list(result.fields), [("down", -1.5)])

    def test_paths_sharing_a_start_keep_their_own_fields(self):
        paths = (
            ContinuationPath((-1.0, -1.25, -1.5), label="down"),
            ContinuationPath((-1.0, -0.75), label="up"),
        )
        result = sweep(self.model, self.grid, SweepPlan(paths=paths, seed=self.seed))
        self.assertTrue(result.converged)
        self.assertEqual(
            sorted(result.fields), [("down", -1.5), ("down", -1.0), ("up", -1.0), ("up", -0.75)]
        )
        self.assertIsNot(result.fields["down", -1.0], result.fields["up", -1.0])

    def test_failure_at_the_first_point(self):
        with self.assertLogs("continuation.sweeps", level="ERROR"):
            result = sweep(self.model, self.grid, self.plan, NewtonOptions(max_newton=0))
        self.assertFalse(result.converged)
        self.assertEqual(len(result.points), 1)
        self.assertEqual(result.fields, {})
        failure = result.failed_paths[0]
        self.assertTrue(failure.at_first_point)
        self.assertEqual(failure.failure, FAILURE_MAX_NEWTON)
        self.assertEqual(failure.lambda_, -1.0)

    def test_sweeps_are_deterministic(self):
        first = sweep(self.model, self.grid, self.plan)
        second = sweep(self.model, self.grid, self.plan)
        self.assertEqual([p.power for p in first.points], [p.power for p in second.points])
