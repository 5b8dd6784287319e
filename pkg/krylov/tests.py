import numpy as np
from django.test import SimpleTestCase

from spectral.grids import Field, build_grid

from .gmres import KrylovError, KrylovOptions, gmres


def identity(v):
    return v


def diagonal(entries):
    return lambda v: entries * v


class GmresTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_identity_converges_in_one_step(self):
        b = self.rng.standard_normal(30)
        x, report = gmres(identity, identity, b)
        self.assertTrue(report.converged)
        self.assertEqual(report.iterations, 1)
        np.testing.assert_allclose(x, b, atol=1e-12)

    def test_finite_termination_on_distinct_eigenvalues(self):
        entries = np.arange(1.0, 17.0)
        b = self.rng.standard_normal(16)
        x, report = gmres(diagonal(entries), identity, b, KrylovOptions(rel_tol=1e-12))
        self.assertTrue(report.converged)
        self.assertLessEqual(report.iterations, 16)
        np.testing.assert_allclose(x, b / entries, atol=1e-10)
        self.assertLessEqual(report.true_final_residual, 2e-12 * np.linalg.norm(b))

    def test_invariant_subspace_is_a_lucky_breakdown(self):
        b = np.zeros(8)
        b[0] = 3.0
        x, report = gmres(diagonal(np.arange(1.0, 9.0)), identity, b)
        self.assertTrue(report.converged)
        self.assertTrue(report.breakdown)
        self.assertEqual(report.iterations, 1)
        np.testing.assert_allclose(x, b)

    def test_residual_history_never_increases_across_restarts(self):
        entries = np.linspace(1.0, 50.0, 50)
        b = self.rng.standard_normal(50)
        _, report = gmres(diagonal(entries), identity, b, KrylovOptions(rel_tol=1e-10, restart=5, max_iters=500))
        history = np.array(report.preconditioned_residuals)
        self.assertTrue(report.converged)
        self.assertEqual(len(history), report.iterations + 1)
        self.assertTrue(np.all(np.diff(history) <= 1e-12 * history[0]))

    def test_iteration_cap_reports_without_raising(self):
        entries = np.linspace(1.0, 50.0, 50)
        _, report = gmres(diagonal(entries), identity, np.ones(50), KrylovOptions(max_iters=3))
        self.assertFalse(report.converged)
        self.assertEqual(report.iterations, 3)

    def test_zero_right_hand_side(self):
        x, report = gmres(diagonal(np.arange(1.0, 5.0)), identity, np.zeros(4))
        self.assertTrue(report.converged)
        self.assertEqual(report.iterations, 0)
        np.testing.assert_array_equal(x, 0.0)

    def test_exact_initial_guess_needs_no_iterations(self):
        entries = np.arange(1.0, 9.0)
        b = self.rng.standard_normal(8)
        _, report = gmres(diagonal(entries), identity, b, x0=b / entries)
        self.assertTrue(report.converged)
        self.assertEqual(report.iterations, 0)

    def test_non_finite_operator_output_raises(self):
        with self.assertRaises(KrylovError):
            gmres(lambda v: np.full_like(v, np.nan), identity, np.ones(4))
        with self.assertRaises(KrylovError):
            gmres(identity, identity, np.array([1.0, np.inf]))

    def test_fields_in_fields_out(self):
        grid = build_grid(1, 8, 1.0)
        rhs = Field(grid, self.rng.standard_normal(8))
        x, report = gmres(diagonal(2.0), identity, rhs)
        self.assertIsInstance(x, Field)
        self.assertIs(x.grid, grid)
        np.testing.assert_allclose(x.values, rhs.values / 2.0, atol=1e-12)

    def test_history_can_be_switched_off(self):
        _, report = gmres(identity, identity, np.ones(3), KrylovOptions(record_history=False))
        self.assertEqual(report.preconditioned_residuals, ())

    def test_options_are_validated(self):
        for kwargs in ({"rel_tol": 0.0}, {"rel_tol": 1.0}, {"restart": 0}, {"max_iters": -1}):
            with self.subTest(**kwargs), self.assertRaises(ValueError):
                KrylovOptions(**kwargs)


class PreconditionedGmresTests(SimpleTestCase):
    def test_matches_dense_solve(self):
        rng = np.random.default_rng(12)
        size = 20
        for draw in range(10):
            with self.subTest(draw=draw):
                A = 4.0 * np.eye(size) + rng.standard_normal((size, size)) / np.sqrt(size)
                M = np.linalg.inv(A + 0.1 * rng.standard_normal((size, size)) / np.sqrt(size))
                b = rng.standard_normal(size)
                x, report = gmres(lambda v: A @ v, lambda v: M @ v, b, KrylovOptions(rel_tol=1e-12))
                expected = np.linalg.solve(A, b)
                self.assertTrue(report.converged)
                self.assertLess(np.linalg.norm(x - expected) / np.linalg.norm(expected), 1e-9)
                self.assertLessEqual(report.iterations, size)
