import numpy as np
from django.test import SimpleTestCase

from spectral.grids import Field, build_grid
from spectral.tests import dense_laplacian

from .nonlinearities import (
    CubicModel,
    CustomModel,
    KerrModel,
    ModelError,
    SaturableModel,
    finite_difference_order,
    linearization,
    linearize,
    linop_apply,
    nonlinear_apply,
    residual,
)


class ModelConstructionTests(SimpleTestCase):
    def test_kerr_sigma_must_be_plus_or_minus_one(self):
        for sigma in (0, 2, -3):
            with self.assertRaises(ModelError):
                KerrModel(V0=28.8, sigma=sigma)

    def test_kinetic_factor_must_be_positive(self):
        with self.assertRaises(ModelError):
            CubicModel(kinetic_factor=0.0)

    def test_describe_names_the_parameters(self):
        self.assertEqual(
            KerrModel(V0=21.6, sigma=-1).describe(),
            {"kind": "kerr", "kinetic_factor": 0.5, "V0": 21.6, "sigma": -1},
        )
        self.assertEqual(SaturableModel(V0=36.3).describe()["A"], 1.0)


class LatticeTests(SimpleTestCase):
    def setUp(self):
        # points -2, -1.5, ..., 1.5
        self.grid = build_grid(1, 8, 4.0)

    def test_kerr_potential_peaks_at_half_integers(self):
        V = KerrModel(V0=28.8, sigma=1).potential(self.grid)
        self.assertAlmostEqual(V[5], 14.4, places=12)  # x = 0.5
        self.assertAlmostEqual(V[4], 0.0, places=12)  # x = 0

    def test_kerr_potential_sums_over_axes(self):
        grid = build_grid(2, 8, 4.0)
        V = KerrModel(V0=2.0, sigma=1).potential(grid)
        self.assertAlmostEqual(V[5, 5], 2.0, places=12)

    def test_saturable_model_has_no_potential_and_bounded_response(self):
        model = SaturableModel(V0=36.3, A=1.0)
        np.testing.assert_array_equal(model.potential(self.grid), 0.0)
        u = np.full(8, 1e6)
        self.assertLess(np.max(np.abs(model.nonlinearity(self.grid, u))), 36.3 / 1e6 * 1.01)
        # at x = 0 the lattice factor is 1 + A^2
        self.assertAlmostEqual(model.nonlinearity(self.grid, np.ones(8))[4], 36.3 / 3.0, places=12)


class LinearizationTests(SimpleTestCase):
    def setUp(self):
        self.grid = build_grid(2, 16, 4.0)
        rng = np.random.default_rng(7)
        self.u = Field(self.grid, rng.standard_normal(self.grid.shape))
        self.w = Field(self.grid, rng.standard_normal(self.grid.shape))

    def test_derivatives_pass_central_difference_check(self):
        for model in (
            KerrModel(V0=28.8, sigma=1),
            KerrModel(V0=21.6, sigma=-1),
            SaturableModel(V0=36.3),
            SaturableModel(V0=-36.3),
            CubicModel(coefficient=2.0),
        ):
            with self.subTest(model=model):
                self.assertGreaterEqual(finite_difference_order(model, self.grid, self.u, self.w), 1.9)

    def test_custom_model_verification(self):
        good = CustomModel(V=lambda x: 0.0, N=lambda x, u: np.sin(u), dN_du=lambda x, u: np.cos(u))
        self.assertGreaterEqual(good.verify(self.grid), 1.9)
        bad = CustomModel(V=lambda x: 0.0, N=lambda x, u: np.sin(u), dN_du=lambda x, u: np.cos(u) + 0.1)
        with self.assertRaises(ModelError):
            bad.verify(self.grid)

    def test_zero_is_the_trivial_solution(self):
        for model in (KerrModel(V0=28.8, sigma=1), SaturableModel(V0=36.3)):
            r = residual(model, self.grid, Field.zeros(self.grid), lambda_=3.0)
            self.assertEqual(r.max_abs(), 0.0)

    def test_linearization_point_values(self):
        model = KerrModel(V0=28.8, sigma=1)
        Lu = linearization(model, self.grid, self.u)
        expected = model.potential(self.grid) - 3.0 * self.u.values**2
        np.testing.assert_allclose(Lu.values, expected)
        op = linearize(model, self.grid, self.u, lambda_=2.0)
        self.assertAlmostEqual(op.l, float(np.mean(expected)))
        np.testing.assert_allclose(
            nonlinear_apply(model, self.grid, self.u).values,
            model.potential(self.grid) * self.u.values - self.u.values**3,
        )

    def test_linearized_operator_is_the_residual_derivative(self):
        model = SaturableModel(V0=36.3)
        lambda_, eps = 1.3, 1e-5
        op = linearize(model, self.grid, self.u, lambda_)
        plus = residual(model, self.grid, self.u.like(self.u.values + eps * self.w.values), lambda_)
        minus = residual(model, self.grid, self.u.like(self.u.values - eps * self.w.values), lambda_)
        directional = (plus.values - minus.values) / (2 * eps)
        applied = linop_apply(op, self.w).values
        np.testing.assert_allclose(applied, directional, atol=1e-6 * np.abs(applied).max())

    def test_matvec_matches_dense_operator(self):
        grid = build_grid(1, 16, 4.0)
        model = KerrModel(V0=28.8, sigma=-1, kinetic_factor=0.5)
        u = Field(grid, np.cos(np.pi * grid.coordinates()[0]))
        op = linearize(model, grid, u, lambda_=5.0)
        dense = 0.5 * dense_laplacian(grid) + np.diag(op.Lu.values - 5.0)
        columns = np.column_stack([op.matvec(np.eye(16)[j]) for j in range(16)])
        np.testing.assert_allclose(columns, dense, atol=1e-12 * np.abs(dense).max())
