import numpy as np
from django.test import SimpleTestCase

from .grids import (
    Field,
    Grid,
    GridError,
    GridMismatchError,
    build_grid,
    inner,
    participation_ratio,
    power,
    reflect,
)
from .operators import (
    SHIFT_FACTOR,
    SpectralError,
    apply_G,
    apply_laplacian,
    build_green_kernel,
    forward,
    inverse_real,
    laplacian_values,
)


def dense_dft(n):
    """F with (F f)_k = n^-1 sum_j exp(-2 pi i k j / n) f_j, and its inverse."""
    j = np.arange(n)
    phase = np.exp(-2j * np.pi * np.outer(j, j) / n)
    return phase / n, phase.conj()


def dense_laplacian(grid):
    F, F_inv = dense_dft(grid.n)
    return np.real(F_inv @ np.diag(grid.laplacian_symbol) @ F)


class GridTests(SimpleTestCase):
    def test_rejects_odd_or_tiny_sides(self):
        for n in (7, 2):
            with self.assertRaises(GridError):
                Grid(d=1, n=n, box_len=1.0)

    def test_rejects_unsupported_dimension_and_box(self):
        with self.assertRaises(GridError):
            Grid(d=4, n=8, box_len=1.0)
        with self.assertRaises(GridError):
            Grid(d=2, n=8, box_len=0.0)

    def test_centered_grid_holds_the_origin(self):
        grid = build_grid(2, 192, 32.0)
        self.assertEqual(grid.h, 32.0 / 192)
        self.assertEqual(grid.axis_points[96], 0.0)
        self.assertEqual(grid.center, 0.0)
        self.assertEqual(grid.coordinates()[0].shape, (192, 192))

    def test_field_shape_and_finiteness(self):
        grid = build_grid(1, 8, 1.0)
        with self.assertRaises(GridMismatchError):
            Field(grid, np.zeros(9))
        with self.assertRaises(GridError):
            Field(grid, np.full(8, np.nan))

    def test_mismatched_grids_are_errors(self):
        f = Field.zeros(build_grid(1, 8, 1.0))
        g = Field.zeros(build_grid(1, 8, 2.0))
        with self.assertRaises(GridMismatchError):
            inner(f, g)


class FunctionalTests(SimpleTestCase):
    def test_power_of_constant_is_box_volume(self):
        grid = build_grid(2, 16, 3.0)
        self.assertAlmostEqual(power(Field(grid, np.ones(grid.shape))), 9.0, places=12)

    def test_doubling_amplitude_quadruples_power(self):
        grid = build_grid(1, 32, 5.0)
        f = Field(grid, np.random.default_rng(1).standard_normal(32))
        self.assertAlmostEqual(power(f.like(2 * f.values)), 4 * power(f), places=12)

    def test_parseval(self):
        grid = build_grid(2, 24, 5.0)
        f = Field(grid, np.random.default_rng(7).standard_normal(grid.shape))
        spectral_power = grid.box_len**grid.d * np.sum(np.abs(forward(f.values)) ** 2)
        self.assertAlmostEqual(power(f) / spectral_power, 1.0, places=12)

    def test_participation_ratio_of_constant_is_box_volume(self):
        grid = build_grid(1, 16, 4.0)
        self.assertAlmostEqual(participation_ratio(Field(grid, np.ones(16))), 4.0, places=12)
        self.assertEqual(participation_ratio(Field.zeros(grid)), 0.0)

    def test_reflect_maps_x_to_minus_x(self):
        grid = build_grid(1, 16, 8.0)
        x = grid.coordinates()[0]
        odd = Field(grid, x)
        reflected = reflect(odd)
        # x = -L/2 has no mirror image inside [-L/2, L/2); periodicity maps it to itself
        np.testing.assert_array_equal(reflected.values[1:], -x[1:])
        even = Field(grid, np.cos(2 * np.pi * x / 8.0))
        np.testing.assert_allclose(reflect(even).values, even.values, atol=1e-15)


class LaplacianTests(SimpleTestCase):
    def test_fourier_modes_are_exact_eigenvectors(self):
        grid = build_grid(2, 16, 10.0)
        x, y = grid.coordinates()
        for k in [(0, 0), (3, -2), (7, 1), (8, 8)]:
            f = Field(grid, np.cos(2 * np.pi * (k[0] * x + k[1] * y) / 10.0))
            eigenvalue = (2 * np.pi / 10.0) ** 2 * (k[0] ** 2 + k[1] ** 2)
            result = apply_laplacian(f)
            np.testing.assert_allclose(result.values, eigenvalue * f.values, atol=1e-12 * max(1.0, eigenvalue))

    def test_matches_dense_dft_oracle(self):
        grid = build_grid(1, 16, 3.0)
        values = np.random.default_rng(2).standard_normal(16)
        expected = dense_laplacian(grid) @ values
        result = laplacian_values(grid, values)
        np.testing.assert_allclose(result, expected, rtol=0, atol=1e-12 * np.abs(expected).max())

    def test_constant_is_annihilated(self):
        grid = build_grid(3, 8, 2.0)
        result = apply_laplacian(Field(grid, np.full(grid.shape, 5.0)))
        self.assertLess(result.max_abs(), 1e-12)

    def test_imaginary_residue_is_rejected(self):
        coefficients = np.zeros(8, dtype=complex)
        coefficients[1] = 1.0
        with self.assertRaises(SpectralError):
            inverse_real(coefficients, 1.0)


class GreenKernelTests(SimpleTestCase):
    def test_round_trip_inverts_constant_coefficient_operator(self):
        grid = build_grid(2, 32, 8.0)
        kern = build_green_kernel(grid, l=1.5, lambda_=0.5, kinetic_factor=0.5)
        f = Field(grid, np.random.default_rng(3).standard_normal(grid.shape))
        operator_f = f.like(0.5 * apply_laplacian(f).values + 1.0 * f.values)
        np.testing.assert_allclose(apply_G(kern, operator_f).values, f.values, atol=1e-12 * f.max_abs())
        self.assertEqual(kern.shift_applied, 0.0)

    def test_round_trip_with_an_indefinite_shift(self):
        # l - lambda = -40 on the kerr-focusing grid: the symbol changes sign
        grid = build_grid(2, 192, 32.0)
        kern = build_green_kernel(grid, l=14.4, lambda_=54.4, kinetic_factor=0.5)
        self.assertEqual(kern.shift_applied, 0.0)
        self.assertLess(kern.symbol.min(), 0.0)
        self.assertGreater(kern.symbol.max(), 0.0)
        f = Field(grid, np.random.default_rng(8).standard_normal(grid.shape))
        operator_f = f.like(0.5 * apply_laplacian(f).values + (kern.l - kern.lambda_) * f.values)
        np.testing.assert_allclose(apply_G(kern, operator_f).values, f.values, atol=1e-10 * f.max_abs())

    def test_kernel_is_a_periodic_convolution(self):
        grid = build_grid(1, 16, 4.0)
        kern = build_green_kernel(grid, l=1.0, lambda_=0.0)
        dense = np.column_stack([apply_G(kern, Field(grid, np.eye(16)[j])).values for j in range(16)])
        j, jp = np.meshgrid(np.arange(16), np.arange(16), indexing="ij")
        np.testing.assert_allclose(dense, kern.g.values[(j - jp) % 16], atol=1e-14)
        expected = np.linalg.inv(dense_laplacian(grid) + np.eye(16))
        np.testing.assert_allclose(dense, expected, atol=1e-12)

    def test_near_singular_symbol_is_shifted(self):
        grid = build_grid(1, 32, 2 * np.pi)
        # c_K |k|^2 + l - lambda vanishes at |k| = 1
        with self.assertLogs("spectral.operators", level="WARNING"):
            kern = build_green_kernel(grid, l=0.0, lambda_=1.0)
        self.assertAlmostEqual(abs(kern.shift_applied), SHIFT_FACTOR * 2.0)
        self.assertTrue(np.all(np.isfinite(kern.symbol)))
        self.assertAlmostEqual(kern.constant_shift, -1.0 + kern.shift_applied)
