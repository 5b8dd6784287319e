import numpy as np
from django.test import SimpleTestCase
from scipy import sparse

from krylov.gmres import KrylovOptions, gmres
from physics.nonlinearities import CubicModel, CustomModel, KerrModel, linearize
from spectral.grids import Field, build_grid
from spectral.operators import apply_G, build_green_kernel

from .factorization import (
    COLAMD,
    MMD_AT_PLUS_A,
    NESTED_DISSECTION,
    PreconditionerError,
    factorize,
    nested_dissection_order,
)
from .preconditioner import apply_preconditioner, assemble_P, build_preconditioner
from .stencils import StencilError, annulus_offsets, build_stencil, kernel_block, offsets_within


def dense_green(kern):
    grid = kern.grid
    columns = [apply_G(kern, Field(grid, np.eye(grid.size)[j].reshape(grid.shape))).flat for j in range(grid.size)]
    return np.column_stack(columns)


def dense_Q(stencil):
    grid = stencil.grid
    index = np.indices(grid.shape).reshape(grid.d, -1)
    Q = np.zeros((grid.size, grid.size))
    for offset, a in zip(stencil.offsets, stencil.alpha):
        cols = np.ravel_multi_index(tuple((index + offset[:, None]) % grid.n), grid.shape)
        Q[np.arange(grid.size), cols] += a
    return Q


def lattice_operator(n=16, box_len=8.0, lambda_=2.0):
    grid = build_grid(2, n, box_len)
    x, y = grid.coordinates()
    u = Field(grid, 1.5 * np.exp(-(x**2 + y**2)))
    return linearize(KerrModel(V0=6.0, sigma=1), grid, u, lambda_)


class OffsetTests(SimpleTestCase):
    def test_counts(self):
        self.assertEqual(len(offsets_within(2, 1)), 9)
        self.assertEqual(len(offsets_within(3, 2)), 125)
        self.assertEqual(len(annulus_offsets(2, 1, 3)), 81 - 9)
        self.assertEqual(len(annulus_offsets(3, 1, 1)), 125 - 27)

    def test_annulus_excludes_the_stencil(self):
        annulus = annulus_offsets(2, 1, 2)
        self.assertTrue(np.all(np.max(np.abs(annulus), axis=1) > 1))


class StencilTests(SimpleTestCase):
    def setUp(self):
        self.grid = build_grid(2, 16, 8.0)
        self.kern = build_green_kernel(self.grid, l=4.0, lambda_=1.0, kinetic_factor=0.5)

    def test_alpha_is_a_signed_unit_vector(self):
        stencil = build_stencil(self.kern)
        self.assertAlmostEqual(np.linalg.norm(stencil.alpha), 1.0, places=12)
        self.assertGreater(stencil.alpha[stencil.center_index], 0.0)
        self.assertEqual(len(stencil.alpha), 9)

    def test_matches_dense_singular_value_decomposition(self):
        stencil = build_stencil(self.kern, b=1, w=3)
        G = dense_green(self.kern)
        center = np.array([8, 8])

        def flat(offsets):
            return np.ravel_multi_index(tuple(((center + offsets) % 16).T), self.grid.shape)

        mu, annulus = offsets_within(2, 1), annulus_offsets(2, 1, 3)
        block = G[np.ix_(flat(mu), flat(annulus))]
        np.testing.assert_allclose(block, kernel_block(self.kern, mu, annulus), atol=1e-14)
        singular = np.linalg.svd(block, compute_uv=False)
        self.assertAlmostEqual(stencil.sigma_min, singular[-1], delta=1e-10 * singular[0])
        self.assertAlmostEqual(np.linalg.norm(stencil.alpha @ block), singular[-1], delta=1e-6 * singular[0])
        np.testing.assert_allclose(stencil.beta, stencil.alpha @ G[np.ix_(flat(mu), flat(mu))], atol=1e-13)

    def test_wider_stencil_sparsifies_better(self):
        grid = build_grid(2, 32, 16.0)
        kern = build_green_kernel(grid, l=4.0, lambda_=1.0, kinetic_factor=0.5)
        self.assertLess(build_stencil(kern, b=2).relative_sigma, build_stencil(kern, b=1).relative_sigma)

    def test_rejects_stencil_wider_than_the_grid(self):
        kern = build_green_kernel(build_grid(1, 8, 4.0), l=1.0, lambda_=0.0)
        with self.assertRaises(StencilError):
            build_stencil(kern, b=1, w=3)
        with self.assertRaises(StencilError):
            build_stencil(kern, b=-1, w=1)


class AssemblyTests(SimpleTestCase):
    def setUp(self):
        self.op = lattice_operator()
        self.state = build_preconditioner(self.op)

    def test_restriction_of_dense_sparsified_operator(self):
        stencil, kern = self.state.stencil, self.state.kern
        self.assertEqual(kern.shift_applied, 0.0)
        Q = dense_Q(stencil)
        full = Q + Q @ dense_green(kern) @ np.diag(self.op.Lu.flat - self.state.l_eff)
        P = self.state.P.toarray()
        support = P != 0
        np.testing.assert_allclose(P[support], full[support], atol=1e-13 * np.abs(full).max())

    def test_application_order_is_solve_after_stencil_after_green(self):
        r = Field(self.op.grid, np.random.default_rng(9).standard_normal(self.op.grid.shape))
        P, Q, G = self.state.P.toarray(), dense_Q(self.state.stencil), dense_green(self.state.kern)
        expected = np.linalg.solve(P, Q @ G @ r.flat)
        result = apply_preconditioner(self.state, r)
        np.testing.assert_allclose(result.flat, expected, atol=1e-10 * np.abs(expected).max())

    def test_support_is_the_periodic_stencil(self):
        P = self.state.P
        self.assertEqual(P.nnz, 9 * 256)
        self.assertTrue(np.all(np.diff(P.indptr) == 9))
        # row (0, 0) wraps around to (15, 15)
        self.assertIn(np.ravel_multi_index((15, 15), (16, 16)), P[0].indices)

    def test_zero_width_stencil_is_diagonal(self):
        state = build_preconditioner(self.op, b=0, w=3)
        P = state.P
        self.assertEqual(sparse.triu(P, 1).nnz + sparse.tril(P, -1).nnz, 0)

    def test_constant_linearization_makes_an_exact_inverse(self):
        grid = build_grid(2, 16, 8.0)
        op = linearize(CubicModel(), grid, Field.zeros(grid), lambda_=-1.0)
        state = build_preconditioner(op)
        v = Field(grid, np.random.default_rng(4).standard_normal(grid.shape))
        recovered = apply_preconditioner(state, v.like(op.matvec(v.flat)))
        np.testing.assert_allclose(recovered.values, v.values, atol=1e-10 * v.max_abs())

    def test_commutes_with_grid_translations(self):
        grid = self.op.grid
        r = Field(grid, np.random.default_rng(5).standard_normal(grid.shape))
        # whole lattice periods, so the potential is unchanged
        shift = (4, -6)
        moved = linearize(
            self.op.model, grid, self.op.u.like(np.roll(self.op.u.values, shift, axis=(0, 1))), self.op.lambda_
        )
        moved_state = build_preconditioner(moved)
        expected = np.roll(apply_preconditioner(self.state, r).values, shift, axis=(0, 1))
        result = apply_preconditioner(moved_state, r.like(np.roll(r.values, shift, axis=(0, 1))))
        np.testing.assert_allclose(result.values, expected, atol=1e-10 * np.abs(expected).max())

    def test_assemble_rejects_foreign_fields(self):
        other = Field.zeros(build_grid(2, 16, 9.0))
        with self.assertRaises(ValueError):
            assemble_P(self.state.stencil, other, 0.0)


class FactorizationTests(SimpleTestCase):
    def test_nested_dissection_is_a_permutation(self):
        for d, n, halo in ((1, 64, 1), (2, 32, 1), (2, 32, 2), (3, 12, 1)):
            with self.subTest(d=d, n=n, halo=halo):
                grid = build_grid(d, n, 1.0)
                order = nested_dissection_order(grid, halo=halo, leaf_size=8)
                np.testing.assert_array_equal(np.sort(order), np.arange(grid.size))

    def test_orderings_solve_the_same_system(self):
        op = lattice_operator()
        P = build_preconditioner(op).P
        y = np.random.default_rng(6).standard_normal(P.shape[0])
        expected = np.linalg.solve(P.toarray(), y)
        for ordering in (NESTED_DISSECTION, COLAMD, MMD_AT_PLUS_A):
            with self.subTest(ordering=ordering):
                factorization = factorize(P, op.grid, ordering=ordering)
                np.testing.assert_allclose(factorization.solve(y), expected, atol=1e-10 * np.abs(expected).max())
                self.assertGreaterEqual(factorization.fill, 1.0)

    def test_singular_matrix_is_reported(self):
        grid = build_grid(1, 16, 1.0)
        with self.assertRaises(PreconditionerError):
            factorize(sparse.diags(np.r_[np.ones(15), 0.0], format="csr"), grid)

    def test_unknown_ordering(self):
        grid = build_grid(1, 16, 1.0)
        with self.assertRaises(ValueError):
            factorize(sparse.identity(16, format="csr"), grid, ordering="metis")


class ClusteringTests(SimpleTestCase):
    def test_preconditioned_spectrum_clusters_at_one(self):
        grid = build_grid(1, 32, 16.0)
        model = CustomModel(
            V=lambda x: 0.1 * np.cos(2 * np.pi * x[0] / 16.0),
            N=lambda x, u: 0.0 * u,
            dN_du=lambda x, u: 0.0 * u,
        )
        op = linearize(model, grid, Field.zeros(grid), lambda_=-1.0)
        state = build_preconditioner(op)
        identity = np.eye(grid.size)
        A = np.column_stack([op.matvec(identity[j]) for j in range(grid.size)])
        MA = np.column_stack([state.apply_values(A[:, j]) for j in range(grid.size)])
        self.assertLess(np.max(np.abs(np.linalg.eigvals(MA) - 1.0)), 0.25)
        self.assertGreater(np.linalg.cond(A), 10.0)


class OffSupportTests(SimpleTestCase):
    def test_sparsified_kernel_is_small_beyond_the_annulus(self):
        grid = build_grid(2, 16, 8.0)
        kern = build_green_kernel(grid, l=4.0, lambda_=1.0, kinetic_factor=0.5)
        stencil = build_stencil(kern, b=1, w=3)
        QG = dense_Q(stencil) @ dense_green(kern)
        index = np.indices(grid.shape).reshape(2, -1).T
        worst = 0.0
        for j in range(grid.size):
            # periodic distance from j, in grid steps
            offset = (index - index[j] + grid.n // 2) % grid.n - grid.n // 2
            far = np.max(np.abs(offset), axis=1) > stencil.b + stencil.w
            worst = max(worst, float(np.linalg.norm(QG[j, far])))
        self.assertLessEqual(worst, 10.0 * stencil.sigma_min)


class IndefiniteStencilTests(SimpleTestCase):
    def test_wider_stencils_sparsify_an_oscillatory_kernel_better(self):
        # l - lambda = -40 on the kerr-focusing grid: the symbol changes sign across K
        grid = build_grid(2, 192, 32.0)
        kern = build_green_kernel(grid, l=14.4, lambda_=54.4, kinetic_factor=0.5)
        self.assertEqual(kern.shift_applied, 0.0)
        self.assertLess(kern.symbol.min(), 0.0)
        self.assertGreater(kern.symbol.max(), 0.0)
        sigmas = [build_stencil(kern, b=b, w=3).relative_sigma for b in (1, 2, 3)]
        self.assertLess(sigmas[1], sigmas[0])
        self.assertLess(sigmas[2], sigmas[1])


class PreconditionedSolveTests(SimpleTestCase):
    def test_gmres_with_the_sparsifier_matches_dense_solves(self):
        grid = build_grid(1, 32, 8.0)
        x = grid.coordinates()[0]
        model = KerrModel(V0=6.0, sigma=1)
        rng = np.random.default_rng(41)
        identity = np.eye(grid.size)
        # l - lambda from indefinite to definite
        for shift in np.linspace(-5.0, 8.6, 10):
            with self.subTest(shift=shift):
                amplitude, center = rng.uniform(0.2, 1.5), rng.uniform(-1.0, 1.0)
                u = Field(grid, amplitude * np.exp(-((x - center) ** 2)))
                l = linearize(model, grid, u, 0.0).l
                op = linearize(model, grid, u, l - shift)
                A = np.column_stack([op.matvec(identity[j]) for j in range(grid.size)])
                r = rng.standard_normal(grid.size)
                state = build_preconditioner(op)
                v, report = gmres(op.matvec, state.apply_values, r, KrylovOptions(rel_tol=1e-12))
                expected = np.linalg.solve(A, r)
                self.assertTrue(report.converged)
                self.assertLessEqual(report.iterations, grid.size)
                error = np.linalg.norm(v - expected) / np.linalg.norm(expected)
                self.assertLess(error, 1e-12 * np.linalg.cond(A) + 1e-10)
