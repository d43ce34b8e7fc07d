import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from nucfw.config import SolverConfig
from nucfw.data import synthetic
from nucfw.errors import DimensionMismatchError, EmptyObservationsError, IndexOutOfBoundsError
from nucfw.factored import ThinSVD, full_svd_oracle, nuclear_norm
from nucfw.objectives import (
    Observations,
    apply_gradient,
    duality_gap,
    exact_line_search,
    lmo,
    residual,
    rmse,
    value,
)
from nucfw.solvers import run_fw

from .helpers import diag_svd, fully_observed, random_svd


class TestObservations(unittest.TestCase):
    def test_sorted_row_major(self):
        obs = Observations.from_triplets([1, 0, 1], [0, 1, 1], [3.0, 1.0, 4.0], (2, 2))
        np.testing.assert_array_equal(obs.rows, [0, 1, 1])
        np.testing.assert_array_equal(obs.cols, [1, 0, 1])
        np.testing.assert_array_equal(obs.values, [1.0, 3.0, 4.0])
        np.testing.assert_array_equal(obs.indptr, [0, 1, 3])

    def test_duplicates_rejected(self):
        with self.assertRaises(ValueError):
            Observations.from_triplets([0, 0], [1, 1], [1.0, 2.0], (2, 2))

    def test_out_of_bounds(self):
        with self.assertRaises(IndexOutOfBoundsError):
            Observations.from_triplets([2], [0], [1.0], (2, 2))

    def test_length_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            Observations.from_triplets([0, 1], [0], [1.0], (2, 2))


class TestValueAndResidual(unittest.TestCase):
    def test_single_observation(self):
        obs = Observations.from_triplets([0], [0], [2.0], (2, 2))
        self.assertEqual(value(ThinSVD.zeros(2, 2), obs), 2.0)

    def test_exact_fit(self):
        svd = diag_svd([2.0, 1.0])
        obs = fully_observed(svd.to_dense())
        self.assertAlmostEqual(value(svd, obs), 0.0, places=14)
        self.assertTrue(np.allclose(residual(svd, obs).values, 0.0))

    def test_residual_at_origin(self):
        obs = Observations.from_triplets([0, 1], [1, 0], [3.0, -1.0], (2, 2))
        np.testing.assert_array_equal(residual(ThinSVD.zeros(2, 2), obs).values, [-3.0, 1.0])

    def test_value_matches_dense(self):
        rng = np.random.default_rng(0)
        svd = random_svd(rng, 9, 8, 2)
        flat = rng.choice(72, 40, replace=False)
        rows, cols = np.divmod(flat, 8)
        Y = rng.standard_normal((9, 8))
        obs = Observations.from_triplets(rows, cols, Y[rows, cols], (9, 8))
        diff = (svd.to_dense() - Y)[rows, cols]
        self.assertAlmostEqual(value(svd, obs), 0.5 * diff @ diff, delta=1e-12)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatchError):
            value(ThinSVD.zeros(3, 2), Observations.empty(2, 2))


class TestApplyGradient(unittest.TestCase):
    def test_right_apply(self):
        obs = Observations.from_triplets([0], [0], [1.0], (2, 2))
        res = residual(ThinSVD.zeros(2, 2), obs)
        np.testing.assert_array_equal(apply_gradient(res, "right", [1.0, 0.0]), [-1.0, 0.0])

    def test_zero_residual(self):
        svd = diag_svd([2.0, 1.0])
        res = residual(svd, fully_observed(svd.to_dense()))
        np.testing.assert_allclose(apply_gradient(res, "left", [1.0, 1.0]), [0.0, 0.0], atol=1e-15)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(4)
        svd = random_svd(rng, 6, 5, 3)
        flat = rng.choice(30, 18, replace=False)
        rows, cols = np.divmod(flat, 5)
        obs = Observations.from_triplets(rows, cols, rng.standard_normal(18), (6, 5))
        G = residual(svd, obs).matrix.toarray()
        X = svd.to_dense()
        h = 1e-6
        for i in range(6):
            for j in range(5):
                E = np.zeros((6, 5))
                E[i, j] = h
                f_plus = value(full_svd_oracle(X + E, rank_threshold=0.0), obs)
                f_minus = value(full_svd_oracle(X - E, rank_threshold=0.0), obs)
                slope = (f_plus - f_minus) / (2 * h)
                with self.subTest(entry=(i, j)):
                    self.assertLessEqual(abs(slope - G[i, j]), 1e-5 * max(1.0, abs(G[i, j])))

    def test_wrong_length(self):
        res = residual(ThinSVD.zeros(2, 3), Observations.empty(2, 3))
        with self.assertRaises(DimensionMismatchError):
            apply_gradient(res, "right", np.ones(2))


class TestLMO(unittest.TestCase):
    def test_diagonal_residual(self):
        res = residual(ThinSVD.zeros(2, 2), fully_observed(-np.diag([3.0, 1.0])))
        result = lmo(res, 2.0, rng=np.random.default_rng(0))
        self.assertFalse(result.at_optimum)
        self.assertAlmostEqual(result.sigma, 3.0, places=8)
        np.testing.assert_allclose(result.atom.to_dense(), -2.0 * np.diag([1.0, 0.0]), atol=1e-4)

    def test_rank_one_residual(self):
        u = np.array([0.6, 0.0, 0.8])
        v = np.array([0.0, 1.0])
        res = residual(ThinSVD.zeros(3, 2), fully_observed(-4.0 * np.outer(u, v)))
        result = lmo(res, 1.5, rng=np.random.default_rng(1))
        np.testing.assert_allclose(result.atom.to_dense(), -1.5 * np.outer(u, v), atol=1e-10)

    def test_zero_residual_is_optimum(self):
        svd = diag_svd([2.0, 1.0])
        res = residual(svd, fully_observed(svd.to_dense()))
        result = lmo(res, 1.0, rng=np.random.default_rng(0))
        self.assertTrue(result.at_optimum)
        self.assertEqual(result.atom.scale, 0.0)

    def test_matches_dense_svd(self):
        rng = np.random.default_rng(11)
        flat = rng.choice(80, 40, replace=False)
        rows, cols = np.divmod(flat, 8)
        obs = Observations.from_triplets(rows, cols, rng.standard_normal(40), (10, 8))
        res = residual(ThinSVD.zeros(10, 8), obs)
        result = lmo(res, 1.0, power_tol=1e-15, power_max_iter=20000, rng=rng)
        sigma = np.linalg.svd(res.matrix.toarray(), compute_uv=False)[0]
        self.assertLess(abs(result.sigma - sigma), 1e-8 * sigma)

    def test_generator_is_required(self):
        res = residual(ThinSVD.zeros(2, 2), fully_observed(-np.diag([3.0, 1.0])))
        with self.assertRaises(TypeError):
            lmo(res, 2.0)

    def test_no_singular_pair_does_better(self):
        rng = np.random.default_rng(5)
        flat = rng.choice(63, 35, replace=False)
        rows, cols = np.divmod(flat, 7)
        obs = Observations.from_triplets(rows, cols, rng.standard_normal(35), (9, 7))
        res = residual(ThinSVD.zeros(9, 7), obs)
        delta = 2.5
        result = lmo(res, delta, power_tol=1e-14, power_max_iter=20000, rng=rng)
        G = res.matrix.toarray()
        chosen = float(np.sum(result.atom.to_dense() * G))
        U, S, Vt = np.linalg.svd(G, full_matrices=False)
        for k in range(len(S)):
            for sign in (1.0, -1.0):
                candidate = sign * delta * np.outer(U[:, k], Vt[k])
                self.assertLessEqual(chosen, float(np.sum(candidate * G)) + 1e-8 * delta * S[0])


class TestLineSearch(unittest.TestCase):
    def setUp(self):
        self.obs = Observations.from_triplets([0], [0], [1.0], (1, 1))
        self.svd = ThinSVD.zeros(1, 1)

    def test_unclamped(self):
        self.assertEqual(exact_line_search(self.svd, self.obs, [1.0], 1.0), 1.0)

    def test_half_step(self):
        self.assertEqual(exact_line_search(self.svd, self.obs, [2.0], 1.0), 0.5)

    def test_clamped_to_cap(self):
        self.assertEqual(exact_line_search(self.svd, self.obs, [0.5], 1.0), 1.0)

    def test_zero_direction(self):
        self.assertEqual(exact_line_search(self.svd, self.obs, [0.0], 1.0), 0.0)

    def test_ascent_direction(self):
        self.assertEqual(exact_line_search(self.svd, self.obs, [-1.0], 1.0), 0.0)

    def test_non_positive_cap(self):
        with self.assertRaises(ValueError):
            exact_line_search(self.svd, self.obs, [1.0], 0.0)

    def test_matches_grid_search(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            svd = random_svd(rng, 5, 4, 2)
            obs = fully_observed(rng.standard_normal((5, 4)))
            res = residual(svd, obs)
            d = rng.standard_normal(len(obs))
            tau_max = float(rng.uniform(0.1, 5.0))
            tau = exact_line_search(svd, obs, d, tau_max, res=res)
            grid = np.linspace(0.0, tau_max, 1000)
            on_grid = 0.5 * np.sum((res.values + np.outer(grid, d)) ** 2, axis=1)
            at_tau = 0.5 * np.sum((res.values + tau * d) ** 2)
            self.assertLessEqual(at_tau, on_grid.min() + 1e-12)

    @settings(max_examples=50, deadline=None)
    @given(
        seed=st.integers(min_value=0, max_value=2**32 - 1),
        tau_max=st.floats(min_value=1e-3, max_value=10.0),
    )
    def test_never_increases_objective(self, seed, tau_max):
        rng = np.random.default_rng(seed)
        svd = random_svd(rng, 5, 4, 2)
        obs = fully_observed(rng.standard_normal((5, 4)))
        res = residual(svd, obs)
        d = rng.standard_normal(len(obs))
        tau = exact_line_search(svd, obs, d, tau_max, res=res)
        self.assertGreaterEqual(tau, 0.0)
        self.assertLessEqual(tau, tau_max)
        after = 0.5 * np.sum((res.values + tau * d) ** 2)
        self.assertLessEqual(after, 0.5 * res.values @ res.values + 1e-12)


class TestDualityGapAndRMSE(unittest.TestCase):
    def test_gap_at_origin(self):
        res = residual(ThinSVD.zeros(2, 2), fully_observed(-np.diag([3.0, 1.0])))
        result = lmo(res, 2.0, rng=np.random.default_rng(0))
        self.assertAlmostEqual(duality_gap(ThinSVD.zeros(2, 2), res, result.atom), 6.0, places=6)

    def test_gap_at_exact_fit(self):
        svd = diag_svd([2.0, 1.0])
        res = residual(svd, fully_observed(svd.to_dense()))
        atom = lmo(res, 3.0, rng=np.random.default_rng(0)).atom
        self.assertAlmostEqual(duality_gap(svd, res, atom), 0.0, places=12)

    def test_gap_bounds_suboptimality_along_a_run(self):
        data, truth = synthetic(20, 15, 3, 0.5, 0.1, seed=2)
        config = SolverConfig(
            delta=nuclear_norm(truth), max_iters=30, rel_gap_tol=1e-12, variant="fw"
        )
        _, trace = run_fw(data.train, config)
        # any feasible objective value bounds f* from above
        reference = run_fw(data.train, config.replace(max_iters=1000)).trace
        f_ref = float(reference.column("objective").min())
        before = [trace.initial_objective, *trace.column("objective")[:-1]]
        for record, f in zip(trace, before):
            with self.subTest(iter=record.iter):
                self.assertGreaterEqual(record.gap, f - f_ref - 1e-8 * max(1.0, f))

    def test_rmse(self):
        test = Observations.from_triplets([0, 1], [0, 1], [3.0, 4.0], (2, 2))
        self.assertAlmostEqual(rmse(ThinSVD.zeros(2, 2), test), np.sqrt(12.5), places=12)

    def test_rmse_exact_fit(self):
        svd = diag_svd([2.0, 1.0])
        self.assertAlmostEqual(rmse(svd, fully_observed(svd.to_dense())), 0.0, places=12)

    def test_rmse_empty(self):
        with self.assertRaises(EmptyObservationsError):
            rmse(ThinSVD.zeros(2, 2), Observations.empty(2, 2))


if __name__ == "__main__":
    unittest.main()
