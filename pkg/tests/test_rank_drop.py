import unittest

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from nucfw.errors import DegenerateStepError, InfeasibleIterateError, RankDropUnavailableError
from nucfw.factored import nuclear_norm, numeric_rank
from nucfw.rank_drop import (
    ProjectedGradient,
    exterior_step,
    in_face_direction,
    interior_candidates,
    kappa,
    max_face_step,
    projected_gradient,
    rank_drop_direction,
    rank_drop_iterate,
)

from .helpers import diag_svd, random_svd, residual_with_gradient

S = np.array([2.0, 1.0])
E1 = np.array([1.0, 0.0])
E2 = np.array([0.0, 1.0])


class TestKappa(unittest.TestCase):
    def test_values(self):
        self.assertEqual(kappa(diag_svd([1.0]), 3.0), 1.0)
        self.assertEqual(kappa(diag_svd([2.0, 1.0]), 3.0), 0.0)
        self.assertEqual(kappa(diag_svd([2.0, 1.0]), 5.0), 1.0)

    def test_infeasible(self):
        with self.assertRaises(InfeasibleIterateError):
            kappa(diag_svd([2.0, 1.0]), 2.5)


class TestProjectedGradient(unittest.TestCase):
    def test_identity_factors(self):
        svd = diag_svd([2.0, 1.0])
        res = residual_with_gradient(svd, np.diag([-1.0, 0.0]))
        np.testing.assert_allclose(projected_gradient(svd, res).W, np.diag([-1.0, 0.0]), atol=1e-15)

    def test_zero_gradient(self):
        svd = diag_svd([2.0, 1.0])
        res = residual_with_gradient(svd, np.zeros((2, 2)))
        np.testing.assert_allclose(projected_gradient(svd, res).W, np.zeros((2, 2)), atol=1e-15)

    def test_matches_dense(self):
        rng = np.random.default_rng(5)
        svd = random_svd(rng, 15, 10, 4)
        res = residual_with_gradient(svd, rng.standard_normal((15, 10)))
        dense = svd.U.T @ res.matrix.toarray() @ svd.V
        np.testing.assert_allclose(projected_gradient(svd, res).W, dense, atol=1e-12)


class TestInteriorCandidates(unittest.TestCase):
    def test_two_by_two(self):
        W = ProjectedGradient(np.diag([-1.0, 0.0]))
        candidates = sorted(interior_candidates(W, S, 2.5), key=lambda c: c.lam)
        self.assertEqual(len(candidates), 2)

        zero, two = candidates
        self.assertAlmostEqual(zero.lam, 0.0, places=12)
        np.testing.assert_allclose(np.abs(zero.s), E2, atol=1e-12)
        np.testing.assert_allclose(np.abs(zero.t), E2, atol=1e-12)
        self.assertAlmostEqual(zero.s @ (zero.t / S), 1.0, places=12)
        self.assertAlmostEqual(zero.score, 0.0, places=12)

        self.assertAlmostEqual(two.lam, 2.0, places=12)
        np.testing.assert_allclose(np.abs(two.s), E1, atol=1e-12)
        self.assertAlmostEqual(two.s @ (two.t / S), 0.5, places=12)
        self.assertAlmostEqual(two.score, -1.0, places=12)

    def test_small_kappa_is_empty(self):
        W = ProjectedGradient(np.diag([-1.0, 0.0]))
        self.assertEqual(interior_candidates(W, S, 0.9), [])

    def test_zero_gradient(self):
        candidates = interior_candidates(ProjectedGradient(np.zeros((2, 2))), S, 2.5)
        self.assertGreater(len(candidates), 0)
        for c in candidates:
            self.assertEqual(c.lam, 0.0)
            self.assertAlmostEqual(c.score, 0.0, places=15)


class TestExteriorStep(unittest.TestCase):
    def test_identity_gradient(self):
        step = exterior_step(ProjectedGradient(np.eye(2)), S, 3.0)
        np.testing.assert_allclose(step.s, E1, atol=1e-12)
        self.assertAlmostEqual(step.tau_star, 2.0, places=10)

    def test_second_direction(self):
        step = exterior_step(ProjectedGradient(np.diag([0.0, 5.0])), S, 3.0)
        np.testing.assert_allclose(step.s, E2, atol=1e-12)
        self.assertAlmostEqual(step.tau_star, 0.5, places=10)

    def test_zero_gradient_prefers_largest_direction(self):
        step = exterior_step(ProjectedGradient(np.zeros((2, 2))), S, 3.0)
        np.testing.assert_allclose(step.s, E1, atol=1e-12)

    def test_degenerate_step(self):
        with self.assertRaises(DegenerateStepError):
            max_face_step(S, E1, 2.0)


class TestRankDropDirection(unittest.TestCase):
    def test_interior_selects_best_score(self):
        svd = diag_svd([2.0, 1.0])
        res = residual_with_gradient(svd, np.diag([-1.0, 0.0]))
        step = rank_drop_direction(svd, res, 8.0)
        self.assertEqual(step.case, "interior")
        np.testing.assert_allclose(np.abs(step.s), E2, atol=1e-12)
        self.assertAlmostEqual(step.tau_star, 1.0 / 7.0, places=12)

        out = rank_drop_iterate(svd, step, 8.0)
        self.assertEqual(numeric_rank(out), 1)
        np.testing.assert_allclose(out.to_dense(), np.diag([16.0 / 7.0, 0.0]), atol=1e-12)
        self.assertLessEqual(nuclear_norm(out), 8.0)

    def test_boundary_uses_exterior(self):
        svd = diag_svd([2.0, 1.0])
        res = residual_with_gradient(svd, np.eye(2))
        step = rank_drop_direction(svd, res, 3.0)
        self.assertEqual(step.case, "exterior")
        np.testing.assert_allclose(step.s, E1, atol=1e-12)
        np.testing.assert_allclose(step.t, E1, atol=1e-12)
        self.assertAlmostEqual(step.tau_star, 2.0, places=10)

        out = rank_drop_iterate(svd, step, 3.0)
        self.assertEqual(out.r, 1)
        np.testing.assert_allclose(out.to_dense(), np.diag([0.0, 3.0]), atol=1e-10)
        self.assertAlmostEqual(nuclear_norm(out), 3.0, places=10)

    def test_small_kappa_falls_back_to_exterior(self):
        svd = diag_svd([2.0, 1.0])
        res = residual_with_gradient(svd, np.diag([-1.0, 0.0]))
        self.assertEqual(rank_drop_direction(svd, res, 4.8).case, "exterior")

    def test_rank_one_unavailable(self):
        svd = diag_svd([2.0])
        res = residual_with_gradient(svd, np.ones((1, 1)))
        with self.assertRaises(RankDropUnavailableError):
            rank_drop_direction(svd, res, 3.0)

    @settings(max_examples=40, deadline=None)
    @given(
        seed=st.integers(min_value=0, max_value=2**32 - 1),
        slack=st.floats(min_value=0.0, max_value=8.0),
    )
    def test_drops_rank_and_stays_feasible(self, seed, slack):
        rng = np.random.default_rng(seed)
        svd = random_svd(rng, 8, 6, int(rng.integers(2, 6)))
        delta = nuclear_norm(svd) + slack * svd.S[-1]
        res = residual_with_gradient(svd, rng.standard_normal((8, 6)))
        step = rank_drop_direction(svd, res, delta)
        out = rank_drop_iterate(svd, step, delta)
        self.assertGreater(step.tau_star, 0.0)
        self.assertEqual(numeric_rank(out), svd.r - 1)
        self.assertLessEqual(nuclear_norm(out), delta * (1.0 + 1e-8))


class TestInFaceDirection(unittest.TestCase):
    def test_diagonal(self):
        np.testing.assert_allclose(in_face_direction(ProjectedGradient(np.diag([0.0, 5.0]))), E2)

    def test_symmetrizes(self):
        s = in_face_direction(ProjectedGradient(np.array([[1.0, 2.0], [0.0, 1.0]])))
        np.testing.assert_allclose(s, np.array([1.0, 1.0]) / np.sqrt(2.0), atol=1e-12)


if __name__ == "__main__":
    unittest.main()
