import tempfile
import unittest
from pathlib import Path

import numpy as np

from nucfw.data import (
    SyntheticParams,
    delta_for,
    load_dataset,
    parse_movielens,
    split_and_normalize,
    synthetic,
)
from nucfw.errors import (
    ConfigError,
    DegenerateDataError,
    EmptyObservationsError,
    MalformedRatingsError,
)
from nucfw.factored import ThinSVD, numeric_rank
from nucfw.objectives import Observations

SAMPLE = Path(__file__).parent / "sample_u.data"


class TestParseMovielens(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def write(self, text: str) -> Path:
        path = Path(self.tmp.name) / "ratings"
        path.write_text(text, encoding="utf-8")
        return path

    def test_sample_file(self):
        obs = parse_movielens(SAMPLE)
        self.assertEqual(len(obs), 8)
        self.assertEqual(obs.shape, (8, 8))
        # user 22 and item 377 are the smallest user id and the sixth item id
        self.assertEqual((obs.rows[0], obs.cols[0], obs.values[0]), (0, 5, 1.0))

    def test_single_line(self):
        obs = parse_movielens(self.write("196\t242\t3\t881250949\n"))
        self.assertEqual(obs.shape, (1, 1))
        np.testing.assert_array_equal(obs.values, [3.0])

    def test_ml1m_format(self):
        obs = parse_movielens(self.write("1::1193::5::978300760\n1::661::3::978302109\n"), "ml1m")
        self.assertEqual(obs.shape, (1, 2))
        np.testing.assert_array_equal(obs.values, [3.0, 5.0])

    def test_malformed_line_number(self):
        with self.assertRaises(MalformedRatingsError) as ctx:
            parse_movielens(self.write("1\t2\t3\t0\n1\t2\n"))
        self.assertEqual(ctx.exception.line_number, 2)

    def test_non_numeric_rating(self):
        with self.assertRaises(MalformedRatingsError):
            parse_movielens(self.write("1\t2\tgood\t0\n"))

    def test_duplicate_keeps_last(self):
        obs = parse_movielens(self.write("1\t2\t3\t0\n1\t2\t5\t1\n"))
        self.assertEqual(len(obs), 1)
        np.testing.assert_array_equal(obs.values, [5.0])

    def test_whitespace_and_three_fields(self):
        obs = parse_movielens(self.write("5  9 4\n\n2\t9\t1\t0\n"))
        self.assertEqual(obs.shape, (2, 1))
        np.testing.assert_array_equal(obs.values, [1.0, 4.0])

    def test_fractional_id(self):
        with self.assertRaises(MalformedRatingsError):
            parse_movielens(self.write("1.5\t2\t3\t0\n"))

    def test_empty_file(self):
        self.assertEqual(len(parse_movielens(self.write(""))), 0)

    def test_unknown_format(self):
        with self.assertRaises(ConfigError):
            parse_movielens(SAMPLE, "netflix")

    def test_missing_file(self):
        with self.assertRaises(OSError):
            parse_movielens(Path(self.tmp.name) / "absent.data")


class TestSplitAndNormalize(unittest.TestCase):
    def setUp(self):
        self.obs = parse_movielens(SAMPLE)
        self.data = split_and_normalize(self.obs, seed=0, name="sample")

    def test_split_sizes(self):
        sizes = (len(self.data.train), len(self.data.validation), len(self.data.test))
        self.assertEqual(sizes, (4, 2, 2))

    def test_train_is_standardized(self):
        self.assertAlmostEqual(float(self.data.train.values.mean()), 0.0, places=12)
        self.assertAlmostEqual(float(self.data.train.values.std()), 1.0, places=12)

    def test_denormalize_recovers_ratings(self):
        raw = {
            (int(i), int(j)): v for i, j, v in zip(self.obs.rows, self.obs.cols, self.obs.values)
        }
        for split in (self.data.train, self.data.validation, self.data.test):
            for i, j, v in zip(split.rows, split.cols, self.data.denormalize(split.values)):
                self.assertAlmostEqual(v, raw[(int(i), int(j))], places=12)

    def test_same_seed_same_split(self):
        again = split_and_normalize(self.obs, seed=0)
        np.testing.assert_array_equal(again.test.rows, self.data.test.rows)
        np.testing.assert_array_equal(again.test.cols, self.data.test.cols)

    def test_raw_rmse_scales_by_std(self):
        zero = ThinSVD.zeros(*self.obs.shape)
        expected = self.data.std * np.sqrt(np.mean(self.data.test.values**2))
        self.assertAlmostEqual(self.data.raw_rmse(zero), expected, places=12)

    def test_too_few_entries(self):
        with self.assertRaises(DegenerateDataError):
            split_and_normalize(self.obs.subset(np.arange(3)), seed=0)

    def test_constant_ratings(self):
        with self.assertRaises(DegenerateDataError):
            split_and_normalize(self.obs.with_values(np.ones(8)), seed=0)


class TestDeltaFor(unittest.TestCase):
    def setUp(self):
        self.train = Observations.from_triplets([0, 1], [0, 0], [3.0, 4.0], (2, 1))

    def test_base_radius(self):
        schedule = delta_for(self.train, 0)
        self.assertEqual((schedule.j, schedule.mu), (0, 2.0))
        self.assertAlmostEqual(schedule.delta, 10.0)

    def test_grid_index(self):
        schedule = delta_for(self.train, 5)
        self.assertAlmostEqual(schedule.mu, 3.0)
        self.assertAlmostEqual(schedule.delta, 15.0)

    def test_invalid_inputs(self):
        with self.assertRaises(EmptyObservationsError):
            delta_for(Observations.empty(2, 2), 0)
        with self.assertRaises(ValueError):
            delta_for(self.train, -1)
        with self.assertRaises(DegenerateDataError):
            delta_for(self.train.with_values([0.0, 0.0]), 0)


class TestSynthetic(unittest.TestCase):
    def test_splits_and_truth(self):
        data, truth = synthetic(10, 8, 2, 0.5, 0.0, seed=1)
        self.assertEqual(numeric_rank(truth), 2)
        self.assertEqual(len(data.train), 40)
        self.assertEqual(len(data.validation) + len(data.test), 40)
        self.assertEqual((data.mean, data.std), (0.0, 1.0))

        dense = truth.to_dense()
        np.testing.assert_allclose(
            data.train.values, dense[data.train.rows, data.train.cols], atol=1e-10
        )
        seen = set(zip(data.train.rows.tolist(), data.train.cols.tolist()))
        held = set(zip(data.test.rows.tolist(), data.test.cols.tolist()))
        self.assertFalse(seen & held)

    def test_fully_observed_has_empty_held_out_splits(self):
        data, _ = synthetic(5, 4, 2, 1.0, 0.0, seed=0)
        self.assertEqual(len(data.train), 20)
        self.assertEqual((len(data.validation), len(data.test)), (0, 0))

    def test_load_dataset_is_reproducible(self):
        params = SyntheticParams(6, 5, true_rank=2, obs_fraction=0.6, noise_std=0.1)
        first = load_dataset(params, seed=3)
        second = load_dataset(params, seed=3)
        np.testing.assert_array_equal(first.train.values, second.train.values)

    def test_invalid_parameters(self):
        for args in ((0, 5, 1, 0.5, 0.0), (5, 5, 6, 0.5, 0.0), (5, 5, 2, 0.0, 0.0), (5, 5, 2, 0.5, -1.0)):
            with self.subTest(args=args), self.assertRaises(ConfigError):
                synthetic(*args, seed=0)


if __name__ == "__main__":
    unittest.main()
