"""
Datasets: MovieLens ingestion, splitting, normalization, the delta grid and synthetic
low-rank problems.

Description:
    Ratings are read into Observations with user and item ids compacted to dense 0-based
    indices (ascending id order). A seeded shuffle splits them 50/25/25 into train,
    validation and test; mean and std are fitted on train and applied to all three splits.
    The radius grid is delta_j = (2 + 0.2 j) * ||Y||_F with Y the normalized training
    entries.

How to initialize:
    obs = parse_movielens("ml-100k/u.data", "ml100k")
    data = split_and_normalize(obs, seed=0, name="ml100k")
    schedule = delta_for(data.train, j=5)
    data, truth = synthetic(50, 40, true_rank=5, obs_fraction=0.5, noise_std=0.0, seed=0)
"""

import re
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd
from loguru import logger
from numpy.typing import ArrayLike

from .errors import (
    ConfigError,
    DegenerateDataError,
    EmptyObservationsError,
    MalformedRatingsError,
)
from .factored import FloatArray, ThinSVD, full_svd_oracle
from .objectives import Observations, rmse

RatingsFormat = Literal["ml100k", "ml1m"]
Split = Literal["train", "validation", "test"]

MU_BASE = 2.0
MU_STEP = 0.2


@dataclass(frozen=True)
class Dataset:
    train: Observations
    validation: Observations
    test: Observations
    mean: float
    std: float
    name: str = "data"

    def split(self, which: Split) -> Observations:
        return getattr(self, which)

    def denormalize(self, values: ArrayLike) -> FloatArray:
        return np.asarray(values, dtype=float) * self.std + self.mean

    def raw_rmse(self, svd: ThinSVD, which: Split = "test") -> float:
        """RMSE on the original rating scale."""
        return self.std * rmse(svd, self.split(which))


@dataclass(frozen=True)
class DeltaSchedule:
    j: int
    mu: float
    delta: float


@dataclass(frozen=True)
class SyntheticParams:
    m: int
    n: int
    true_rank: int = 5
    obs_fraction: float = 0.5
    noise_std: float = 0.0


RATINGS_COLUMNS = ["user", "item", "rating", "timestamp"]
SEPARATORS: dict[str, str] = {"ml100k": r"\s+", "ml1m": "::"}


def _read_ratings_table(path: str | Path, format: RatingsFormat) -> pd.DataFrame:
    try:
        return pd.read_csv(
            path,
            sep=SEPARATORS[format],
            names=RATINGS_COLUMNS,
            header=None,
            dtype=str,
            engine="python",
        )
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=RATINGS_COLUMNS)
    except pd.errors.ParserError as e:
        found = re.search(r"line (\d+)", str(e))
        raise MalformedRatingsError(str(path), int(found.group(1)) if found else 0, str(e)) from e


def parse_movielens(path: str | Path, format: RatingsFormat = "ml100k") -> Observations:
    """Read `user item rating timestamp` records (whitespace-separated for ml100k, `::` for ml1m).

    Line numbers in errors count non-blank lines.
    """
    if format not in SEPARATORS:
        raise ConfigError(f"unknown ratings format {format!r}")
    table = _read_ratings_table(path, format)

    users = pd.to_numeric(table["user"], errors="coerce").astype(float)
    items = pd.to_numeric(table["item"], errors="coerce").astype(float)
    values = pd.to_numeric(table["rating"], errors="coerce").astype(float)
    bad = ~(np.isfinite(users) & np.isfinite(items) & np.isfinite(values))
    bad |= (users % 1 != 0) | (items % 1 != 0)
    if bad.any():
        k = int(np.flatnonzero(bad.to_numpy())[0])
        raise MalformedRatingsError(str(path), k + 1, " ".join(table.iloc[k].dropna()))

    ratings = pd.DataFrame(
        {"user": users.astype(np.int64), "item": items.astype(np.int64), "rating": values}
    )
    duplicates = int(ratings.duplicated(["user", "item"], keep="last").sum())
    if duplicates:
        logger.warning(f"{path}: {duplicates} duplicate (user, item) ratings, keeping the last")
        ratings = ratings.drop_duplicates(["user", "item"], keep="last")
    if ratings.empty:
        logger.warning(f"{path}: no ratings found")
        return Observations.empty(0, 0)

    rows, user_ids = pd.factorize(ratings["user"], sort=True)
    cols, item_ids = pd.factorize(ratings["item"], sort=True)
    obs = Observations.from_triplets(
        rows, cols, ratings["rating"].to_numpy(dtype=float), (len(user_ids), len(item_ids))
    )
    logger.info(f"{path}: {len(obs)} ratings, {obs.m} users, {obs.n} items")
    return obs


def split_and_normalize(obs: Observations, seed: int, name: str = "data") -> Dataset:
    n = len(obs)
    if n < 4:
        raise DegenerateDataError(f"need at least 4 observed entries to split, got {n}")
    perm = np.random.default_rng(seed).permutation(n)
    n_val = n // 4
    n_test = n // 4
    n_train = n - n_val - n_test
    train = obs.subset(perm[:n_train])
    validation = obs.subset(perm[n_train : n_train + n_val])
    test = obs.subset(perm[n_train + n_val :])

    mean = float(train.values.mean())
    std = float(train.values.std())
    if not std > 0:
        raise DegenerateDataError("training ratings have zero standard deviation")

    def normalize(split: Observations) -> Observations:
        return split.with_values((split.values - mean) / std)

    logger.debug(f"{name}: split {n_train}/{n_val}/{n_test}, mean {mean:.4f}, std {std:.4f}")
    return Dataset(normalize(train), normalize(validation), normalize(test), mean, std, name)


def delta_for(train: Observations, j: int) -> DeltaSchedule:
    if len(train) == 0:
        raise EmptyObservationsError("delta needs a non-empty training set")
    if j < 0:
        raise ValueError(f"grid index must be >= 0, got {j}")
    norm = train.frobenius_norm
    if norm == 0.0:
        raise DegenerateDataError("training values are all zero")
    mu = MU_BASE + MU_STEP * j
    return DeltaSchedule(j, mu, mu * norm)


def synthetic(
    m: int,
    n: int,
    true_rank: int,
    obs_fraction: float,
    noise_std: float,
    seed: int,
) -> tuple[Dataset, ThinSVD]:
    """X* = A B^T with standard normal factors, observed on a uniform sample of entries.

    The sampled entries form the training split. Up to as many unobserved entries are split
    evenly into validation and test. Values are not normalized (mean 0, std 1).
    """
    if m < 1 or n < 1:
        raise ConfigError(f"matrix dimensions must be positive, got {m}x{n}")
    if not 1 <= true_rank <= min(m, n):
        raise ConfigError(f"true_rank must be in [1, {min(m, n)}], got {true_rank}")
    if not 0 < obs_fraction <= 1:
        raise ConfigError(f"obs_fraction must be in (0, 1], got {obs_fraction}")
    if noise_std < 0:
        raise ConfigError(f"noise_std must be >= 0, got {noise_std}")

    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, true_rank))
    B = rng.standard_normal((n, true_rank))
    X = A @ B.T
    size = m * n
    n_obs = max(1, int(round(obs_fraction * size)))
    observed = rng.choice(size, n_obs, replace=False)
    held_out = rng.permutation(np.setdiff1d(np.arange(size), observed))[:n_obs]
    n_val = len(held_out) // 2

    def sample(flat: np.ndarray) -> Observations:
        rows, cols = np.divmod(flat, n)
        values = X[rows, cols] + noise_std * rng.standard_normal(len(flat))
        return Observations.from_triplets(rows, cols, values, (m, n))

    data = Dataset(
        sample(observed),
        sample(held_out[:n_val]),
        sample(held_out[n_val:]),
        mean=0.0,
        std=1.0,
        name=f"synthetic-{m}x{n}-r{true_rank}",
    )
    return data, full_svd_oracle(X)


def load_dataset(source: Observations | SyntheticParams, seed: int, name: str = "data") -> Dataset:
    """Split a parsed ratings matrix, or generate a synthetic problem, for one seed."""
    if isinstance(source, SyntheticParams):
        data, _ = synthetic(
            source.m, source.n, source.true_rank, source.obs_fraction, source.noise_std, seed
        )
        return data
    return split_and_normalize(source, seed, name)
