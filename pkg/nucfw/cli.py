"""
Command-line experiment runner.

Description:
    nucfw run         solve with one or more variants over several seeds; writes one
                      trace_<variant>_<seed>.csv per run and summary.csv
    nucfw tune-delta  walk the radius grid delta_j = (2 + 0.2 j) ||Y||_F until the mean
                      validation RMSE stops improving by more than --tune-tol; writes tuning.csv
    nucfw verify      run the randomized property suite and print a pass/fail table

    Settings come from flags, then from the flat --config file, then from defaults.
    The log level is read from NUCFW_LOG (default INFO).

How to initialize:
    nucfw run --synthetic 50x40 --true-rank 5 --variant fw,rdfw --seeds 0,1,2 --out runs
    nucfw run --dataset ml-100k/u.data --format ml100k --mu-index 5 --jobs 4 --out runs
    nucfw verify --scale quick
"""

import argparse
import os
import sys
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from loguru import logger

from .config import VARIANTS, SolverConfig, read_config_file
from .data import Split, SyntheticParams, delta_for, load_dataset, parse_movielens
from .errors import ConfigError, NucFWError
from .objectives import Observations, rmse
from .sinks import CsvTraceSink, FanOutTraceSink, LoggingTraceSink, TraceSink
from .solvers import run_solver
from .verify import PROPERTIES, format_report, run_suite

TUNE_TOL = 1e-3
DEFAULT_MAX_MU_INDEX = 50

TUNING_COLUMNS = ("j", "mu", "delta", "val_rmse")

# Keys of a config file that describe the run rather than the solver.
RUN_KEYS = frozenset(
    {
        "dataset",
        "format",
        "synthetic",
        "true_rank",
        "obs_fraction",
        "noise_std",
        "variant",
        "seed",
        "seeds",
        "jobs",
        "out",
        "mu_index",
        "raw_rmse",
        "log_trace",
    }
)


def configure_logging(level: str | None = None) -> None:
    logger.remove()
    logger.add(sys.stderr, level=(level or os.environ.get("NUCFW_LOG", "INFO")).upper())


@dataclass(frozen=True)
class RunSpec:
    source: Observations | SyntheticParams
    name: str
    variants: tuple[str, ...]
    settings: dict[str, Any]
    seeds: tuple[int, ...]
    out_dir: Path
    delta: float | None = None
    mu_index: int = 0
    jobs: int = 1
    raw_rmse: bool = False
    log_trace: bool = False
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def trials(self) -> int:
        return len(self.seeds)

    def solver_config(self, delta: float, variant: str, seed: int) -> SolverConfig:
        return SolverConfig.from_mapping(
            {**self.settings, "delta": delta, "variant": variant, "seed": seed}
        )


@dataclass(frozen=True)
class RunOutcome:
    variant: str
    seed: int
    delta: float
    rmse: float
    raw_rmse: float
    final_rank: int
    max_rank: int
    iterations: int
    elapsed: float


def solve_one(
    spec: RunSpec,
    variant: str,
    seed: int,
    mu_index: int | None = None,
    split: Split = "test",
    write_trace: bool = True,
) -> RunOutcome:
    """One (variant, seed) run; the radius is --delta or the grid value at mu_index.

    An empty evaluation split scores NaN.
    """
    data = load_dataset(spec.source, seed, spec.name)
    if mu_index is None and spec.delta is not None:
        delta = spec.delta
    else:
        delta = delta_for(data.train, spec.mu_index if mu_index is None else mu_index).delta
    config = spec.solver_config(delta, variant, seed)

    start = time.perf_counter()
    svd, trace = run_solver(data.train, config, make_sink(spec, write_trace), f"{variant}_{seed}")
    elapsed = time.perf_counter() - start

    if len(data.split(split)) == 0:
        logger.warning(f"{data.name} seed {seed}: {split} split is empty, RMSE is NaN")
        score = raw_score = float("nan")
    else:
        score = rmse(svd, data.split(split))
        raw_score = data.raw_rmse(svd, split)
    return RunOutcome(
        variant=variant,
        seed=seed,
        delta=delta,
        rmse=score,
        raw_rmse=raw_score,
        final_rank=trace.final.rank,
        max_rank=trace.max_rank,
        iterations=len(trace),
        elapsed=elapsed,
    )


def _execute(spec: RunSpec, tasks: Sequence[tuple[Any, ...]], **kwargs: Any) -> list[RunOutcome]:
    """Run tasks (variant, seed[, mu_index]) in submission order, up to spec.jobs at a time."""
    if spec.jobs <= 1 or len(tasks) <= 1:
        return [solve_one(spec, *task, **kwargs) for task in tasks]
    with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
        futures = [pool.submit(solve_one, spec, *task, **kwargs) for task in tasks]
        return [future.result() for future in futures]


def make_sink(spec: RunSpec, write_trace: bool = True) -> TraceSink | None:
    sinks: list[TraceSink] = []
    if write_trace:
        sinks.append(CsvTraceSink(str(spec.out_dir)))
    if spec.log_trace:
        sinks.append(LoggingTraceSink(level="INFO"))
    if len(sinks) > 1:
        return FanOutTraceSink(*sinks)
    return sinks[0] if sinks else None


def summarize(outcomes: Sequence[RunOutcome], raw_rmse: bool = False) -> pd.DataFrame:
    """One row per variant, in first-seen order."""
    aggregations = {
        "trials": ("seed", "size"),
        "mean_rmse": ("rmse", "mean"),
        "mean_final_rank": ("final_rank", "mean"),
        "max_final_rank": ("final_rank", "max"),
        "max_iterate_rank": ("max_rank", "max"),
        "mean_time_s": ("elapsed", "mean"),
    }
    if raw_rmse:
        aggregations["mean_raw_rmse"] = ("raw_rmse", "mean")
    runs = pd.DataFrame([asdict(o) for o in outcomes])
    return runs.groupby("variant", sort=False).agg(**aggregations).reset_index()


def write_table(path: Path, table: pd.DataFrame) -> None:
    table.to_csv(path, index=False, na_rep="nan", lineterminator="\n")


def cmd_run(spec: RunSpec) -> int:
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    tasks = [(variant, seed) for variant in spec.variants for seed in spec.seeds]
    logger.info(f"Running {len(tasks)} runs on {spec.name} with up to {spec.jobs} jobs")
    outcomes = _execute(spec, tasks)

    summary = summarize(outcomes, spec.raw_rmse)
    write_table(spec.out_dir / "summary.csv", summary)
    for row in summary.itertuples(index=False):
        print(
            f"{row.variant:<8} rmse {row.mean_rmse:.4f}  rank {row.mean_final_rank:.1f} "
            f"({row.max_final_rank})  max iterate rank {row.max_iterate_rank}  "
            f"time {row.mean_time_s:.2f}s"
        )
    return 0


def select_mu_index(
    evaluate: Callable[[int], float],
    tol: float = TUNE_TOL,
    max_index: int = DEFAULT_MAX_MU_INDEX,
) -> tuple[int, list[float]]:
    """Evaluate j = 0, 1, ... until the score improves by no more than tol.

    Returns the index of the lowest score seen and all scores in evaluation order.
    """
    scores: list[float] = []
    for j in range(max_index + 1):
        scores.append(evaluate(j))
        # a NaN score counts as no improvement
        if j > 0 and not scores[j - 1] - scores[j] > tol:
            break
    return int(np.argmin(scores)), scores


def cmd_tune_delta(spec: RunSpec) -> int:
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    variant = spec.variants[0]
    if len(spec.variants) > 1:
        logger.warning(f"tune-delta uses a single variant, tuning {variant}")
    tol = spec.extra.get("tune_tol", TUNE_TOL)
    max_index = spec.extra.get("max_mu_index", DEFAULT_MAX_MU_INDEX)
    rows: list[dict[str, Any]] = []

    def evaluate(j: int) -> float:
        tasks = [(variant, seed, j) for seed in spec.seeds]
        outcomes = _execute(spec, tasks, split="validation", write_trace=False)
        score = float(np.mean([o.rmse for o in outcomes]))
        delta = float(np.mean([o.delta for o in outcomes]))
        rows.append({"j": j, "mu": 2.0 + 0.2 * j, "delta": delta, "val_rmse": score})
        logger.info(f"j={j} mu={2.0 + 0.2 * j:.1f} delta={delta:.6g} val_rmse={score:.6f}")
        return score

    best, _ = select_mu_index(evaluate, tol, max_index)
    write_table(spec.out_dir / "tuning.csv", pd.DataFrame(rows, columns=list(TUNING_COLUMNS)))
    chosen = rows[best]
    print(f"selected j={best} mu={chosen['mu']:.1f} delta={chosen['delta']:.6g}")
    return 0


def cmd_verify(scale: str = "quick", names: Sequence[str] | None = None) -> int:
    if scale not in ("quick", "full"):
        raise ConfigError(f"scale must be 'quick' or 'full', got {scale!r}")
    unknown = [name for name in names or () if name not in PROPERTIES]
    if unknown:
        raise ConfigError(f"unknown properties: {', '.join(unknown)}")
    results = run_suite(scale, names or None)
    print(format_report(results))
    return 0 if all(r.passed for r in results) else 1


def parse_variants(value: str | Sequence[str]) -> tuple[str, ...]:
    items = value.split(",") if isinstance(value, str) else list(value)
    variants = [v.strip() for v in items if v.strip()]
    if variants == ["all"]:
        return tuple(VARIANTS)
    unknown = [v for v in variants if v not in VARIANTS]
    if unknown or not variants:
        raise ConfigError(f"variants must be 'all' or a list from {VARIANTS}, got {value!r}")
    return tuple(dict.fromkeys(variants))


def parse_seeds(value: str | int | Sequence[int]) -> tuple[int, ...]:
    if isinstance(value, int):
        return (value,)
    try:
        seeds = [int(s) for s in value.split(",")] if isinstance(value, str) else list(map(int, value))
    except ValueError as e:
        raise ConfigError(f"seeds must be a comma-separated list of integers, got {value!r}") from e
    if not seeds:
        raise ConfigError("at least one seed is required")
    return tuple(seeds)


def parse_shape(value: str) -> tuple[int, int]:
    try:
        m, n = (int(x) for x in value.lower().split("x"))
    except ValueError as e:
        raise ConfigError(f"--synthetic expects MxN, got {value!r}") from e
    return m, n


def build_spec(args: argparse.Namespace) -> RunSpec:
    file_values = read_config_file(args.config) if args.config else {}
    run_values = {key: file_values.pop(key) for key in RUN_KEYS & file_values.keys()}

    def pick(flag: Any, key: str, default: Any = None) -> Any:
        return flag if flag is not None else run_values.get(key, default)

    settings = dict(file_values)
    for key, flag in (
        ("max_iters", args.max_iters),
        ("rel_gap_tol", args.rel_gap),
        ("rank_threshold", args.rank_threshold),
    ):
        if flag is not None:
            settings[key] = flag
    delta = args.delta if args.delta is not None else settings.pop("delta", None)
    settings.pop("delta", None)
    # validate the solver settings before any work starts
    SolverConfig.from_mapping({**settings, "delta": delta if delta is not None else 1.0})

    dataset = pick(args.dataset, "dataset")
    shape = pick(args.synthetic, "synthetic")
    if dataset is not None:
        fmt = pick(args.format, "format", "ml100k")
        source: Observations | SyntheticParams = parse_movielens(dataset, fmt)
        name = f"{Path(dataset).stem}-{fmt}"
    elif shape is not None:
        m, n = parse_shape(shape)
        source = SyntheticParams(
            m,
            n,
            int(pick(args.true_rank, "true_rank", 5)),
            float(pick(args.obs_fraction, "obs_fraction", 0.5)),
            float(pick(args.noise_std, "noise_std", 0.0)),
        )
        name = f"synthetic-{m}x{n}"
    else:
        raise ConfigError("one of --dataset or --synthetic is required")

    jobs = int(pick(args.jobs, "jobs", 1))
    if jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {jobs}")
    mu_index = int(pick(args.mu_index, "mu_index", 0))
    if mu_index < 0:
        raise ConfigError(f"--mu-index must be >= 0, got {mu_index}")

    extra: dict[str, Any] = {}
    if getattr(args, "max_mu_index", None) is not None:
        extra["max_mu_index"] = args.max_mu_index
    if getattr(args, "tune_tol", None) is not None:
        extra["tune_tol"] = args.tune_tol

    return RunSpec(
        source=source,
        name=name,
        variants=parse_variants(pick(args.variant, "variant", "rdfw")),
        settings=settings,
        seeds=parse_seeds(pick(args.seeds, "seeds", run_values.get("seed", 0))),
        out_dir=Path(pick(args.out, "out", "runs")),
        delta=delta,
        mu_index=mu_index,
        jobs=jobs,
        raw_rmse=bool(pick(args.raw_rmse or None, "raw_rmse", False)),
        log_trace=bool(pick(args.log_trace or None, "log_trace", False)),
        extra=extra,
    )


def _add_run_arguments(parser: argparse.ArgumentParser) -> None:
    data = parser.add_argument_group("data")
    data.add_argument("--dataset", help="MovieLens ratings file (u.data or ratings.dat)")
    data.add_argument("--format", choices=["ml100k", "ml1m"], help="ratings file format")
    data.add_argument("--synthetic", metavar="MxN", help="generate a synthetic low-rank problem")
    data.add_argument("--true-rank", type=int, help="rank of the synthetic ground truth")
    data.add_argument("--obs-fraction", type=float, help="observed fraction of synthetic entries")
    data.add_argument("--noise-std", type=float, help="noise added to synthetic entries")

    solver = parser.add_argument_group("solver")
    solver.add_argument("--variant", help="comma list of fw, afw, inface, rdfw, or 'all'")
    solver.add_argument("--delta", type=float, help="nuclear-ball radius (overrides --mu-index)")
    solver.add_argument("--mu-index", type=int, help="radius grid index j, mu = 2 + 0.2 j")
    solver.add_argument("--max-iters", type=int, help="iteration cap (default 1000)")
    solver.add_argument("--rel-gap", type=float, help="relative duality-gap tolerance (1e-2)")
    solver.add_argument("--rank-threshold", type=float, help="singular value cutoff (1e-6)")
    solver.add_argument("--config", help="flat key = value config file")

    run = parser.add_argument_group("run")
    run.add_argument("--seeds", help="comma-separated seeds, one run per seed (default 0)")
    run.add_argument("--jobs", type=int, help="parallel runs (default 1)")
    run.add_argument("--out", help="output directory (default runs)")
    run.add_argument("--raw-rmse", action="store_true", help="also report raw-scale RMSE")
    run.add_argument("--log-trace", action="store_true", help="also log every iteration")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nucfw", description="Frank-Wolfe solvers for nuclear-norm constrained matrix completion"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="solve and write traces and a summary")
    _add_run_arguments(run)
    run.set_defaults(handler=lambda args: cmd_run(build_spec(args)))

    tune = commands.add_parser("tune-delta", help="select the radius grid index on validation")
    _add_run_arguments(tune)
    tune.add_argument("--max-mu-index", type=int, help="largest grid index to try (default 50)")
    tune.add_argument("--tune-tol", type=float, help="improvement threshold (default 1e-3)")
    tune.set_defaults(handler=lambda args: cmd_tune_delta(build_spec(args)))

    verify = commands.add_parser("verify", help="run the randomized property suite")
    verify.add_argument("--scale", choices=["quick", "full"], default="quick")
    verify.add_argument(
        "--property", action="append", dest="properties", help="run only this property"
    )
    verify.set_defaults(handler=lambda args: cmd_verify(args.scale, args.properties))
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    try:
        return args.handler(args)
    except (NucFWError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
