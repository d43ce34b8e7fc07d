from .config import SolverConfig, load_config_file
from .data import Dataset, DeltaSchedule, delta_for, parse_movielens, split_and_normalize, synthetic
from .factored import RankOneOuter, ThinSVD, full_svd_oracle, nuclear_norm, numeric_rank
from .objectives import Observations, rmse
from .solvers import get_runner, run_afw, run_fw, run_inface, run_rdfw, run_solver
from .trace import IterateTrace, TraceRecord, convergence_bound

__all__ = [
    "Dataset",
    "DeltaSchedule",
    "IterateTrace",
    "Observations",
    "RankOneOuter",
    "SolverConfig",
    "ThinSVD",
    "TraceRecord",
    "convergence_bound",
    "delta_for",
    "full_svd_oracle",
    "get_runner",
    "load_config_file",
    "nuclear_norm",
    "numeric_rank",
    "parse_movielens",
    "rmse",
    "run_afw",
    "run_fw",
    "run_inface",
    "run_rdfw",
    "run_solver",
    "split_and_normalize",
    "synthetic",
]
