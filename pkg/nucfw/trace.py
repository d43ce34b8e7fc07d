from collections.abc import Iterator
from dataclasses import astuple, dataclass, field, fields
from typing import Literal

import numpy as np
from numpy.typing import NDArray

StepType = Literal["fw", "away", "inface", "rd-interior", "rd-exterior"]

TRACE_COLUMNS = ("iter", "objective", "gap", "nuclear_norm", "rank", "step_type", "tau", "elapsed_s")


@dataclass(frozen=True)
class TraceRecord:
    """One solver iteration.

    `objective`, `nuclear_norm` and `rank` describe the iterate produced by the iteration;
    `gap` is the Frank-Wolfe gap certified at the iterate the iteration started from.
    When no linear subproblem was solved (rank-drop iterations) the previous gap is
    repeated and `gap_stale` is set.
    """

    iter: int
    objective: float
    gap: float
    nuclear_norm: float
    rank: int
    step_type: StepType
    tau: float
    elapsed: float
    gap_stale: bool = False

    def as_row(self) -> tuple[object, ...]:
        return astuple(self)[: len(TRACE_COLUMNS)]


@dataclass
class IterateTrace:
    variant: str
    initial_objective: float = float("nan")
    records: list[TraceRecord] = field(default_factory=list)

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def __getitem__(self, index: int) -> TraceRecord:
        return self.records[index]

    def column(self, name: str) -> NDArray[np.generic]:
        if name not in {f.name for f in fields(TraceRecord)}:
            raise KeyError(name)
        return np.array([getattr(r, name) for r in self.records])

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]

    @property
    def max_rank(self) -> int:
        return max((r.rank for r in self.records), default=0)

    def fw_steps(self) -> NDArray[np.int64]:
        """N_fw^k: Frank-Wolfe steps taken up to and including record k."""
        return np.cumsum([r.step_type == "fw" for r in self.records])


def convergence_bound(
    trace: IterateTrace, delta: float, lipschitz: float = 1.0
) -> NDArray[np.float64]:
    """8 delta^2 L / (4 + N_fw^k) for every record k.

    For the half squared loss on observed entries the gradient is 1-Lipschitz in the
    Frobenius norm, hence the default L = 1.
    """
    if not lipschitz > 0:
        raise ValueError(f"lipschitz must be positive, got {lipschitz}")
    return 8.0 * delta**2 * lipschitz / (4.0 + trace.fw_steps())


def objective_lower_bound(trace: IterateTrace) -> float:
    """max_k (f(X_k) - g_k), a certified lower bound on the optimal value.

    The gap of record k certifies the iterate record k started from, whose objective is
    the previous record's (or the trace's initial objective for k = 0).
    """
    best = -np.inf
    start = trace.initial_objective
    for rec in trace.records:
        if not rec.gap_stale and np.isfinite(start):
            best = max(best, start - rec.gap)
        start = rec.objective
    return float(best)
