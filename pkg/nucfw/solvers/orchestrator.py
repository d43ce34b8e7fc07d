import time
import uuid
from collections.abc import Callable
from dataclasses import dataclass
from typing import NamedTuple, final

import numpy as np
from loguru import logger

from ..atoms import AtomicDecomposition
from ..config import SolverConfig
from ..errors import InfeasibleIterateError, NucFWError, SolverError, UnknownStepError
from ..factored import FloatArray, ThinSVD, nuclear_norm, numeric_rank
from ..objectives import Observations, SparseResidual, objective_of, residual
from ..sinks.base import TraceSink
from ..trace import IterateTrace, StepType, TraceRecord

FEASIBILITY_TOL = 1e-8
_OBJECTIVE_FLOOR = 1e-12


@dataclass
class IterateState:
    """Everything a step handler may read or update between iterations."""

    obs: Observations
    config: SolverConfig
    svd: ThinSVD
    res: SparseResidual
    objective: float
    rng: np.random.Generator
    gap: float = float("nan")
    atoms: AtomicDecomposition | None = None
    warm_v: FloatArray | None = None


@dataclass(frozen=True)
class StepOutcome:
    """The iterate a step produced. `gap` is None when no linear subproblem was solved."""

    step_type: StepType
    svd: ThinSVD
    res: SparseResidual
    objective: float
    tau: float
    gap: float | None


class SolveResult(NamedTuple):
    svd: ThinSVD
    trace: IterateTrace


# Type alias for the step handler function
StepHandler = Callable[[IterateState], tuple[str, StepOutcome]]


def check_feasible(svd: ThinSVD, delta: float) -> None:
    nn = nuclear_norm(svd)
    if nn > delta + FEASIBILITY_TOL * max(1.0, delta):
        raise InfeasibleIterateError(f"nuclear norm {nn:.12g} exceeds delta {delta:.12g}")


@final
class SolverOrchestrator:
    variant: str
    steps: dict[str, StepHandler]
    initial_step_id: str

    def __init__(
        self,
        variant: str,
        sink: TraceSink | None = None,
        initial_step_id: str = "frank_wolfe",
    ) -> None:
        """
        Initialize a SolverOrchestrator instance.

        Args:
            variant (str): Label written into the trace.
            sink (TraceSink, optional): Receives every record as it is produced.
            initial_step_id (str, optional): The first step to run. Defaults to "frank_wolfe".
        """
        self.variant = variant
        self.sink = sink
        self.initial_step_id = initial_step_id
        self.steps = {}

    def register_step(self, step_id: str) -> Callable[[StepHandler], StepHandler]:
        def decorator(func: StepHandler) -> StepHandler:
            self.steps[step_id] = func
            return func

        return decorator

    def _get_handler(self, step_id: str) -> StepHandler:
        handler = self.steps.get(step_id)
        if handler is None:
            raise UnknownStepError(f"No handler registered for step: {step_id}")
        return handler

    def run(
        self, obs: Observations, config: SolverConfig, run_id: str | None = None
    ) -> SolveResult:
        run_id = run_id or f"{self.variant}_{uuid.uuid4().hex[:8]}"
        step_id = self.initial_step_id
        self._get_handler(step_id)

        svd = ThinSVD.zeros(obs.m, obs.n)
        res = residual(svd, obs)
        state = IterateState(
            obs, config, svd, res, objective_of(res), np.random.default_rng(config.seed)
        )
        trace = IterateTrace(self.variant, initial_objective=state.objective)
        logger.info(
            f"[{run_id}] {self.variant}: {obs.m}x{obs.n}, {len(obs)} observed, "
            f"delta={config.delta:.6g}, max_iters={config.max_iters}"
        )

        start = time.perf_counter()
        try:
            for k in range(config.max_iters):
                handler = self._get_handler(step_id)
                f_before = state.objective
                next_step_id, out = handler(state)

                check_feasible(out.svd, config.delta)
                stale = out.gap is None
                gap = state.gap if out.gap is None else out.gap
                state.svd, state.res, state.objective, state.gap = (
                    out.svd,
                    out.res,
                    out.objective,
                    gap,
                )

                record = TraceRecord(
                    iter=k,
                    objective=out.objective,
                    gap=gap,
                    nuclear_norm=nuclear_norm(out.svd),
                    rank=numeric_rank(out.svd, config.rank_threshold),
                    step_type=out.step_type,
                    tau=out.tau,
                    elapsed=time.perf_counter() - start,
                    gap_stale=stale,
                )
                trace.append(record)
                if self.sink is not None:
                    self.sink.emit(run_id, record)
                logger.debug(
                    f"[{run_id}] {k} {out.step_type}: f={out.objective:.6g} gap={gap:.3g} "
                    f"rank={record.rank} tau={out.tau:.3g}"
                )

                if not stale and gap <= config.rel_gap_tol * max(f_before, _OBJECTIVE_FLOOR):
                    logger.info(f"[{run_id}] converged after {k + 1} iterations")
                    break
                step_id = next_step_id
            else:
                logger.info(f"[{run_id}] reached max_iters={config.max_iters}")
        except NucFWError as e:
            raise SolverError(f"{self.variant} failed at iteration {len(trace)}: {e}", trace) from e
        finally:
            if self.sink is not None:
                self.sink.close(run_id)

        logger.info(
            f"[{run_id}] f={state.objective:.6g} rank={state.svd.r} "
            f"nuclear_norm={nuclear_norm(state.svd):.6g} in {time.perf_counter() - start:.2f}s"
        )
        return SolveResult(state.svd, trace)
