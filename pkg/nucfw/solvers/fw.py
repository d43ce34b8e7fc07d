"""Vanilla Frank-Wolfe: one LMO and one exact line search per iteration."""

from ..config import SolverConfig
from ..objectives import Observations
from ..sinks.base import TraceSink
from .orchestrator import IterateState, SolveResult, SolverOrchestrator
from .steps import frank_wolfe_step


def make_solver(sink: TraceSink | None = None) -> SolverOrchestrator:
    solver = SolverOrchestrator("fw", sink)

    @solver.register_step("frank_wolfe")
    def frank_wolfe(state: IterateState):
        return "frank_wolfe", frank_wolfe_step(state)

    return solver


def run_fw(
    obs: Observations,
    config: SolverConfig,
    sink: TraceSink | None = None,
    run_id: str | None = None,
) -> SolveResult:
    return make_solver(sink).run(obs, config, run_id)
