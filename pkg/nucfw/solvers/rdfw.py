"""
Rank-Drop Frank-Wolfe.

Description:
    After every FW step the solver tries one rank-drop step. The step is accepted when it
    lowers the numeric rank by exactly one and does not increase the objective; an
    accepted step is always followed by an FW step. A rejected or unavailable rank-drop
    step (rank < 2) is replaced by an FW step in the same iteration.

Steps:
    frank_wolfe -> rank_drop
    rank_drop   -> frank_wolfe  (step accepted)
    rank_drop   -> rank_drop    (FW fallback taken)
"""

from loguru import logger

from ..config import SolverConfig
from ..errors import DegenerateStepError, InfeasibleIterateError
from ..factored import numeric_rank
from ..objectives import Observations
from ..rank_drop import rank_drop_direction, rank_drop_iterate
from ..sinks.base import TraceSink
from .orchestrator import IterateState, SolveResult, SolverOrchestrator, StepOutcome
from .steps import frank_wolfe_step, outcome


def rank_drop_step(state: IterateState) -> StepOutcome | None:
    """The rank-drop outcome if acceptable, else None."""
    svd, config = state.svd, state.config
    if svd.r < 2:
        return None
    try:
        step = rank_drop_direction(svd, state.res, config.delta, config.zero_sv_tol)
        dropped = rank_drop_iterate(svd, step, config.delta, config.rank_threshold)
    except (DegenerateStepError, InfeasibleIterateError) as e:
        logger.warning(f"Rank-drop step unavailable, taking FW: {e}")
        return None

    rank = numeric_rank(dropped, config.rank_threshold)
    if rank != svd.r - 1:
        logger.warning(
            f"Rejected {step.case} rank-drop step: rank {svd.r} -> {rank}, tau*={step.tau_star:.4g}"
        )
        return None
    out = outcome(state, f"rd-{step.case}", dropped, step.tau_star, None)
    if out.objective > state.objective:
        logger.debug(
            f"Rank-drop step raises f from {state.objective:.6g} to {out.objective:.6g}"
        )
        return None
    return out


def make_solver(sink: TraceSink | None = None) -> SolverOrchestrator:
    solver = SolverOrchestrator("rdfw", sink)

    @solver.register_step("frank_wolfe")
    def frank_wolfe(state: IterateState):
        return "rank_drop", frank_wolfe_step(state)

    @solver.register_step("rank_drop")
    def rank_drop(state: IterateState):
        out = rank_drop_step(state)
        if out is not None:
            return "frank_wolfe", out
        return "rank_drop", frank_wolfe_step(state)

    return solver


def run_rdfw(
    obs: Observations,
    config: SolverConfig,
    sink: TraceSink | None = None,
    run_id: str | None = None,
) -> SolveResult:
    return make_solver(sink).run(obs, config, run_id)
