"""
Simplified in-face Frank-Wolfe.

Description:
    On the boundary of the ball (delta - ||X||_* <= inface_boundary_tol * delta) the
    iterate moves away from the face point delta U s s^T V^T that is most aligned with the
    gradient, all the way to the relative boundary of the minimal face, which drops the
    rank by one. The step is kept only if the objective does not increase; otherwise, and
    at every interior iterate, the regular FW step is taken. No interior binary search.
"""

from loguru import logger

from ..config import SolverConfig
from ..errors import DegenerateStepError
from ..factored import RankOneOuter, nuclear_norm
from ..objectives import Observations, duality_gap
from ..rank_drop import in_face_direction, max_face_step, projected_gradient
from ..sinks.base import TraceSink
from .orchestrator import IterateState, SolveResult, SolverOrchestrator, StepOutcome
from .steps import apply_update, frank_wolfe_step, outcome, solve_lmo


def on_boundary(state: IterateState) -> bool:
    delta = state.config.delta
    return delta - nuclear_norm(state.svd) <= state.config.inface_boundary_tol * delta


def in_face_step(state: IterateState) -> StepOutcome:
    result = solve_lmo(state)
    svd = state.svd
    if result.at_optimum or svd.r < 2 or not on_boundary(state):
        return frank_wolfe_step(state, result)

    delta = state.config.delta
    s = in_face_direction(projected_gradient(svd, state.res))
    try:
        tau = max_face_step(svd.S, s, delta)
    except DegenerateStepError as e:
        logger.debug(f"No in-face step: {e}")
        return frank_wolfe_step(state, result)

    moved = apply_update(state, 1.0 + tau, RankOneOuter(svd.U @ s, svd.V @ s, -tau * delta))
    out = outcome(state, "inface", moved, tau, duality_gap(svd, state.res, result.atom))
    if out.objective <= state.objective:
        return out
    logger.debug(
        f"In-face step raises f from {state.objective:.6g} to {out.objective:.6g}, taking FW"
    )
    return frank_wolfe_step(state, result)


def make_solver(sink: TraceSink | None = None) -> SolverOrchestrator:
    solver = SolverOrchestrator("inface", sink, initial_step_id="in_face")

    @solver.register_step("in_face")
    def in_face(state: IterateState):
        return "in_face", in_face_step(state)

    return solver


def run_inface(
    obs: Observations,
    config: SolverConfig,
    sink: TraceSink | None = None,
    run_id: str | None = None,
) -> SolveResult:
    return make_solver(sink).run(obs, config, run_id)
