"""
Away-step Frank-Wolfe over the atoms of the nuclear ball.

Description:
    Each iteration compares the FW direction s - x with the away direction x - v, v the
    active member most aligned with the gradient, and takes the one with the larger
    descent <-grad f, d>. Away steps are capped at alpha_v / (1 - alpha_v) so the weights
    stay a convex combination; a member whose weight reaches zero leaves the active set.
"""

import numpy as np
from loguru import logger

from ..atoms import ORIGIN, AtomicDecomposition
from ..config import SolverConfig
from ..errors import DecompositionMismatchError
from ..factored import RankOneOuter, ThinSVD
from ..objectives import Observations, duality_gap, exact_line_search
from ..sinks.base import TraceSink
from .orchestrator import IterateState, SolveResult, SolverOrchestrator, StepOutcome
from .steps import apply_update, frank_wolfe_step, outcome, solve_lmo, unchanged

DECOMPOSITION_TOL = 1e-6


def _atoms(state: IterateState) -> AtomicDecomposition:
    if state.atoms is None:
        state.atoms = AtomicDecomposition.empty(state.obs.m, state.obs.n, state.config.delta)
    return state.atoms


def check_decomposition(atoms: AtomicDecomposition, svd: ThinSVD) -> None:
    """Densified atom set against the factored iterate, in spectral norm. Test scale only."""
    err = float(np.linalg.norm(atoms.to_dense() - svd.to_dense(), 2))
    if err > DECOMPOSITION_TOL * max(1.0, atoms.delta):
        raise DecompositionMismatchError(
            f"atom set differs from the iterate by {err:.3e} ({len(atoms)} atoms, rank {svd.r})"
        )


def away_or_fw_step(state: IterateState) -> StepOutcome:
    atoms = _atoms(state)
    delta = state.config.delta
    result = solve_lmo(state)
    if result.at_optimum:
        return frank_wolfe_step(state, result)

    fitted = state.res.fitted
    gap = duality_gap(state.svd, state.res, result.atom)
    away, away_score = atoms.away_atom(state.res)
    away_descent = away_score - float(state.res.values @ fitted)
    if gap >= away_descent:
        out = frank_wolfe_step(state, result)
        if out.tau > 0:
            # LMO atom is -delta u v^T, i.e. delta (-u) v^T
            atoms.add_fw(-result.atom.u, result.atom.v, out.tau)
    else:
        tau_max = atoms.max_away_step(away)
        if away == ORIGIN:
            member = np.zeros_like(fitted)
        else:
            u_v, v_v = atoms.atom(away)
            member = delta * u_v[state.obs.rows] * v_v[state.obs.cols]
        tau = exact_line_search(state.svd, state.obs, fitted - member, tau_max, res=state.res)
        logger.debug(
            f"Away step from {'origin' if away == ORIGIN else f'atom {away}'}: "
            f"tau={tau:.4g} (cap {tau_max:.4g})"
        )
        if tau == 0.0:
            return unchanged(state, "away", gap)
        if away == ORIGIN:
            svd = ThinSVD(state.svd.U, (1.0 + tau) * state.svd.S, state.svd.V)
        else:
            svd = apply_update(state, 1.0 + tau, RankOneOuter(u_v, v_v, -tau * delta))
        atoms.take_away(away, tau, at_cap=tau >= tau_max)
        out = outcome(state, "away", svd, tau, gap)

    if state.config.debug_checks:
        check_decomposition(atoms, out.svd)
    return out


def make_solver(sink: TraceSink | None = None) -> SolverOrchestrator:
    solver = SolverOrchestrator("afw", sink, initial_step_id="away_or_fw")

    @solver.register_step("away_or_fw")
    def away_or_fw(state: IterateState):
        return "away_or_fw", away_or_fw_step(state)

    return solver


def run_afw(
    obs: Observations,
    config: SolverConfig,
    sink: TraceSink | None = None,
    run_id: str | None = None,
) -> SolveResult:
    return make_solver(sink).run(obs, config, run_id)
