"""Step building blocks shared by the solver variants."""

from ..factored import RankOneOuter, ThinSVD, rank_one_update
from ..objectives import (
    LMOResult,
    duality_gap,
    entries_of,
    exact_line_search,
    lmo,
    objective_of,
    residual,
)
from ..trace import StepType
from .orchestrator import IterateState, StepOutcome


def solve_lmo(state: IterateState) -> LMOResult:
    config = state.config
    v0 = state.warm_v if config.lmo_warm_start else None
    result = lmo(
        state.res, config.delta, config.power_tol, config.power_max_iter, rng=state.rng, v0=v0
    )
    if not result.at_optimum:
        state.warm_v = result.atom.v
    return result


def apply_update(
    state: IterateState, iterate_scale: float, term: RankOneOuter
) -> ThinSVD:
    config = state.config
    return rank_one_update(state.svd, iterate_scale, term, config.rank_threshold, config.ortho_tol)


def outcome(
    state: IterateState, step_type: StepType, svd: ThinSVD, tau: float, gap: float | None
) -> StepOutcome:
    res = residual(svd, state.obs)
    return StepOutcome(step_type, svd, res, objective_of(res), tau, gap)


def unchanged(state: IterateState, step_type: StepType, gap: float | None) -> StepOutcome:
    return StepOutcome(step_type, state.svd, state.res, state.objective, 0.0, gap)


def frank_wolfe_step(state: IterateState, result: LMOResult | None = None) -> StepOutcome:
    """x + tau (s - x) with s the LMO atom and tau in [0, 1] by exact line search."""
    result = result if result is not None else solve_lmo(state)
    gap = duality_gap(state.svd, state.res, result.atom)
    if result.at_optimum:
        return unchanged(state, "fw", gap)

    direction = entries_of(result.atom, state.obs) - state.res.fitted
    tau = exact_line_search(state.svd, state.obs, direction, 1.0, res=state.res)
    if tau == 0.0:
        return unchanged(state, "fw", gap)
    atom = result.atom
    svd = apply_update(state, 1.0 - tau, RankOneOuter(atom.u, atom.v, tau * atom.scale))
    return outcome(state, "fw", svd, tau, gap)
