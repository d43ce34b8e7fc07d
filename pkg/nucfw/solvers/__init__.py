from collections.abc import Callable

from ..config import SolverConfig
from ..errors import ConfigError
from ..objectives import Observations
from ..sinks.base import TraceSink
from .away import run_afw
from .fw import run_fw
from .inface import run_inface
from .orchestrator import SolveResult, SolverOrchestrator
from .rdfw import run_rdfw

Runner = Callable[..., SolveResult]

RUNNERS: dict[str, Runner] = {
    "fw": run_fw,
    "afw": run_afw,
    "inface": run_inface,
    "rdfw": run_rdfw,
}


def get_runner(variant: str) -> Runner:
    try:
        return RUNNERS[variant]
    except KeyError:
        raise ConfigError(f"unknown variant {variant!r}, expected one of {sorted(RUNNERS)}") from None


def run_solver(
    obs: Observations,
    config: SolverConfig,
    sink: TraceSink | None = None,
    run_id: str | None = None,
) -> SolveResult:
    return get_runner(config.variant)(obs, config, sink, run_id)


__all__ = [
    "RUNNERS",
    "SolveResult",
    "SolverOrchestrator",
    "get_runner",
    "run_afw",
    "run_fw",
    "run_inface",
    "run_rdfw",
    "run_solver",
]
