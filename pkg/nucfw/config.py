"""
SolverConfig: every knob of a solver run.

Description:
    Frozen dataclass validated on construction. Configs can be loaded from a flat
    `key = value` file (TOML syntax: strings quoted) and merged with overrides; overrides
    win over file values, file values win over defaults.

How to initialize:
    config = SolverConfig(delta=3.0)
    config = load_config_file("run.toml", delta=3.0, variant="fw")

Options:
    delta             nuclear-ball radius (required, > 0)
    max_iters         iteration cap (default 1000)
    rel_gap_tol       stop when gap / max(f, 1e-12) <= rel_gap_tol (default 1e-2)
    rank_threshold    singular values at or below this are truncated (default 1e-6)
    variant           "fw" | "afw" | "inface" | "rdfw" (default "rdfw")
    seed              seed for the LMO start vectors (default 0)
    power_tol         relative Rayleigh-quotient change tolerance of the LMO (default 1e-9)
    power_max_iter    LMO iteration cap (default 500)
    zero_sv_tol       relative tolerance for the zero singular value of M_lambda (default 1e-8)
    ortho_tol         orthogonality drift that triggers re-orthogonalization (default 1e-8)
    inface_boundary_tol  relative distance to the boundary treated as "on the boundary" (1e-3)
    lmo_warm_start    start the power iteration from the previous right vector (default False)
    debug_checks      verify the away-step atom set against the iterate (default False)
"""

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Literal, get_args

from .errors import ConfigError

Variant = Literal["fw", "afw", "inface", "rdfw"]
VARIANTS: tuple[str, ...] = get_args(Variant)


@dataclass(frozen=True)
class SolverConfig:
    delta: float
    max_iters: int = 1000
    rel_gap_tol: float = 1e-2
    rank_threshold: float = 1e-6
    variant: Variant = "rdfw"
    seed: int = 0
    power_tol: float = 1e-9
    power_max_iter: int = 500
    zero_sv_tol: float = 1e-8
    ortho_tol: float = 1e-8
    inface_boundary_tol: float = 1e-3
    lmo_warm_start: bool = False
    debug_checks: bool = False

    def __post_init__(self) -> None:
        if not self.delta > 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if self.max_iters < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.rel_gap_tol > 0:
            raise ConfigError(f"rel_gap_tol must be positive, got {self.rel_gap_tol}")
        if self.rank_threshold < 0:
            raise ConfigError(f"rank_threshold must be >= 0, got {self.rank_threshold}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if not self.power_tol > 0 or self.power_max_iter < 1:
            raise ConfigError("power_tol must be positive and power_max_iter >= 1")

    def replace(self, **changes: Any) -> "SolverConfig":
        return replace(self, **changes)

    @classmethod
    def from_mapping(cls, values: dict[str, Any]) -> "SolverConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "delta" not in values:
            raise ConfigError("config is missing 'delta'")
        try:
            return cls(**values)
        except TypeError as e:
            raise ConfigError(f"invalid config: {e}") from e


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Read a flat `key = value` file into a dict."""
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"cannot parse config file {path}: {e}") from e
    nested = [key for key, value in data.items() if isinstance(value, dict)]
    if nested:
        raise ConfigError(f"config file {path} must be flat, found tables: {nested}")
    return data


def load_config_file(path: str | Path, **overrides: Any) -> SolverConfig:
    values = read_config_file(path)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return SolverConfig.from_mapping(values)
