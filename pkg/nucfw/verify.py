"""
Randomized property suite for the factored iterate, rank-drop and solver guarantees.

Description:
    Every property is a function `check(seed, scale) -> str | None` registered with
    `register_property`. It builds its own random instance from `seed` and returns a
    failure message, or None when the property holds. A property run reports the seeds of
    all failing trials so each counterexample can be replayed with `check(seed, scale)`.

How to initialize:
    results = run_suite("quick")
    print(format_report(results))

Scales:
    quick   the per-property `quick` trial count (>= 100)
    full    the per-property `full` trial count (>= 10^4 for rank-drop exactness)
"""

import time
from collections.abc import Callable, Iterable
from dataclasses import dataclass
from typing import Literal

import numpy as np
from loguru import logger

from .config import SolverConfig
from .data import synthetic
from .errors import NucFWError
from .factored import (
    DEFAULT_ORTHO_TOL,
    FloatArray,
    RankOneOuter,
    ThinSVD,
    full_svd_oracle,
    nuclear_norm,
    numeric_rank,
    orthogonality_drift,
    rank_one_update,
)
from .objectives import Observations, SparseResidual, residual
from .rank_drop import (
    exterior_step,
    interior_candidates,
    kappa,
    projected_gradient,
    rank_drop_direction,
)
from .solvers import run_rdfw
from .trace import convergence_bound, objective_lower_bound

Scale = Literal["quick", "full"]
Check = Callable[[int, Scale], str | None]

FEASIBILITY_TOL = 1e-8
DENSE_RANK_THRESHOLD = 1e-6


@dataclass(frozen=True)
class Property:
    name: str
    description: str
    check: Check
    quick: int
    full: int

    def trials(self, scale: Scale) -> int:
        return self.quick if scale == "quick" else self.full


@dataclass(frozen=True)
class PropertyResult:
    name: str
    description: str
    trials: int
    failures: tuple[tuple[int, str], ...]
    elapsed: float

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def failing_seeds(self) -> list[int]:
        return [seed for seed, _ in self.failures]


PROPERTIES: dict[str, Property] = {}


def register_property(name: str, quick: int = 100, full: int = 1000) -> Callable[[Check], Check]:
    def decorator(func: Check) -> Check:
        doc = (func.__doc__ or name).strip().splitlines()[0]
        PROPERTIES[name] = Property(name, doc, func, quick, full)
        return func

    return decorator


# --- random instances ---


def _orthonormal(rng: np.random.Generator, m: int, r: int) -> FloatArray:
    q, _ = np.linalg.qr(rng.standard_normal((m, r)))
    return q


def random_iterate(
    rng: np.random.Generator, r_max: int = 5, size_max: int = 12, margin: int = 0
) -> ThinSVD:
    """A thin SVD of rank 2..r_max with singular values in [0.5, 3]; m, n >= r + margin."""
    r = int(rng.integers(2, r_max + 1))
    m = int(rng.integers(r + margin, size_max + 1))
    n = int(rng.integers(r + margin, size_max + 1))
    S = np.sort(rng.uniform(0.5, 3.0, r))[::-1].copy()
    return ThinSVD(_orthonormal(rng, m, r), S, _orthonormal(rng, n, r))


def interior_delta(rng: np.random.Generator, svd: ThinSVD) -> float:
    """delta with kappa >= sigma_r."""
    return nuclear_norm(svd) + 2.0 * svd.S[-1] * rng.uniform(1.0, 4.0)


def exterior_delta(rng: np.random.Generator, svd: ThinSVD) -> float:
    """delta with kappa < sigma_r."""
    return nuclear_norm(svd) + 2.0 * svd.S[-1] * rng.uniform(0.0, 0.999)


def gradient_residual(rng: np.random.Generator, svd: ThinSVD) -> SparseResidual:
    """Fully observed residual equal to a random Gaussian gradient."""
    m, n = svd.m, svd.n
    G = rng.standard_normal((m, n))
    rows, cols = np.divmod(np.arange(m * n), n)
    obs = Observations.from_triplets(rows, cols, (svd.to_dense() - G).ravel(), (m, n))
    return residual(svd, obs)


def _dense_rank(A: FloatArray) -> int:
    return numeric_rank(full_svd_oracle(A, DENSE_RANK_THRESHOLD), DENSE_RANK_THRESHOLD)


def _dense_nuclear(A: FloatArray) -> float:
    return float(np.linalg.svd(A, compute_uv=False).sum())


def _random_low_rank(rng: np.random.Generator) -> tuple[FloatArray, FloatArray, FloatArray, float]:
    m = int(rng.integers(2, 11))
    n = int(rng.integers(2, 9))
    r = int(rng.integers(2, min(6, m, n) + 1))
    A = rng.standard_normal((m, r)) @ rng.standard_normal((r, n))
    while True:
        x = rng.standard_normal(n)
        y = rng.standard_normal(m)
        sigma = float(y @ A @ x)
        if abs(sigma) > 1e-6:
            return A, x, y, sigma


# --- properties ---


@register_property("rank_drop_exactness", quick=200, full=10_000)
def check_rank_drop_exactness(seed: int, _scale: Scale) -> str | None:
    """rank(A - (y'Ax)^-1 (Ax)(A'y)') = rank(A) - 1"""
    A, x, y, sigma = _random_low_rank(np.random.default_rng(seed))
    before = _dense_rank(A)
    after = _dense_rank(A - np.outer(A @ x, A.T @ y) / sigma)
    if after != before - 1:
        return f"rank {before} -> {after} with |y'Ax| = {abs(sigma):.3e}"
    return None


@register_property("radius_bound", quick=200, full=10_000)
def check_radius_bound(seed: int, _scale: Scale) -> str | None:
    """Every rank-drop step has nuclear norm >= sigma_r(A)"""
    A, x, y, sigma = _random_low_rank(np.random.default_rng(seed))
    z_norm = float(np.linalg.norm(A @ x) * np.linalg.norm(A.T @ y)) / abs(sigma)
    sigma_r = full_svd_oracle(A, DENSE_RANK_THRESHOLD).S[-1]
    if z_norm < sigma_r - 1e-10:
        return f"||Z||_* = {z_norm:.6g} < sigma_r = {sigma_r:.6g}"
    return None


@register_property("interior_feasibility", quick=100, full=1000)
def check_interior_feasibility(seed: int, _scale: Scale) -> str | None:
    """Interior candidates keep X + tau D feasible on [0, tau*] and drop the rank at tau*"""
    rng = np.random.default_rng(seed)
    svd = random_iterate(rng)
    delta = interior_delta(rng, svd)
    res = gradient_residual(rng, svd)
    S, X = svd.S, svd.to_dense()
    for c in interior_candidates(projected_gradient(svd, res), S, kappa(svd, delta)):
        alpha = 1.0 / float(c.s @ (c.t / S))
        tau = alpha / (delta - alpha)
        D = X - delta * np.outer(svd.U @ c.s, svd.V @ c.t)
        for frac in np.linspace(0.0, 1.0, 6):
            nn = _dense_nuclear(X + frac * tau * D)
            if nn > delta + FEASIBILITY_TOL:
                return f"lambda={c.lam:.4g}: ||X + {frac:.1f} tau* D||_* = {nn:.10g} > {delta:.10g}"
        after = _dense_rank(X + tau * D)
        if after != svd.r - 1:
            return f"lambda={c.lam:.4g}: rank {svd.r} -> {after} at tau*={tau:.4g}"
    return None


@register_property("exterior_feasibility", quick=100, full=1000)
def check_exterior_feasibility(seed: int, _scale: Scale) -> str | None:
    """The exterior step at tau* keeps the iterate feasible and drops the rank by one"""
    rng = np.random.default_rng(seed)
    svd = random_iterate(rng)
    delta = exterior_delta(rng, svd)
    res = gradient_residual(rng, svd)
    step = exterior_step(projected_gradient(svd, res), svd.S, delta)
    Us, Vs = svd.U @ step.s, svd.V @ step.s
    X_next = (1.0 + step.tau_star) * svd.to_dense() - step.tau_star * delta * np.outer(Us, Vs)
    nn = _dense_nuclear(X_next)
    if nn > delta + FEASIBILITY_TOL:
        return f"||X+||_* = {nn:.10g} > delta = {delta:.10g} (tau*={step.tau_star:.4g})"
    after = _dense_rank(X_next)
    if after != svd.r - 1:
        return f"rank {svd.r} -> {after} at tau*={step.tau_star:.4g}"
    return None


@register_property("interior_nonempty", quick=100, full=1000)
def check_interior_nonempty(seed: int, _scale: Scale) -> str | None:
    """s = e_r, t = (sigma_r / kappa) e_r is feasible when sigma_r <= kappa"""
    rng = np.random.default_rng(seed)
    svd = random_iterate(rng)
    k = kappa(svd, interior_delta(rng, svd))
    r = svd.r
    s = np.zeros(r)
    s[-1] = 1.0
    t = (svd.S[-1] / k) * s
    if np.linalg.norm(t) > 1.0 + 1e-12:
        return f"||t|| = {np.linalg.norm(t):.12g} > 1"
    if abs(k * float(s @ (t / svd.S)) - 1.0) > 1e-12:
        return "s' S^-1 t != 1 / kappa"
    return None


@register_property("interior_equivalence", quick=100, full=1000)
def check_interior_equivalence(seed: int, scale: Scale) -> str | None:
    """Rescaling between the ratio and normalized interior problems preserves the objective;
    every candidate is a stationary point and the selected one has the best score"""
    rng = np.random.default_rng(seed)
    svd = random_iterate(rng, r_max=3)
    delta = interior_delta(rng, svd)
    res = gradient_residual(rng, svd)
    S, k = svd.S, kappa(svd, delta)
    W = projected_gradient(svd, res).W

    samples = 64 if scale == "quick" else 1024
    for _ in range(samples):
        s = rng.standard_normal(svd.r)
        t = rng.standard_normal(svd.r)
        s, t = s / np.linalg.norm(s), t / np.linalg.norm(t)
        b = float(s @ (t / S))
        if b <= 0 or k * b < 1.0:
            continue
        t_scaled = t / (k * b)
        if np.linalg.norm(t_scaled) > 1.0 + 1e-12 or abs(k * float(s @ (t_scaled / S)) - 1) > 1e-10:
            return "rescaled pair violates the normalized constraints"
        ratio = float(s @ W @ t) / b
        q = -k * float(s @ W @ t_scaled)
        if abs(q + ratio) > 1e-10 * max(1.0, abs(ratio)):
            return f"rescaled objective {q:.12g} != -{ratio:.12g}"

    candidates = interior_candidates(projected_gradient(svd, res), S, k)
    scale_w = max(1.0, float(np.linalg.norm(W, 2)))
    for c in candidates:
        M = W + c.lam * np.diag(1.0 / S)
        tol = 1e-6 * (scale_w + abs(c.lam) / S[-1])
        if np.linalg.norm(M @ c.t) > tol or np.linalg.norm(M.T @ c.s) > tol:
            return f"candidate lambda={c.lam:.6g} is not a stationary pair"
    if candidates:
        step = rank_drop_direction(svd, res, delta)
        best = max(c.score for c in candidates)
        if step.case != "interior" or abs(step.score - best) > 1e-12 * max(1.0, abs(best)):
            return f"selected {step.case} step scores {step.score:.6g}, best candidate {best:.6g}"
    return None


def _complement_noise(rng: np.random.Generator, svd: ThinSVD) -> FloatArray:
    m, n = svd.m, svd.n
    Pu = np.eye(m) - svd.U @ svd.U.T
    Pv = np.eye(n) - svd.V @ svd.V.T
    H = Pu @ rng.standard_normal((m, n)) @ Pv
    norm = float(np.linalg.norm(H, 2))
    return H if norm == 0.0 else H * (rng.uniform() / norm)


@register_property("boundary_descent", quick=100, full=1000)
def check_boundary_descent(seed: int, _scale: Scale) -> str | None:
    """On the boundary, s = t steps are descent directions for every subgradient of the
    nuclear norm, and s != t steps are not"""
    rng = np.random.default_rng(seed)
    svd = random_iterate(rng, margin=1)
    delta = nuclear_norm(svd)
    X, UV = svd.to_dense(), svd.U @ svd.V.T
    res = gradient_residual(rng, svd)
    s = exterior_step(projected_gradient(svd, res), svd.S, delta).s
    D = X - delta * np.outer(svd.U @ s, svd.V @ s)
    noise = [_complement_noise(rng, svd) for _ in range(16)]
    worst = max(float(np.sum(D * (UV + H))) for H in noise)
    if worst > 1e-8 * max(1.0, delta):
        return f"s = t step has <D, G> = {worst:.3e} > 0"

    while True:
        t = rng.standard_normal(svd.r)
        t /= np.linalg.norm(t)
        if delta * float(s @ t) < delta * (1.0 - 1e-3):
            break
    D = X - delta * np.outer(svd.U @ s, svd.V @ t)
    best = max(float(np.sum(D * (UV + H))) for H in [np.zeros_like(X), *noise])
    if best <= 1e-8 * max(1.0, delta):
        return f"no violating subgradient for s != t (max <D, G> = {best:.3e})"
    return None


@register_property("boundary_bound", quick=100, full=1000)
def check_boundary_bound(seed: int, _scale: Scale) -> str | None:
    """kappa < sigma_r implies ||X||_* > r / (r + 2) delta"""
    rng = np.random.default_rng(seed)
    svd = random_iterate(rng, r_max=8)
    delta = exterior_delta(rng, svd)
    nn, r = nuclear_norm(svd), svd.r
    if kappa(svd, delta) >= svd.S[-1]:
        return "instance is not in the exterior case"
    if nn <= r / (r + 2) * delta - 1e-10:
        return f"||X||_* = {nn:.10g} <= {r}/{r + 2} * {delta:.10g}"
    return None


@register_property("face_membership", quick=100, full=1000)
def check_face_membership(seed: int, _scale: Scale) -> str | None:
    """Exterior steps are psd with trace delta; interior steps have nuclear norm <= kappa < delta"""
    rng = np.random.default_rng(seed)
    svd = random_iterate(rng)
    delta = exterior_delta(rng, svd)
    s = exterior_step(projected_gradient(svd, gradient_residual(rng, svd)), svd.S, delta).s
    M = delta * np.outer(s, s)
    if np.linalg.eigvalsh(M).min() < -1e-10 * delta or abs(np.trace(M) - delta) > 1e-10 * delta:
        return "exterior step is not psd with trace delta"

    delta = interior_delta(rng, svd)
    k = kappa(svd, delta)
    res = gradient_residual(rng, svd)
    for c in interior_candidates(projected_gradient(svd, res), svd.S, k):
        z_norm = 1.0 / float(c.s @ (c.t / svd.S))
        if z_norm > k * (1.0 + 1e-10) or not k < delta:
            return f"interior step ||Z||_* = {z_norm:.10g} > kappa = {k:.10g}"
    return None


@register_property("svd_maintenance", quick=100, full=1000)
def check_svd_maintenance(seed: int, _scale: Scale) -> str | None:
    """100 sequential rank-one updates of a 30 x 20 iterate match the dense recomputation"""
    rng = np.random.default_rng(seed)
    m, n = 30, 20
    svd = ThinSVD.zeros(m, n)
    dense = np.zeros((m, n))
    for step in range(100):
        u = rng.standard_normal(m)
        v = rng.standard_normal(n)
        u, v = u / np.linalg.norm(u), v / np.linalg.norm(v)
        a, c = rng.uniform(0.9, 1.0), rng.standard_normal()
        svd = rank_one_update(svd, a, RankOneOuter(u, v, c))
        dense = a * dense + c * np.outer(u, v)
        err = float(np.linalg.norm(svd.to_dense() - dense, 2))
        if err > 1e-8:
            return f"update {step}: spectral error {err:.3e}"
        drift = orthogonality_drift(svd)
        if drift > DEFAULT_ORTHO_TOL:
            return f"update {step}: orthogonality drift {drift:.3e}"
    return None


@register_property("convergence_bound", quick=100, full=20)
def check_convergence_bound(seed: int, scale: Scale) -> str | None:
    """f(X_k) - f* <= 8 delta^2 L / (4 + N_fw^k) along an RDFW run"""
    rng = np.random.default_rng(seed)
    if scale == "quick":
        m, n, r, iters = int(rng.integers(6, 13)), int(rng.integers(6, 11)), 2, 40
    else:
        m, n, r, iters = 50, 40, 5, 1000
    data, truth = synthetic(m, n, r, 0.6, 0.05, seed)
    delta = nuclear_norm(truth)
    config = SolverConfig(delta=delta, max_iters=iters, rel_gap_tol=1e-12, seed=seed)

    _, trace = run_rdfw(data.train, config)
    # f* >= 0 for the squared loss
    lower = max(objective_lower_bound(trace), 0.0)
    if scale == "full":
        reference = config.replace(max_iters=5000, rel_gap_tol=1e-6)
        lower = max(lower, objective_lower_bound(run_rdfw(data.train, reference).trace))

    excess = trace.column("objective") - lower
    bound = convergence_bound(trace, delta)
    violated = np.flatnonzero(excess > bound + 1e-9)
    if len(violated):
        k = int(violated[0])
        return f"iter {k}: f - f* >= {excess[k]:.6g} > bound {bound[k]:.6g}"
    return None


# --- runner ---


def run_property(prop: Property, scale: Scale = "quick", trials: int | None = None) -> PropertyResult:
    n_trials = trials if trials is not None else prop.trials(scale)
    failures: list[tuple[int, str]] = []
    start = time.perf_counter()
    # library logging stays off while checks run
    logger.disable("nucfw")
    try:
        for seed in range(n_trials):
            try:
                message = prop.check(seed, scale)
            except (NucFWError, np.linalg.LinAlgError) as e:
                message = f"{type(e).__name__}: {e}"
            if message is not None:
                failures.append((seed, message))
    finally:
        logger.enable("nucfw")
    elapsed = time.perf_counter() - start
    for seed, message in failures:
        logger.warning(f"{prop.name} failed for seed {seed}: {message}")
    logger.debug(f"{prop.name}: {n_trials - len(failures)}/{n_trials} passed in {elapsed:.2f}s")
    return PropertyResult(prop.name, prop.description, n_trials, tuple(failures), elapsed)


def run_suite(scale: Scale = "quick", names: Iterable[str] | None = None) -> list[PropertyResult]:
    selected = list(PROPERTIES) if names is None else list(names)
    unknown = [name for name in selected if name not in PROPERTIES]
    if unknown:
        raise KeyError(f"unknown properties: {', '.join(unknown)}")
    return [run_property(PROPERTIES[name], scale) for name in selected]


def format_report(results: Iterable[PropertyResult], max_seeds: int = 10) -> str:
    lines = [f"{'property':<24} {'trials':>7} {'failed':>7} {'time_s':>8}  status"]
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        lines.append(
            f"{result.name:<24} {result.trials:>7} {len(result.failures):>7} "
            f"{result.elapsed:>8.2f}  {status}"
        )
        if not result.passed:
            seeds = ", ".join(str(s) for s in result.failing_seeds[:max_seeds])
            more = "" if len(result.failures) <= max_seeds else ", ..."
            lines.append(f"    seeds: {seeds}{more}")
            lines.append(f"    first: {result.failures[0][1]}")
    return "\n".join(lines)
