"""
Rank-drop directions for nuclear-norm constrained problems.

Description:
    Given the thin SVD X = U diag(S) V^T (rank r >= 2) and the gradient G, a rank-drop step
    moves along D = X - delta * U s t^T V^T with unit s, t. At the step size tau* the
    rank of X + tau* D is exactly r - 1 and the iterate stays in the nuclear ball.

    All subproblems live in r x r space through W = U^T G V:
      * interior case (kappa >= sigma_r): KKT candidates from the real eigenvalues lambda of
        -diag(S) W and the null pairs of M = -(W + lambda diag(S)^-1) / 2;
      * exterior case (kappa < sigma_r, or no feasible interior candidate): s = t from the
        generalized eigenproblem max s^T sym(W) s / s^T diag(S)^-1 s.

How to initialize:
    step = rank_drop_direction(svd, res, delta)
    new_svd = rank_drop_iterate(svd, step, delta)
"""

from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np
from loguru import logger

from .errors import DegenerateStepError, InfeasibleIterateError, RankDropUnavailableError
from .factored import (
    DEFAULT_RANK_THRESHOLD,
    FloatArray,
    RankOneOuter,
    ThinSVD,
    nuclear_norm,
    rank_one_update,
)
from .objectives import SparseResidual, apply_gradient

DEFAULT_ZERO_SV_TOL = 1e-8
KAPPA_SLACK = 1e-10
_IMAG_TOL = 1e-10
_EIG_DEDUP_TOL = 1e-10
_TOP_EIG_TOL = 1e-12
_DEGENERATE_TAU_TOL = 1e-12
_FEASIBILITY_SLACK = 1e-12

RankDropCase = Literal["interior", "exterior"]


@dataclass(frozen=True)
class RankDropStep:
    s: FloatArray
    t: FloatArray
    tau_star: float
    case: RankDropCase
    score: float


@dataclass(frozen=True)
class ProjectedGradient:
    W: FloatArray


class InteriorCandidate(NamedTuple):
    s: FloatArray
    t: FloatArray
    lam: float
    score: float
    eig_index: int


class ExteriorStep(NamedTuple):
    s: FloatArray
    tau_star: float
    score: float


def kappa(svd: ThinSVD, delta: float, slack: float = KAPPA_SLACK) -> float:
    """Half the nuclear-norm distance from X to the boundary of the ball."""
    nn = nuclear_norm(svd)
    if nn > delta + slack:
        raise InfeasibleIterateError(f"nuclear norm {nn:.12g} exceeds delta {delta:.12g}")
    return max((delta - nn) / 2.0, 0.0)


def projected_gradient(svd: ThinSVD, res: SparseResidual) -> ProjectedGradient:
    """W = U^T G V, from r sparse products G V[:, b]."""
    if svd.r == 0:
        return ProjectedGradient(np.zeros((0, 0)))
    GV = apply_gradient(res, "right", svd.V)
    return ProjectedGradient(svd.U.T @ GV)


def _real_eigenvalues(A: FloatArray) -> list[float]:
    eigs = np.linalg.eigvals(A)
    real = [
        float(e.real) for e in eigs if abs(e.imag) <= _IMAG_TOL * max(1.0, abs(e))
    ]
    unique: list[float] = []
    for lam in real:
        if all(abs(lam - u) > _EIG_DEDUP_TOL * max(1.0, abs(u)) for u in unique):
            unique.append(lam)
    return unique


def interior_candidates(
    W: ProjectedGradient,
    S: FloatArray,
    kappa: float,
    zero_sv_tol: float = DEFAULT_ZERO_SV_TOL,
) -> list[InteriorCandidate]:
    """Feasible KKT candidates of the interior rank-drop problem, in eigenvalue order."""
    Wm = W.W
    inv_S = 1.0 / S
    candidates: list[InteriorCandidate] = []
    for index, lam in enumerate(_real_eigenvalues(-S[:, None] * Wm)):
        M = -0.5 * (Wm + lam * np.diag(inv_S))
        Um, sv, Vmt = np.linalg.svd(M)
        tol = zero_sv_tol * max(1.0, float(sv[0]))
        for k in np.flatnonzero(sv <= tol):
            s, t = Um[:, k], Vmt[k]
            b = float(s @ (inv_S * t))
            if b == 0.0:
                continue
            if b < 0:
                s, b = -s, -b
            if kappa * b < 1.0 - _FEASIBILITY_SLACK:
                continue
            candidates.append(InteriorCandidate(s, t, lam, float(s @ Wm @ t), index))
    return candidates


def max_face_step(S: FloatArray, s: FloatArray, delta: float) -> float:
    """(delta s^T diag(S)^-1 s - 1)^-1, the step that annihilates one singular direction."""
    denom = delta * float(s @ (s / S)) - 1.0
    if not np.isfinite(denom) or denom <= _DEGENERATE_TAU_TOL:
        raise DegenerateStepError(f"degenerate face step: delta*s'S^-1 s - 1 = {denom:.3e}")
    return 1.0 / denom


def _fix_sign(s: FloatArray) -> FloatArray:
    return -s if s[np.argmax(np.abs(s))] < 0 else s


def _top_eigenvector(B: FloatArray, weights: FloatArray) -> FloatArray:
    """Top eigenvector of symmetric B; ties go to the direction with the largest weights-norm."""
    evals, evecs = np.linalg.eigh(B)
    top = evals[-1]
    in_top = evals >= top - _TOP_EIG_TOL * max(1.0, abs(top))
    Z = evecs[:, in_top]
    if Z.shape[1] == 1:
        return Z[:, 0]
    _, c = np.linalg.eigh(Z.T @ (weights[:, None] * Z))
    return Z @ c[:, -1]


def exterior_step(W: ProjectedGradient, S: FloatArray, delta: float) -> ExteriorStep:
    """Symmetric rank-drop step s = t maximizing s^T sym(W) s / s^T diag(S)^-1 s."""
    sym = 0.5 * (W.W + W.W.T)
    root = np.sqrt(S)
    z = _top_eigenvector(root[:, None] * sym * root[None, :], S)
    s = root * z
    s = _fix_sign(s / np.linalg.norm(s))
    tau = max_face_step(S, s, delta)
    return ExteriorStep(s, tau, float(s @ sym @ s))


def in_face_direction(W: ProjectedGradient) -> FloatArray:
    """Unit s with delta * s s^T maximizing <G, U M V^T> over M psd, tr(M) = delta."""
    sym = 0.5 * (W.W + W.W.T)
    return _fix_sign(_top_eigenvector(sym, np.ones(sym.shape[0])))


def rank_drop_direction(
    svd: ThinSVD,
    res: SparseResidual,
    delta: float,
    zero_sv_tol: float = DEFAULT_ZERO_SV_TOL,
) -> RankDropStep:
    r = svd.r
    if r < 2:
        raise RankDropUnavailableError(f"rank-drop needs rank >= 2, iterate has rank {r}")
    S = svd.S
    k = kappa(svd, delta)
    W = projected_gradient(svd, res)

    if k >= S[-1]:
        candidates = interior_candidates(W, S, k, zero_sv_tol)
        if candidates:
            # first maximum wins, so ties go to the smaller eigenvalue index
            best = max(candidates, key=lambda c: c.score)
            alpha = 1.0 / float(best.s @ (best.t / S))
            tau = alpha / (delta - alpha)
            logger.debug(
                f"Interior rank-drop: {len(candidates)} candidates, score {best.score:.4g}, "
                f"tau* {tau:.4g}"
            )
            return RankDropStep(best.s, best.t, tau, "interior", best.score)
        logger.debug("No feasible interior candidate, using the exterior problem")

    ext = exterior_step(W, S, delta)
    logger.debug(f"Exterior rank-drop: score {ext.score:.4g}, tau* {ext.tau_star:.4g}")
    return RankDropStep(ext.s, ext.s, ext.tau_star, "exterior", ext.score)


def rank_drop_iterate(
    svd: ThinSVD,
    step: RankDropStep,
    delta: float,
    rank_threshold: float = DEFAULT_RANK_THRESHOLD,
) -> ThinSVD:
    """X + tau* (X - delta U s t^T V^T) as a thin SVD."""
    tau = step.tau_star
    outer = RankOneOuter(svd.U @ step.s, svd.V @ step.t, -tau * delta)
    return rank_one_update(svd, 1.0 + tau, outer, rank_threshold)
