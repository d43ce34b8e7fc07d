"""
Factored iterates: thin SVDs and rank-one updates.

Description:
    The solvers never hold a dense iterate. X is kept as a thin SVD U diag(S) V^T with
    strictly positive singular values, updated in place of a full recomputation by a
    Brand-style rank-one update. Values are immutable; every operation returns a new one.

How to initialize:
    svd = ThinSVD.zeros(m, n)                       # the origin, rank 0
    svd = full_svd_oracle(dense)                    # test-scale dense factorization
    svd = rank_one_update(svd, 1.0, RankOneOuter(u, v, 2.0))
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionMismatchError, IndexOutOfBoundsError

DEFAULT_RANK_THRESHOLD = 1e-6
DEFAULT_ORTHO_TOL = 1e-8

# Residual norms below this fraction of the input norm are treated as lying in the span.
_SPAN_TOL = 1e-12

FloatArray = NDArray[np.float64]


@dataclass(frozen=True)
class ThinSVD:
    U: FloatArray
    S: FloatArray
    V: FloatArray

    def __post_init__(self) -> None:
        r = self.S.shape[0]
        if self.U.ndim != 2 or self.V.ndim != 2 or self.S.ndim != 1:
            raise DimensionMismatchError("ThinSVD expects 2-d U, V and 1-d S")
        if self.U.shape[1] != r or self.V.shape[1] != r:
            raise DimensionMismatchError(
                f"factor ranks disagree: U {self.U.shape}, S {self.S.shape}, V {self.V.shape}"
            )

    @classmethod
    def zeros(cls, m: int, n: int) -> "ThinSVD":
        return cls(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)))

    @property
    def m(self) -> int:
        return self.U.shape[0]

    @property
    def n(self) -> int:
        return self.V.shape[0]

    @property
    def r(self) -> int:
        return self.S.shape[0]

    def to_dense(self) -> FloatArray:
        return (self.U * self.S) @ self.V.T

    def check(
        self, ortho_tol: float = DEFAULT_ORTHO_TOL, rank_threshold: float = 0.0
    ) -> None:
        """Raise ValueError if the thin-SVD invariants do not hold."""
        if self.r > min(self.m, self.n):
            raise ValueError(f"rank {self.r} exceeds min({self.m}, {self.n})")
        if self.r and np.any(np.diff(self.S) > 0):
            raise ValueError("singular values are not in descending order")
        if self.r and self.S[-1] <= rank_threshold:
            raise ValueError(f"singular value {self.S[-1]:.3e} <= threshold {rank_threshold}")
        drift = orthogonality_drift(self)
        if drift > ortho_tol:
            raise ValueError(f"orthogonality drift {drift:.3e} exceeds {ortho_tol}")


@dataclass(frozen=True)
class RankOneOuter:
    """The matrix scale * u v^T."""

    u: FloatArray
    v: FloatArray
    scale: float

    @property
    def nuclear_norm(self) -> float:
        return abs(self.scale) * float(np.linalg.norm(self.u) * np.linalg.norm(self.v))

    def to_dense(self) -> FloatArray:
        return self.scale * np.outer(self.u, self.v)


def orthogonality_drift(svd: ThinSVD) -> float:
    if svd.r == 0:
        return 0.0
    eye = np.eye(svd.r)
    return float(
        max(np.abs(svd.U.T @ svd.U - eye).max(), np.abs(svd.V.T @ svd.V - eye).max())
    )


def _extend_basis(basis: FloatArray, x: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Coordinates of x in [basis, q] with q the normalized residual (omitted if in span)."""
    coords = basis.T @ x
    resid = x - basis @ coords
    # second Gram-Schmidt pass
    correction = basis.T @ resid
    coords = coords + correction
    resid = resid - basis @ correction
    rho = float(np.linalg.norm(resid))
    if rho <= _SPAN_TOL * max(float(np.linalg.norm(x)), 1.0):
        return basis, coords
    return np.column_stack([basis, resid / rho]), np.append(coords, rho)


def _reorthogonalize(U: FloatArray, S: FloatArray, V: FloatArray) -> ThinSVD:
    Qu, Ru = np.linalg.qr(U)
    Qv, Rv = np.linalg.qr(V)
    Uc, Sc, Vct = np.linalg.svd((Ru * S) @ Rv.T)
    return ThinSVD(Qu @ Uc, Sc, Qv @ Vct.T)


def rank_one_update(
    svd: ThinSVD,
    iterate_scale: float,
    delta_mat: RankOneOuter,
    rank_threshold: float = DEFAULT_RANK_THRESHOLD,
    ortho_tol: float = DEFAULT_ORTHO_TOL,
) -> ThinSVD:
    """Thin SVD of iterate_scale * (U S V^T) + scale * u v^T."""
    u = np.asarray(delta_mat.u, dtype=float)
    v = np.asarray(delta_mat.v, dtype=float)
    if u.shape != (svd.m,) or v.shape != (svd.n,):
        raise DimensionMismatchError(
            f"rank-one term {u.shape}x{v.shape} does not match iterate {svd.m}x{svd.n}"
        )
    if iterate_scale < 0:
        raise ValueError(f"iterate_scale must be >= 0, got {iterate_scale}")

    P, p = _extend_basis(svd.U, u)
    Q, q = _extend_basis(svd.V, v)
    core = np.zeros((P.shape[1], Q.shape[1]))
    core[: svd.r, : svd.r] = np.diag(iterate_scale * svd.S)
    core += delta_mat.scale * np.outer(p, q)

    Uc, Sc, Vct = np.linalg.svd(core, full_matrices=False)
    keep = Sc > rank_threshold
    if not np.any(keep):
        return ThinSVD.zeros(svd.m, svd.n)
    U_new = P @ Uc[:, keep]
    V_new = Q @ Vct[keep].T
    result = ThinSVD(U_new, Sc[keep], V_new)

    drift = orthogonality_drift(result)
    if drift > ortho_tol:
        logger.debug(f"Re-orthogonalizing factors (drift {drift:.2e}, rank {result.r})")
        result = _reorthogonalize(result.U, result.S, result.V)
        keep = result.S > rank_threshold
        result = ThinSVD(result.U[:, keep], result.S[keep], result.V[:, keep])
    return result


def nuclear_norm(svd: ThinSVD) -> float:
    return float(svd.S.sum())


def numeric_rank(svd: ThinSVD, rank_threshold: float = DEFAULT_RANK_THRESHOLD) -> int:
    return int(np.count_nonzero(svd.S > rank_threshold))


def entries(svd: ThinSVD, rows: NDArray[np.intp], cols: NDArray[np.intp]) -> FloatArray:
    """X[rows[k], cols[k]] for every k, in O(len(rows) * r)."""
    if svd.r == 0:
        return np.zeros(len(rows))
    return np.einsum("ik,k,ik->i", svd.U[rows], svd.S, svd.V[cols])


def reconstruct_entries(
    svd: ThinSVD, indices: Sequence[tuple[int, int]] | ArrayLike
) -> FloatArray:
    idx = np.asarray(indices, dtype=np.intp).reshape(-1, 2)
    rows, cols = idx[:, 0], idx[:, 1]
    if np.any(rows < 0) or np.any(rows >= svd.m) or np.any(cols < 0) or np.any(cols >= svd.n):
        raise IndexOutOfBoundsError(f"index outside {svd.m}x{svd.n} matrix")
    return entries(svd, rows, cols)


def full_svd_oracle(
    dense: ArrayLike, rank_threshold: float = DEFAULT_RANK_THRESHOLD
) -> ThinSVD:
    """Dense SVD, truncated to a thin SVD. Test scale only."""
    A = np.asarray(dense, dtype=float)
    U, S, Vt = np.linalg.svd(A, full_matrices=False)
    keep = S > rank_threshold
    return ThinSVD(U[:, keep], S[keep], Vt[keep].T)
