"""
Matrix-completion objective over observed entries.

Description:
    f(X) = 1/2 * sum over (i, j) in Omega of (X_ij - Y_ij)^2, evaluated from a factored
    iterate without ever densifying it. The gradient is the sparse residual P_Omega(X - Y);
    it is applied to vectors through scipy CSR/CSC products. Also provides the nuclear-ball
    linear minimization oracle (power iteration on G^T G), the closed-form exact line
    search for the quadratic loss, the Frank-Wolfe duality gap and RMSE.

How to initialize:
    obs = Observations.from_triplets(rows, cols, values, shape=(m, n))
    res = residual(svd, obs)
    result = lmo(res, delta=3.0, rng=np.random.default_rng(0))
"""

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
import scipy.sparse as sp
from loguru import logger
from numpy.typing import ArrayLike, NDArray

from .errors import (
    DimensionMismatchError,
    EmptyObservationsError,
    IndexOutOfBoundsError,
    LMOError,
)
from .factored import FloatArray, RankOneOuter, ThinSVD, entries

DEFAULT_POWER_TOL = 1e-9
DEFAULT_POWER_MAX_ITER = 500

Side = Literal["left", "right"]


@dataclass(frozen=True, eq=False)
class Observations:
    """Observed entries (row, col, value), stored in row-major order."""

    rows: NDArray[np.intp]
    cols: NDArray[np.intp]
    values: FloatArray
    shape: tuple[int, int]
    indptr: NDArray[np.intp] = field(repr=False)

    @classmethod
    def from_triplets(
        cls, rows: ArrayLike, cols: ArrayLike, values: ArrayLike, shape: tuple[int, int]
    ) -> "Observations":
        r = np.asarray(rows, dtype=np.intp).ravel()
        c = np.asarray(cols, dtype=np.intp).ravel()
        y = np.asarray(values, dtype=float).ravel()
        m, n = int(shape[0]), int(shape[1])
        if not (len(r) == len(c) == len(y)):
            raise DimensionMismatchError("rows, cols and values must have equal length")
        if len(r) and (r.min() < 0 or r.max() >= m or c.min() < 0 or c.max() >= n):
            raise IndexOutOfBoundsError(f"observed index outside {m}x{n} matrix")
        order = np.lexsort((c, r))
        r, c, y = r[order], c[order], y[order]
        if len(r) > 1:
            same = (r[1:] == r[:-1]) & (c[1:] == c[:-1])
            if np.any(same):
                k = int(np.argmax(same))
                raise ValueError(f"duplicate observation at ({r[k]}, {c[k]})")
        indptr = np.zeros(m + 1, dtype=np.intp)
        np.cumsum(np.bincount(r, minlength=m), out=indptr[1:])
        return cls(r, c, y, (m, n), indptr)

    @classmethod
    def empty(cls, m: int, n: int) -> "Observations":
        return cls.from_triplets([], [], [], (m, n))

    def __len__(self) -> int:
        return len(self.values)

    @property
    def m(self) -> int:
        return self.shape[0]

    @property
    def n(self) -> int:
        return self.shape[1]

    @property
    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def subset(self, index: NDArray[np.intp]) -> "Observations":
        return Observations.from_triplets(
            self.rows[index], self.cols[index], self.values[index], self.shape
        )

    def with_values(self, values: ArrayLike) -> "Observations":
        y = np.asarray(values, dtype=float)
        if y.shape != self.values.shape:
            raise DimensionMismatchError("replacement values must match the pattern")
        return Observations(self.rows, self.cols, y, self.shape, self.indptr)

    def pattern_matrix(self, values: FloatArray) -> sp.csr_matrix:
        return sp.csr_matrix((values, self.cols, self.indptr), shape=self.shape)


@dataclass(frozen=True, eq=False)
class SparseResidual:
    """Values X_ij - Y_ij on the pattern of `obs`; this is the gradient of f."""

    obs: Observations
    values: FloatArray
    fitted: FloatArray | None = None
    matrix: sp.csr_matrix = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.values.shape != self.obs.values.shape:
            raise DimensionMismatchError("residual values must match the observation pattern")
        object.__setattr__(self, "matrix", self.obs.pattern_matrix(self.values))

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)


@dataclass(frozen=True)
class LMOResult:
    atom: RankOneOuter
    sigma: float
    converged: bool
    at_optimum: bool
    iterations: int


def _check_dims(svd: ThinSVD, obs: Observations) -> None:
    if (svd.m, svd.n) != obs.shape:
        raise DimensionMismatchError(
            f"iterate is {svd.m}x{svd.n} but observations are {obs.m}x{obs.n}"
        )


def fitted_values(svd: ThinSVD, obs: Observations) -> FloatArray:
    _check_dims(svd, obs)
    return entries(svd, obs.rows, obs.cols)


def value(svd: ThinSVD, obs: Observations) -> float:
    diff = fitted_values(svd, obs) - obs.values
    return 0.5 * float(diff @ diff)


def residual(svd: ThinSVD, obs: Observations) -> SparseResidual:
    fitted = fitted_values(svd, obs)
    return SparseResidual(obs, fitted - obs.values, fitted)


def objective_of(res: SparseResidual) -> float:
    return 0.5 * float(res.values @ res.values)


def apply_gradient(res: SparseResidual, side: Side, vec: ArrayLike) -> FloatArray:
    """G @ vec for side="right", G^T @ vec for side="left"; vec may hold column vectors."""
    x = np.asarray(vec, dtype=float)
    if side == "right":
        if x.shape[0] != res.obs.n:
            raise DimensionMismatchError(f"right operand has length {x.shape[0]}, need {res.obs.n}")
        return np.asarray(res.matrix @ x)
    if side == "left":
        if x.shape[0] != res.obs.m:
            raise DimensionMismatchError(f"left operand has length {x.shape[0]}, need {res.obs.m}")
        return np.asarray(res.matrix.T @ x)
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def entries_of(atom: RankOneOuter, obs: Observations) -> FloatArray:
    return atom.scale * atom.u[obs.rows] * atom.v[obs.cols]


def _power_iteration(
    res: SparseResidual, v: FloatArray, tol: float, max_iter: int
) -> tuple[FloatArray, float, bool, int]:
    v = v / np.linalg.norm(v)
    rho_prev = -1.0
    rho = 0.0
    for it in range(1, max_iter + 1):
        gv = apply_gradient(res, "right", v)
        rho = float(gv @ gv)
        if rho == 0.0:
            return v, 0.0, False, it
        w = apply_gradient(res, "left", gv)
        v = w / np.linalg.norm(w)
        if abs(rho - rho_prev) <= tol * rho:
            return v, rho, True, it
        rho_prev = rho
    return v, rho, False, max_iter


def lmo(
    res: SparseResidual,
    delta: float,
    power_tol: float = DEFAULT_POWER_TOL,
    power_max_iter: int = DEFAULT_POWER_MAX_ITER,
    *,
    rng: np.random.Generator,
    v0: FloatArray | None = None,
) -> LMOResult:
    """Z = -delta * u1 v1^T, the minimizer of <Z, G> over the nuclear ball of radius delta.

    rng seeds the power-iteration start when v0 is missing or zero.
    """
    m, n = res.obs.shape
    if res.is_zero:
        return LMOResult(RankOneOuter(np.zeros(m), np.zeros(n), 0.0), 0.0, True, True, 0)
    start = v0 if v0 is not None and np.linalg.norm(v0) > 0 else rng.standard_normal(n)
    v, rho, converged, iterations = _power_iteration(res, start, power_tol, power_max_iter)
    if rho == 0.0:
        # start landed in the null space of G; one restart
        logger.debug("Power iteration stagnated at zero, restarting")
        v, rho, converged, more = _power_iteration(
            res, rng.standard_normal(n), power_tol, power_max_iter
        )
        iterations += more
    if not np.isfinite(rho) or not np.all(np.isfinite(v)):
        raise LMOError("power iteration produced non-finite values")
    if not converged:
        logger.warning(f"LMO power iteration did not converge in {iterations} iterations")

    gv = apply_gradient(res, "right", v)
    sigma = float(np.linalg.norm(gv))
    if sigma == 0.0:
        return LMOResult(RankOneOuter(np.zeros(m), np.zeros(n), 0.0), 0.0, converged, True, iterations)
    u = gv / sigma
    return LMOResult(RankOneOuter(u, v, -delta), sigma, converged, False, iterations)


def exact_line_search(
    svd: ThinSVD,
    obs: Observations,
    dir_on_omega: ArrayLike,
    tau_max: float,
    res: SparseResidual | None = None,
) -> float:
    """argmin over [0, tau_max] of 1/2 ||R + tau D||^2 on Omega."""
    if not tau_max > 0:
        raise ValueError(f"tau_max must be positive, got {tau_max}")
    d = np.asarray(dir_on_omega, dtype=float)
    r = res.values if res is not None else residual(svd, obs).values
    if d.shape != r.shape:
        raise DimensionMismatchError("direction must be given on the observation pattern")
    dd = float(d @ d)
    if dd == 0.0:
        return 0.0
    tau = -float(r @ d) / dd
    return float(min(max(tau, 0.0), tau_max))


def duality_gap(svd: ThinSVD, res: SparseResidual, lmo_atom: RankOneOuter) -> float:
    """<G, X - S> with S the LMO atom."""
    fitted = res.fitted if res.fitted is not None else fitted_values(svd, res.obs)
    at_x = float(res.values @ fitted)
    if lmo_atom.scale == 0.0:
        return at_x
    at_s = lmo_atom.scale * float(lmo_atom.u @ apply_gradient(res, "right", lmo_atom.v))
    return at_x - at_s


def rmse(svd: ThinSVD, test: Observations) -> float:
    if len(test) == 0:
        raise EmptyObservationsError("RMSE needs at least one test entry")
    diff = fitted_values(svd, test) - test.values
    return float(np.sqrt(diff @ diff / len(diff)))
