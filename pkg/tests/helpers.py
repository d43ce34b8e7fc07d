import numpy as np

from nucfw.config import SolverConfig
from nucfw.factored import FloatArray, ThinSVD
from nucfw.objectives import Observations, SparseResidual, objective_of, residual
from nucfw.solvers.orchestrator import IterateState


def diag_svd(values: list[float]) -> ThinSVD:
    """U = V = I with the given (descending) singular values."""
    r = len(values)
    return ThinSVD(np.eye(r), np.array(values, dtype=float), np.eye(r))


def fully_observed(Y: FloatArray) -> Observations:
    m, n = Y.shape
    rows, cols = np.divmod(np.arange(m * n), n)
    return Observations.from_triplets(rows, cols, Y.ravel(), (m, n))


def residual_with_gradient(svd: ThinSVD, G: FloatArray) -> SparseResidual:
    """Fully observed residual whose gradient at `svd` is exactly G."""
    return residual(svd, fully_observed(svd.to_dense() - G))


def random_svd(rng: np.random.Generator, m: int, n: int, r: int) -> ThinSVD:
    U, _ = np.linalg.qr(rng.standard_normal((m, r)))
    V, _ = np.linalg.qr(rng.standard_normal((n, r)))
    S = np.sort(rng.uniform(0.5, 3.0, r))[::-1].copy()
    return ThinSVD(U, S, V)


def make_state(svd: ThinSVD, G: FloatArray, delta: float, seed: int = 0) -> IterateState:
    res = residual_with_gradient(svd, G)
    return IterateState(
        obs=res.obs,
        config=SolverConfig(delta=delta),
        svd=svd,
        res=res,
        objective=objective_of(res),
        rng=np.random.default_rng(seed),
    )
