"""
AtomicDecomposition: the away-step active set.

Description:
    X = sum_a alpha_a * delta * u_a v_a^T over unit vectors u_a, v_a, plus the starting
    point X0 = 0 kept as an origin member with weight 1 - sum(alpha) until an away step
    drives it to zero. Atoms whose weight reaches zero are removed.

How to initialize:
    atoms = AtomicDecomposition.empty(m, n, delta)
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError
from .factored import FloatArray
from .objectives import SparseResidual, apply_gradient

MERGE_TOL = 1e-10
_PRUNE_TOL = 1e-12

ORIGIN = -1


@dataclass
class AtomicDecomposition:
    delta: float
    U: FloatArray
    V: FloatArray
    weights: FloatArray
    origin_weight: float = 1.0

    @classmethod
    def empty(cls, m: int, n: int, delta: float) -> "AtomicDecomposition":
        return cls(delta, np.zeros((m, 0)), np.zeros((n, 0)), np.zeros(0))

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())

    def scores(self, res: SparseResidual) -> FloatArray:
        """<a, grad f> for every active atom."""
        if len(self) == 0:
            return np.zeros(0)
        GV = apply_gradient(res, "right", self.V)
        return self.delta * np.einsum("ik,ik->k", self.U, GV)

    def away_atom(self, res: SparseResidual) -> tuple[int, float]:
        """Index (ORIGIN for X0) and score of the active member most aligned with grad f."""
        best, best_score = ORIGIN, -np.inf
        if self.origin_weight > 0:
            best_score = 0.0
        scores = self.scores(res)
        if len(scores):
            k = int(np.argmax(scores))
            if scores[k] > best_score:
                best, best_score = k, float(scores[k])
        return best, best_score

    def weight(self, index: int) -> float:
        return self.origin_weight if index == ORIGIN else float(self.weights[index])

    def max_away_step(self, index: int) -> float:
        alpha = self.weight(index)
        return np.inf if alpha >= 1.0 else alpha / (1.0 - alpha)

    def atom(self, index: int) -> tuple[FloatArray, FloatArray]:
        return self.U[:, index], self.V[:, index]

    def _find(self, u: FloatArray, v: FloatArray) -> int | None:
        if len(self) == 0:
            return None
        match = np.abs((self.U.T @ u) * (self.V.T @ v) - 1.0)
        k = int(np.argmin(match))
        return k if match[k] <= MERGE_TOL else None

    def add_fw(self, u: FloatArray, v: FloatArray, tau: float) -> None:
        """Weights after x + tau (s - x) with s = delta u v^T."""
        if u.shape[0] != self.U.shape[0] or v.shape[0] != self.V.shape[0]:
            raise DimensionMismatchError("atom does not match the decomposition dimensions")
        self.weights = self.weights * (1.0 - tau)
        self.origin_weight *= 1.0 - tau
        k = self._find(u, v)
        if k is None:
            self.U = np.column_stack([self.U, u])
            self.V = np.column_stack([self.V, v])
            self.weights = np.append(self.weights, tau)
        else:
            self.weights[k] += tau
        self._prune()

    def take_away(self, index: int, tau: float, at_cap: bool = False) -> None:
        """Weights after x + tau (x - v) for the member v at `index`."""
        self.weights = self.weights * (1.0 + tau)
        self.origin_weight *= 1.0 + tau
        if index == ORIGIN:
            self.origin_weight = 0.0 if at_cap else self.origin_weight - tau
        else:
            self.weights[index] = 0.0 if at_cap else self.weights[index] - tau
        self._prune()

    def _prune(self) -> None:
        if self.origin_weight <= _PRUNE_TOL:
            self.origin_weight = 0.0
        keep = self.weights > _PRUNE_TOL
        if not np.all(keep):
            self.U, self.V, self.weights = self.U[:, keep], self.V[:, keep], self.weights[keep]

    def to_dense(self) -> FloatArray:
        return self.delta * (self.U * self.weights) @ self.V.T
