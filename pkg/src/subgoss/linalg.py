"""Small dense linear algebra for subspace bandits.

All per-subspace statistics are kept in m-dimensional subspace coordinates:
for a basis U the projected Gram matrix is Sigma = lambda*I_m + sum (U^T a)(U^T a)^T,
which is the full-rank core of the rank-deficient ambient-space regularized
Gram matrix U Sigma U^T.  m x m solves are faster and better conditioned than
pseudo-inverting the d x d matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InsufficientSamplesError,
    InvalidDimensionError,
    NumericalDegeneracyError,
)

ORTHO_TOL = 1e-10


@dataclass(frozen=True)
class Basis:
    """Orthonormal d x m basis of a subspace. The projector U U^T is never stored."""

    columns: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.columns, dtype=float)
        if u.ndim != 2:
            raise InvalidDimensionError("basis must be a 2-d array")
        object.__setattr__(self, "columns", u)
        gram = u.T @ u
        err = np.max(np.abs(gram - np.eye(u.shape[1])))
        if err > ORTHO_TOL:
            raise InvalidDimensionError(
                f"basis columns not orthonormal (max deviation {err:.3e})"
            )

    @property
    def d(self) -> int:
        return self.columns.shape[0]

    @property
    def m(self) -> int:
        return self.columns.shape[1]


def random_orthonormal_basis(d: int, m: int, rng: np.random.Generator) -> Basis:
    """Left singular vectors of a d x m standard Gaussian matrix (Haar on the Stiefel manifold)."""
    if not 1 <= m < d:
        raise InvalidDimensionError(f"need 1 <= m < d, got m={m}, d={d}")
    g = rng.standard_normal((d, m))
    u, _, _ = np.linalg.svd(g, full_matrices=False)
    return Basis(u)


def project(basis: Basis, x: np.ndarray) -> np.ndarray:
    """U (U^T x), the orthogonal projection of x onto span(U)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (basis.d,):
        raise InvalidDimensionError(f"expected vector of length {basis.d}, got {x.shape}")
    return basis.columns @ (basis.columns.T @ x)


def subspace_overlap(b1: Basis, b2: Basis) -> float:
    """Largest singular value of U1^T U2; equals 1 iff the spans share a direction."""
    if b1.d != b2.d:
        raise InvalidDimensionError("bases live in different ambient dimensions")
    s = np.linalg.svd(b1.columns.T @ b2.columns, compute_uv=False)
    return float(min(1.0, s[0])) if s.size else 0.0


class ExploreStats:
    """Round-robin explore statistics of one subspace: per-column reward sums and play counts."""

    __slots__ = ("reward_sum", "count")

    def __init__(self, m: int):
        self.reward_sum = np.zeros(m)
        self.count = np.zeros(m, dtype=np.int64)

    @property
    def total_count(self) -> int:
        return int(self.count.sum())

    def next_column(self) -> int:
        # least-played column, lowest index on ties: keeps counts within 1 of each other
        return int(np.argmin(self.count))

    def add_play(self, column: int, reward: float) -> None:
        self.reward_sum[column] += reward
        self.count[column] += 1

    def copy(self) -> "ExploreStats":
        out = ExploreStats(len(self.count))
        out.reward_sum[:] = self.reward_sum
        out.count[:] = self.count
        return out


def explore_estimate(stats: ExploreStats, basis: Basis) -> np.ndarray:
    """Least-squares estimate from explore plays: U ybar with ybar the per-column reward mean.

    Equals the unconstrained least-squares solution for the round-robin design
    whose columns are basis vectors.
    """
    if np.any(stats.count == 0):
        raise InsufficientSamplesError("every basis column needs at least one explore play")
    ybar = stats.reward_sum / stats.count
    return basis.columns @ ybar


class LinUcbStats:
    """Projected-LinUCB statistics of one subspace in m coordinates.

    gram = lambda*I_m + sum x x^T and moment = sum x*r over recorded plays,
    where x = U^T a are the subspace coordinates of the played action.
    """

    __slots__ = ("gram", "moment", "count", "lam")

    def __init__(self, m: int, lam: float):
        if lam <= 0:
            raise NumericalDegeneracyError("regularization must be positive")
        self.gram = lam * np.eye(m)
        self.moment = np.zeros(m)
        self.count = 0
        self.lam = float(lam)

    def add_play_coords(self, x: np.ndarray, reward: float) -> None:
        self.gram += np.outer(x, x)
        self.moment += reward * x
        self.count += 1

    def theta_hat(self) -> np.ndarray:
        """Ridge estimate in subspace coordinates."""
        return np.linalg.solve(self.gram, self.moment)

    def copy(self) -> "LinUcbStats":
        out = LinUcbStats.__new__(LinUcbStats)
        out.gram = self.gram.copy()
        out.moment = self.moment.copy()
        out.count = self.count
        out.lam = self.lam
        return out


def record_linucb_play(
    stats: LinUcbStats, basis: Basis, a: np.ndarray, reward: float
) -> LinUcbStats:
    """Return a new statistics object with the play (a, reward) folded in."""
    a = np.asarray(a, dtype=float)
    if a.shape != (basis.d,):
        raise InvalidDimensionError(f"expected vector of length {basis.d}, got {a.shape}")
    out = stats.copy()
    out.add_play_coords(basis.columns.T @ a, reward)
    return out


def ucb_scores(stats: LinUcbStats, coords: np.ndarray, beta: float) -> np.ndarray:
    """Optimistic scores for a batch of actions given as m x n subspace coordinates.

    score_i = <theta_hat, x_i> + beta * ||x_i||_{gram^-1}, the closed form of the
    maximum of <theta, x_i> over the confidence ellipsoid of radius beta.
    """
    try:
        np.linalg.cholesky(stats.gram)
    except np.linalg.LinAlgError as exc:
        raise NumericalDegeneracyError("projected Gram matrix is not positive definite") from exc
    th = np.linalg.solve(stats.gram, stats.moment)
    y = np.linalg.solve(stats.gram, coords)
    quad = np.einsum("ij,ij->j", coords, y)
    return th @ coords + beta * np.sqrt(np.maximum(quad, 0.0))


def ucb_score(stats: LinUcbStats, basis: Basis, a: np.ndarray, beta: float) -> float:
    """Optimistic score of a single ambient-space action."""
    if beta < 0:
        raise NumericalDegeneracyError("beta must be nonnegative")
    a = np.asarray(a, dtype=float)
    if a.shape != (basis.d,):
        raise InvalidDimensionError(f"expected vector of length {basis.d}, got {a.shape}")
    x = basis.columns.T @ a
    return float(ucb_scores(stats, x[:, None], beta)[0])
