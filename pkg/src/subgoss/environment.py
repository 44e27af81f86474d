"""Problem instance generation and reward sampling.

Instances follow the synthetic protocol: K random m-dimensional subspaces
(SVD bases of Gaussian matrices), a hidden vector obtained by projecting a
standard Gaussian onto the true subspace, and an action set of unit-sphere
Gaussians with all subspace basis columns appended.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateInstanceError,
    GenerationFailureError,
    InvalidConfigError,
    InvalidDimensionError,
)
from .linalg import Basis, project, random_orthonormal_basis, subspace_overlap

DISJOINT_TOL = 1e-8


@dataclass(frozen=True)
class SubspaceCollection:
    """K orthonormal bases sharing ambient and subspace dimension, pairwise disjoint."""

    bases: tuple

    def __post_init__(self):
        bases = tuple(self.bases)
        object.__setattr__(self, "bases", bases)
        if not bases:
            raise InvalidConfigError("need at least one subspace")
        d, m = bases[0].d, bases[0].m
        for b in bases:
            if (b.d, b.m) != (d, m):
                raise InvalidDimensionError("all bases must share (d, m)")
        for i in range(len(bases)):
            for j in range(i + 1, len(bases)):
                if subspace_overlap(bases[i], bases[j]) >= 1.0 - DISJOINT_TOL:
                    raise GenerationFailureError(
                        f"subspaces {i} and {j} share a direction"
                    )

    @property
    def K(self) -> int:
        return len(self.bases)

    @property
    def d(self) -> int:
        return self.bases[0].d

    @property
    def m(self) -> int:
        return self.bases[0].m


@dataclass(frozen=True)
class ProblemInstance:
    """One bandit environment shared by all agents."""

    subspaces: SubspaceCollection
    theta_star: np.ndarray
    true_index: int
    action_set: np.ndarray  # (n_actions, d), each row an action
    noise_std: float
    s_bound: float

    def __post_init__(self):
        theta = np.asarray(self.theta_star, dtype=float)
        actions = np.asarray(self.action_set, dtype=float)
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "action_set", actions)
        d = self.subspaces.d
        if theta.shape != (d,):
            raise InvalidDimensionError("theta_star dimension mismatch")
        if actions.ndim != 2 or actions.shape[1] != d:
            raise InvalidDimensionError("action set dimension mismatch")
        if not 0 <= self.true_index < self.subspaces.K:
            raise InvalidConfigError("true_index out of range")
        resid = theta - project(self.subspaces.bases[self.true_index], theta)
        if np.linalg.norm(resid) > 1e-10:
            raise InvalidConfigError("theta_star does not lie in the true subspace")
        if np.linalg.norm(theta) > self.s_bound + 1e-12:
            raise InvalidConfigError("||theta_star|| exceeds s_bound")
        norms = np.linalg.norm(actions, axis=1)
        if norms.size and norms.max() > 1.0 + 1e-12:
            raise InvalidConfigError("all actions must have norm <= 1")

    @property
    def d(self) -> int:
        return self.subspaces.d

    @property
    def m(self) -> int:
        return self.subspaces.m

    @property
    def K(self) -> int:
        return self.subspaces.K


@dataclass(frozen=True)
class GapReport:
    delta: float
    per_subspace: np.ndarray


def _sample_unit_sphere(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def generate_instance(
    d: int,
    m: int,
    K: int,
    true_index: int,
    n_actions: int,
    noise_std: float,
    s_bound: float,
    rng: np.random.Generator,
    max_tries: int = 100,
) -> ProblemInstance:
    """Generate a random instance; resamples subspace collections violating disjointness."""
    if K < 2:
        raise InvalidConfigError("need K >= 2 subspaces")
    if not 1 <= m < d:
        raise InvalidConfigError(f"need 1 <= m < d, got m={m}, d={d}")
    if not 0 <= true_index < K:
        raise InvalidConfigError("true_index out of range")
    if n_actions < 1:
        raise InvalidConfigError("need at least one random action")
    if noise_std < 0 or s_bound <= 0:
        raise InvalidConfigError("noise_std must be >= 0 and s_bound > 0")

    collection = None
    for _ in range(max_tries):
        bases = tuple(random_orthonormal_basis(d, m, rng) for _ in range(K))
        try:
            collection = SubspaceCollection(bases)
            break
        except GenerationFailureError:
            continue
    if collection is None:
        raise GenerationFailureError(
            f"could not sample {K} disjoint {m}-dim subspaces in R^{d} "
            f"after {max_tries} attempts"
        )

    raw = project(collection.bases[true_index], rng.standard_normal(d))
    norm = np.linalg.norm(raw)
    if norm < 1e-12:
        raise GenerationFailureError("degenerate zero draw for theta_star")
    theta = raw * (min(norm, s_bound) / norm)

    randoms = _sample_unit_sphere(n_actions, d, rng)
    columns = np.vstack([b.columns.T for b in collection.bases])  # (K*m, d)
    actions = np.vstack([randoms, columns])

    return ProblemInstance(
        subspaces=collection,
        theta_star=theta,
        true_index=true_index,
        action_set=actions,
        noise_std=noise_std,
        s_bound=s_bound,
    )


def resample_actions(instance: ProblemInstance, n_actions: int, rng: np.random.Generator) -> np.ndarray:
    """Fresh unit-sphere Gaussians with the basis columns appended (time-varying action mode)."""
    randoms = _sample_unit_sphere(n_actions, instance.d, rng)
    columns = np.vstack([b.columns.T for b in instance.subspaces.bases])
    return np.vstack([randoms, columns])


def reward(instance: ProblemInstance, a: np.ndarray, rng: np.random.Generator) -> float:
    """<a, theta*> plus Gaussian noise of the instance's standard deviation."""
    a = np.asarray(a, dtype=float)
    if a.shape != (instance.d,):
        raise InvalidDimensionError("action dimension mismatch")
    noise = instance.noise_std * rng.standard_normal() if instance.noise_std > 0 else 0.0
    return float(a @ instance.theta_star + noise)


def optimal_action(instance: ProblemInstance):
    """(best action vector, best value); ties broken by lowest action index."""
    if instance.action_set.shape[0] == 0:
        raise InvalidConfigError("empty action set")
    values = instance.action_set @ instance.theta_star
    idx = int(np.argmax(values))
    return instance.action_set[idx], float(values[idx])


def compute_gap(instance: ProblemInstance) -> GapReport:
    """Per-subspace gaps ||P_true theta* - P_k theta*|| and their minimum over wrong subspaces."""
    theta = instance.theta_star
    p_true = project(instance.subspaces.bases[instance.true_index], theta)
    gaps = np.zeros(instance.K)
    for k, basis in enumerate(instance.subspaces.bases):
        gaps[k] = np.linalg.norm(p_true - project(basis, theta))
    others = np.delete(gaps, instance.true_index)
    delta = float(others.min())
    if delta <= 1e-10:
        raise DegenerateInstanceError(
            "two subspaces explain theta_star equally well (zero gap)"
        )
    return GapReport(delta=delta, per_subspace=gaps)


def misspecification(instance: ProblemInstance) -> float:
    """Distance from theta* to its projection onto the declared true subspace (diagnostic)."""
    resid = instance.theta_star - project(
        instance.subspaces.bases[instance.true_index], instance.theta_star
    )
    return float(np.linalg.norm(resid))


def instance_to_dict(instance: ProblemInstance) -> dict:
    return {
        "d": instance.d,
        "m": instance.m,
        "K": instance.K,
        "true_index": instance.true_index,
        "noise_std": instance.noise_std,
        "s_bound": instance.s_bound,
        "theta_star": instance.theta_star.tolist(),
        "bases": [b.columns.tolist() for b in instance.subspaces.bases],
        "action_set": instance.action_set.tolist(),
    }


def instance_from_dict(data: dict) -> ProblemInstance:
    bases = tuple(Basis(np.asarray(b)) for b in data["bases"])
    return ProblemInstance(
        subspaces=SubspaceCollection(bases),
        theta_star=np.asarray(data["theta_star"]),
        true_index=int(data["true_index"]),
        action_set=np.asarray(data["action_set"]),
        noise_std=float(data["noise_std"]),
        s_bound=float(data["s_bound"]),
    )


def save_instance(instance: ProblemInstance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh)


def load_instance(path) -> ProblemInstance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))
