"""Gossip matrix construction/validation and the standalone pull rumor process."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfigError, SpreadMomentOverflowError

ROW_TOL = 1e-12


@dataclass(frozen=True)
class GossipMatrix:
    """N x N row-stochastic communication law."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise InvalidConfigError("gossip matrix must be square")
        object.__setattr__(self, "probs", p)

    @property
    def n_agents(self) -> int:
        return self.probs.shape[0]


def complete_graph(N: int) -> GossipMatrix:
    """Uniform pulls from the N-1 other agents, zero self-mass."""
    if N < 2:
        raise InvalidConfigError("complete graph needs N >= 2")
    probs = np.full((N, N), 1.0 / (N - 1))
    np.fill_diagonal(probs, 0.0)
    return GossipMatrix(probs)


def _strongly_connected_components(adj: np.ndarray) -> list:
    """Tarjan-free SCC via double DFS (Kosaraju) on a boolean adjacency matrix."""
    n = adj.shape[0]
    order = []
    seen = np.zeros(n, dtype=bool)

    def dfs(start, graph, visit):
        stack = [(start, 0)]
        seen_local = visit
        seen_local[start] = True
        while stack:
            node, _ = stack[-1]
            nxt = None
            for j in np.nonzero(graph[node])[0]:
                if not seen_local[j]:
                    nxt = j
                    break
            if nxt is None:
                stack.pop()
                order.append(node)
            else:
                seen_local[nxt] = True
                stack.append((int(nxt), 0))

    for i in range(n):
        if not seen[i]:
            dfs(i, adj, seen)

    comps = []
    seen2 = np.zeros(n, dtype=bool)
    adj_t = adj.T
    for node in reversed(order):
        if seen2[node]:
            continue
        comp = []
        stack = [node]
        seen2[node] = True
        while stack:
            u = stack.pop()
            comp.append(u)
            for j in np.nonzero(adj_t[u])[0]:
                if not seen2[j]:
                    seen2[j] = True
                    stack.append(int(j))
        comps.append(sorted(comp))
    return comps


def validate(matrix) -> list:
    """Return a list of human-readable diagnostics; empty means the matrix is valid."""
    p = matrix.probs if isinstance(matrix, GossipMatrix) else np.asarray(matrix, dtype=float)
    issues = []
    if p.ndim != 2 or p.shape[0] != p.shape[1]:
        return ["matrix is not square"]
    if np.any(p < 0):
        i, j = np.argwhere(p < 0)[0]
        issues.append(f"negative entry at ({i}, {j})")
    sums = p.sum(axis=1)
    bad = np.nonzero(np.abs(sums - 1.0) > ROW_TOL)[0]
    if bad.size:
        issues.append(f"row {bad[0]} sums to {sums[bad[0]]:.6g}, expected 1")
    if not issues:
        comps = _strongly_connected_components(p > 0)
        if len(comps) > 1:
            issues.append(
                "gossip graph is not strongly connected; components: "
                + "; ".join(str(c) for c in comps)
            )
    return issues


def sample_neighbor(G: GossipMatrix, i: int, rng: np.random.Generator) -> int:
    """Inverse-CDF draw from row i on a single uniform variate."""
    row = G.probs[i]
    cum = np.cumsum(row)
    u = rng.random()
    j = int(np.searchsorted(cum, u, side="right"))
    return min(j, G.n_agents - 1)


def simulate_rumor_spread(
    G: GossipMatrix,
    source: int,
    rng: np.random.Generator,
    max_rounds: int = 10**6,
):
    """Synchronous PULL rumor process.

    Per round every uninformed agent samples one neighbor from its gossip row and
    becomes informed iff that neighbor was informed at the start of the round.
    Returns (rounds until all informed, per-agent first-informed round).
    """
    n = G.n_agents
    informed = np.zeros(n, dtype=bool)
    informed[source] = True
    times = np.full(n, -1, dtype=np.int64)
    times[source] = 0
    cums = np.cumsum(G.probs, axis=1)
    rounds = 0
    while not informed.all():
        rounds += 1
        if rounds > max_rounds:
            raise InvalidConfigError(
                f"rumor did not spread within {max_rounds} rounds; is G irreducible?"
            )
        uninformed = np.nonzero(~informed)[0]
        u = rng.random(uninformed.size)
        newly = []
        for idx, i in enumerate(uninformed):
            j = min(int(np.searchsorted(cums[i], u[idx], side="right")), n - 1)
            if informed[j]:
                newly.append(i)
        for i in newly:
            informed[i] = True
            times[i] = rounds
    return rounds, times


@dataclass(frozen=True)
class SpreadMomentEstimate:
    mean: float
    stderr: float
    trials: int
    taus: np.ndarray = field(repr=False)


def estimate_spread_moment(
    G: GossipMatrix,
    b: float,
    trials: int,
    rng: np.random.Generator,
    source: int = 0,
) -> SpreadMomentEstimate:
    """Monte-Carlo estimate of E[b**(2*tau_spr)] with its standard error."""
    if b <= 1:
        raise InvalidConfigError("need b > 1")
    if G.n_agents == 1:
        return SpreadMomentEstimate(1.0, 0.0, trials, np.zeros(trials, dtype=np.int64))
    taus = np.empty(trials, dtype=np.int64)
    for t in range(trials):
        taus[t], _ = simulate_rumor_spread(G, source, rng)
    with np.errstate(over="raise"):
        try:
            vals = np.power(float(b), 2.0 * taus)
        except FloatingPointError as exc:
            raise SpreadMomentOverflowError(
                f"b**(2*tau) overflowed for b={b}, max tau={taus.max()}"
            ) from exc
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return SpreadMomentEstimate(mean, stderr, trials, taus)
