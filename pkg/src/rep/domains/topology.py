"""Communication graphs for the benchmark domains."""

from __future__ import annotations

import itertools

from ..core import AgentId, NetworkTopology
from ..errors import ConfigurationError
from .base import SPARSIFY, TOPOLOGY, stream

TOPOLOGY_KINDS = ("auto", "chain", "complete", "small_world")
DEFAULT_KIND = {"beer": "chain", "fishbanks": "complete", "movie": "small_world"}


def chain(agents: list[AgentId]) -> NetworkTopology:
    return NetworkTopology(agents, zip(agents, agents[1:]))


def complete(agents: list[AgentId]) -> NetworkTopology:
    return NetworkTopology(agents, itertools.combinations(agents, 2))


def small_world_edges(n: int, k: int, p: float, rng) -> list[tuple[int, int]]:
    """Ring lattice with each node joined to its ``k`` nearest neighbors, then
    each lattice edge rewired with probability ``p`` to a uniformly chosen node
    that is not already adjacent. Falls back to the complete graph when n <= k.
    """
    if n <= k:
        return list(itertools.combinations(range(n), 2))
    adj: list[set[int]] = [set() for _ in range(n)]
    for u in range(n):
        for j in range(1, k // 2 + 1):
            v = (u + j) % n
            adj[u].add(v)
            adj[v].add(u)
    for j in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + j) % n
            if v not in adj[u] or rng.random() >= p:
                continue
            if len(adj[u]) >= n - 1:
                continue
            while True:
                w = int(rng.integers(n))
                if w != u and w not in adj[u]:
                    break
            adj[u].discard(v)
            adj[v].discard(u)
            adj[u].add(w)
            adj[w].add(u)
    return sorted({(min(u, v), max(u, v)) for u in range(n) for v in adj[u]})


def make_topology(
    domain: str,
    agents: list[AgentId],
    sparsity: float = 0.0,
    seed: int = 0,
    kind: str = "auto",
    degree: int = 4,
    rewire: float = 0.1,
) -> NetworkTopology:
    """Build the graph for ``domain``.

    Sparsification shuffles the base edge list once per seed and keeps a
    prefix, so for a fixed seed sparser graphs are subgraphs of denser ones.
    """
    n = len(agents)
    problems = []
    if n < 2:
        problems.append(f"need at least 2 agents, got {n}")
    if not 0.0 <= sparsity < 1.0:
        problems.append(f"sparsity must lie in [0, 1), got {sparsity}")
    if kind not in TOPOLOGY_KINDS:
        problems.append(f"unknown topology {kind!r}")
    if kind == "auto" and domain not in DEFAULT_KIND:
        problems.append(f"no default topology for domain {domain!r}")
    if problems:
        raise ConfigurationError(problems)
    kind = DEFAULT_KIND[domain] if kind == "auto" else kind

    if kind == "chain":
        base = [(i, i + 1) for i in range(n - 1)]
    elif kind == "complete":
        base = list(itertools.combinations(range(n), 2))
    else:
        base = small_world_edges(n, degree, rewire, stream(seed, TOPOLOGY))

    if sparsity > 0.0:
        order = stream(seed, SPARSIFY).permutation(len(base))
        keep = round((1.0 - sparsity) * len(base))
        base = [base[i] for i in sorted(order[:keep])]
    return NetworkTopology(agents, [(agents[a], agents[b]) for a, b in base])
