"""Benchmark environments and their registry."""

from __future__ import annotations

from typing import Any

from ..errors import ConfigurationError
from .base import MODALITIES, PROTOCOLS, DomainPolicy, Environment
from .beer import BeerGame, stage_names
from .fishbanks import Fishbanks
from .movie import MovieNight
from .topology import make_topology

ENVIRONMENTS: dict[str, type[Environment]] = {"beer": BeerGame, "fishbanks": Fishbanks, "movie": MovieNight}
DEFAULT_AGENTS = {"beer": 4, "fishbanks": 12, "movie": 20}


def agent_ids(domain: str, n: int) -> list[str]:
    if domain == "beer":
        return stage_names(n)
    prefix = "company" if domain == "fishbanks" else "agent"
    width = max(2, len(str(n - 1)))
    return [f"{prefix}_{i:0{width}d}" for i in range(n)]


def build_environment(
    domain: str,
    n_agents: int | None = None,
    *,
    seed: int = 0,
    rounds: int = 20,
    sparsity: float = 0.0,
    topology: str = "auto",
    params: dict[str, Any] | None = None,
) -> Environment:
    if domain not in ENVIRONMENTS:
        raise ConfigurationError(f"unknown domain {domain!r}; expected one of {sorted(ENVIRONMENTS)}")
    n = n_agents or DEFAULT_AGENTS[domain]
    try:
        agents = agent_ids(domain, n)
    except ValueError as exc:
        raise ConfigurationError(str(exc)) from None
    graph = make_topology(domain, agents, sparsity, seed, topology)
    return ENVIRONMENTS[domain](agents, graph, dict(params or {}), seed, rounds)


__all__ = [
    "ENVIRONMENTS",
    "MODALITIES",
    "PROTOCOLS",
    "DomainPolicy",
    "Environment",
    "agent_ids",
    "build_environment",
    "make_topology",
]
