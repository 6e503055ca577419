"""Scaffolding shared by the benchmark environments.

A policy is one decision core plus one sensitivity emitter. The protocol
variant only picks the emitter; the harness separately picks the updater and
consensus rule. Keeping the core in a single method on a single class is what
the fairness audit checks.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Callable, Mapping
from typing import Any

import numpy as np

from ..aggregation import UpdaterConfig
from ..core import AgentId, CoordinationState, Decision, NetworkTopology, Observation, Sensitivity

PROTOCOLS = ("rep", "a2a")
MODALITIES = ("numeric", "textual")

# independent random streams per trial seed
PREFERENCES, TOPOLOGY, NOISE, SPARSIFY = 0, 1, 2, 3


def stream(seed: int, which: int) -> np.random.Generator:
    return np.random.default_rng([seed, which])


Emitter = Callable[["DomainPolicy", CoordinationState, Observation, Decision], Sensitivity]


class DomainPolicy(ABC):
    """Base for scripted agents.

    ``decide`` is the decision core and must not depend on the protocol.
    ``emitter`` produces the sensitivity attached to each decision.
    """

    def __init__(self, agent_id: AgentId, emitter: Emitter):
        self.agent_id = agent_id
        self.emitter = emitter

    @abstractmethod
    def decide(self, state: CoordinationState, obs: Observation, inbox: Mapping[AgentId, Decision]) -> Decision: ...

    def act(
        self, state: CoordinationState, obs: Observation, inbox: Mapping[AgentId, Decision]
    ) -> tuple[Decision, Sensitivity]:
        decision = self.decide(state, obs, inbox)
        return decision, self.emitter(self, state, obs, decision)


class Environment(ABC):
    """One trial's world: agents, graph, dynamics and metrics."""

    def __init__(self, agents: list[AgentId], topology: NetworkTopology, params: dict[str, Any]):
        self.agents = agents
        self.topology = topology
        self.params = params

    # movie tracks a vote on the shared proposal; the others do not
    tracks_agreement = False
    default_consensus = "none"

    @abstractmethod
    def initial_state(self, agent: AgentId) -> CoordinationState: ...

    @abstractmethod
    def updater_config(self, kind: str, step_size: float | None) -> UpdaterConfig: ...

    @abstractmethod
    def make_policy(self, agent: AgentId, protocol: str, modality: str) -> DomainPolicy: ...

    @abstractmethod
    def observe(self, agent: AgentId) -> Observation: ...

    @abstractmethod
    def step(self, decisions: Mapping[AgentId, Decision]) -> dict[str, float]:
        """Advance one round and return that round's metrics."""

    @abstractmethod
    def summarize(self, metrics: list[dict[str, float]]) -> dict[str, float | None]:
        """Trial summary, computed only from per-round metrics."""

    def endorse(self, index: int, decision: Decision, shared: CoordinationState | None) -> bool:
        return True
