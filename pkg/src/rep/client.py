"""Per-agent protocol client: receive, sync, decide, send.

Round ``t`` drains the round ``t-1`` messages, folds any shared proposal and
the neighbor sensitivities into the local state, asks the policy for a
decision against that state and multicasts the result. Round 0 starts from
the initial state with an empty inbox.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from typing import Any

from .aggregation import GradientSignal, Synthesizer, Updater, make_updater
from .consensus import CONSENSUS_RULES
from .core import (
    AgentId,
    AgentPolicy,
    CoordinationState,
    Decision,
    Rejection,
    SensitivityMessage,
    validate_message,
)
from .errors import ConfigurationError, IncompatiblePeerError, ProtocolError
from .transport import CONSENSUS_TOPIC, Transport, get_transport

log = logging.getLogger(__name__)

CONSENSUS_SENDER = CONSENSUS_TOPIC


class REPClient:
    def __init__(
        self,
        agent_id: AgentId,
        policy: AgentPolicy,
        transport: Transport,
        updater: Updater,
        consensus: str,
        initial_state: CoordinationState,
        neighbors: Iterable[AgentId],
        neighbor_degrees: Mapping[AgentId, int] | None = None,
        barrier_timeout: float | None = None,
    ):
        self.agent_id = agent_id
        self.policy = policy
        self.transport = transport
        self.updater = updater
        self.consensus = consensus
        self.state = initial_state
        self.neighbors = frozenset(neighbors)
        self.neighbor_degrees = dict(neighbor_degrees) if neighbor_degrees else None
        self.barrier_timeout = barrier_timeout
        self.round = 0
        self.last_signal: GradientSignal = GradientSignal.zero(initial_state.names)
        self.last_inbox: list[SensitivityMessage] = []
        transport.subscribe(agent_id)

    def _receive(self) -> list[SensitivityMessage]:
        if self.round == 0:
            return []
        prev = self.round - 1
        wants_shared = self.consensus != "none"
        expected = len(self.neighbors) + int(wants_shared)
        raw = self.transport.drain_inbox(self.agent_id, prev, expected=expected, timeout=self.barrier_timeout)
        known = self.neighbors | {CONSENSUS_SENDER}
        accepted: dict[AgentId, SensitivityMessage] = {}
        for msg in raw:
            reason = validate_message(msg, prev, known, self.state.names)
            if reason is Rejection.INCOMPATIBLE_VERSION:
                raise IncompatiblePeerError(
                    f"{msg.sender} speaks protocol {msg.protocol_version}", sender=msg.sender
                )
            if reason is not None:
                log.warning("%s dropped message from %s: %s", self.agent_id, msg.sender, reason.value)
                continue
            if msg.sender in accepted:
                log.warning("%s dropped duplicate message from %s", self.agent_id, msg.sender)
                continue
            accepted[msg.sender] = msg
        missing = sorted(self.neighbors - set(accepted))
        if missing:
            raise ProtocolError(f"{self.agent_id}: no round-{prev} message from {missing[0]}", sender=missing[0])
        if wants_shared and CONSENSUS_SENDER not in accepted:
            raise ProtocolError(f"{self.agent_id}: no round-{prev} shared proposal", sender=CONSENSUS_SENDER)
        return [accepted[s] for s in sorted(accepted)]

    def run_round(self, observation: Any = None) -> tuple[Decision, CoordinationState]:
        inbox = self._receive()
        neighbor_msgs = [m for m in inbox if m.sender != CONSENSUS_SENDER]
        for m in inbox:
            if m.sender == CONSENSUS_SENDER:
                self.state = self.state.replace(m.decision)

        signals = getattr(observation, "signals", None) or {}
        self.state, self.last_signal = self.updater.update(
            neighbor_msgs, self.state, signals, self.neighbor_degrees
        )
        self.last_inbox = neighbor_msgs

        decision, sensitivity = self.policy.act(
            self.state, observation, {m.sender: m.decision for m in neighbor_msgs}
        )
        decision = {str(k): float(v) for k, v in decision.items()}
        msg = SensitivityMessage(self.round, self.agent_id, decision, sensitivity)
        self.transport.multicast(self.agent_id, self.neighbors, msg)
        self.last_message = msg
        self.round += 1
        return decision, self.state


def configure(
    agent: AgentPolicy,
    transport: Transport | str,
    updater: str | Any,
    consensus: str,
    initial_state: CoordinationState | Mapping[str, float],
    topology_view: Iterable[AgentId],
    *,
    agent_id: AgentId | None = None,
    synthesizer: Synthesizer | None = None,
    neighbor_degrees: Mapping[AgentId, int] | None = None,
    barrier_timeout: float | None = None,
) -> REPClient:
    """Build a client at round 0. Handles may be objects or registry names."""
    problems = []
    if isinstance(transport, str):
        try:
            transport = get_transport(transport)
        except ConfigurationError as exc:
            problems += exc.problems
    try:
        upd = make_updater(updater, synthesizer)
    except ConfigurationError as exc:
        problems += exc.problems
    if consensus not in CONSENSUS_RULES:
        problems.append(f"unknown consensus rule {consensus!r}; expected one of {list(CONSENSUS_RULES)}")
    if not isinstance(initial_state, CoordinationState):
        if not initial_state:
            problems.append("initial state has no coordination variables")
        else:
            initial_state = CoordinationState(initial_state)
    agent_id = agent_id or getattr(agent, "agent_id", None)
    if not agent_id:
        problems.append("agent id missing: pass agent_id or give the policy an agent_id attribute")
    view = set(topology_view)
    if agent_id in view:
        problems.append(f"agent {agent_id!r} lists itself as a neighbor")
    if problems:
        raise ConfigurationError(problems)
    return REPClient(
        agent_id, agent, transport, upd, consensus, initial_state, view, neighbor_degrees, barrier_timeout  # type: ignore[arg-type]
    )
