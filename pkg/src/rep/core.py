"""Message schema and state types of the REP sensitivity-sharing protocol.

Everything here is domain independent: a domain only decides which
coordination variables exist and what its decisions look like.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from typing import Any, Literal, Protocol

from .errors import ConfigurationError

PROTOCOL_VERSION = "1.0.0"

AgentId = str
Decision = dict[str, float]

NUMERIC = "numeric"
TEXTUAL = "textual"


def parse_version(version: str) -> tuple[int, int, int]:
    parts = version.split(".")
    if len(parts) != 3 or not all(p.isdigit() for p in parts):
        raise ValueError(f"not a semantic version: {version!r}")
    major, minor, patch = (int(p) for p in parts)
    return major, minor, patch


def versions_compatible(a: str, b: str) -> bool:
    """Only identical major versions interoperate."""
    try:
        return parse_version(a)[0] == parse_version(b)[0]
    except ValueError:
        return False


class NetworkTopology:
    """Undirected communication graph with cached neighbor sets."""

    def __init__(self, agents: Iterable[AgentId], edges: Iterable[tuple[AgentId, AgentId]] = ()):
        agent_list = list(agents)
        if any(not isinstance(a, str) or not a for a in agent_list):
            raise ValueError("agent ids must be non-empty strings")
        if len(set(agent_list)) != len(agent_list):
            raise ValueError("agent ids must be unique")
        self.agents: tuple[AgentId, ...] = tuple(agent_list)
        known = set(agent_list)
        adjacency: dict[AgentId, set[AgentId]] = {a: set() for a in agent_list}
        normalized: set[tuple[AgentId, AgentId]] = set()
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            if a not in known or b not in known:
                raise ValueError(f"edge ({a!r}, {b!r}) references an unknown agent")
            normalized.add((a, b) if a < b else (b, a))
            adjacency[a].add(b)
            adjacency[b].add(a)
        self.edges: frozenset[tuple[AgentId, AgentId]] = frozenset(normalized)
        self._adjacency = {a: frozenset(n) for a, n in adjacency.items()}

    def neighbors(self, agent: AgentId) -> frozenset[AgentId]:
        return self._adjacency[agent]

    def degree(self, agent: AgentId) -> int:
        return len(self._adjacency[agent])

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def __len__(self) -> int:
        return len(self.agents)

    def __repr__(self) -> str:
        return f"NetworkTopology({len(self.agents)} agents, {len(self.edges)} edges)"


class CoordinationState:
    """Named coordination variables, kept name-sorted and clamped to bounds.

    Instances are immutable; updates return new states.
    """

    __slots__ = ("_values", "_bounds")

    def __init__(self, values: Mapping[str, float], bounds: Mapping[str, tuple[float, float]] | None = None):
        if not values:
            raise ConfigurationError("coordination state needs at least one variable")
        bounds = dict(bounds or {})
        unknown = set(bounds) - set(values)
        if unknown:
            raise ConfigurationError(f"bounds given for unknown variables: {sorted(unknown)}")
        for name, (lo, hi) in bounds.items():
            if lo > hi:
                raise ConfigurationError(f"empty bounds for {name}: [{lo}, {hi}]")
        self._bounds = {k: (float(lo), float(hi)) for k, (lo, hi) in sorted(bounds.items())}
        self._values = {k: self._clamp(k, float(v)) for k, v in sorted(values.items())}

    def _clamp(self, name: str, value: float) -> float:
        if name in self._bounds:
            lo, hi = self._bounds[name]
            return min(max(value, lo), hi)
        return value

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._values)

    @property
    def bounds(self) -> dict[str, tuple[float, float]]:
        return dict(self._bounds)

    def __getitem__(self, name: str) -> float:
        return self._values[name]

    def __contains__(self, name: object) -> bool:
        return name in self._values

    def __iter__(self) -> Iterator[str]:
        return iter(self._values)

    def __len__(self) -> int:
        return len(self._values)

    def items(self):
        return self._values.items()

    def as_dict(self) -> dict[str, float]:
        return dict(self._values)

    def replace(self, updates: Mapping[str, float]) -> CoordinationState:
        unknown = set(updates) - set(self._values)
        if unknown:
            raise KeyError(f"unknown coordination variables: {sorted(unknown)}")
        merged = {**self._values, **updates}
        return CoordinationState(merged, self._bounds)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CoordinationState):
            return NotImplemented
        return self._values == other._values and self._bounds == other._bounds

    def __hash__(self) -> int:
        return hash(tuple(self._values.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self._values.items())
        return f"CoordinationState({inner})"


@dataclass(frozen=True)
class Sensitivity:
    """How a sender's decision would move under counterfactual shifts.

    Numeric payloads are ``(variable, partial)`` pairs sorted by name; textual
    payloads are clause strings kept in emission order.
    """

    kind: Literal["numeric", "textual"]
    numeric: tuple[tuple[str, float], ...] | None = None
    textual: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind == NUMERIC:
            if self.numeric is None or self.textual is not None:
                raise ValueError("numeric sensitivity needs exactly a numeric payload")
            pairs = tuple(sorted((str(k), float(v)) for k, v in self.numeric))
            names = [k for k, _ in pairs]
            if len(set(names)) != len(names):
                raise ValueError(f"duplicate variables in numeric sensitivity: {names}")
            object.__setattr__(self, "numeric", pairs)
        elif self.kind == TEXTUAL:
            if self.textual is None or self.numeric is not None:
                raise ValueError("textual sensitivity needs exactly a textual payload")
            if not all(isinstance(c, str) for c in self.textual):
                raise ValueError("textual clauses must be strings")
            object.__setattr__(self, "textual", tuple(self.textual))
        else:
            raise ValueError(f"unknown sensitivity kind {self.kind!r}")

    @classmethod
    def of_numeric(cls, partials: Mapping[str, float] | Iterable[tuple[str, float]] = ()) -> Sensitivity:
        items = partials.items() if isinstance(partials, Mapping) else partials
        return cls(NUMERIC, numeric=tuple(items))

    @classmethod
    def of_text(cls, clauses: Iterable[str] = ()) -> Sensitivity:
        return cls(TEXTUAL, textual=tuple(clauses))

    def as_dict(self) -> dict[str, float]:
        """Numeric payload as a mapping; textual sensitivities have none."""
        if self.kind != NUMERIC:
            raise TypeError("only numeric sensitivities map to partials")
        return dict(self.numeric)


@dataclass(frozen=True)
class SensitivityMessage:
    """One agent's broadcast for one round: its decision plus its sensitivity."""

    round: int
    sender: AgentId
    decision: Decision
    sensitivity: Sensitivity
    protocol_version: str = PROTOCOL_VERSION

    def __post_init__(self):
        object.__setattr__(self, "decision", {str(k): float(v) for k, v in sorted(self.decision.items())})


class Rejection(str, enum.Enum):
    INCOMPATIBLE_VERSION = "incompatible-version"
    STALE = "stale"
    FUTURE = "future"
    UNKNOWN_SENDER = "unknown-sender"
    UNKNOWN_VARIABLE = "unknown-variable"
    MALFORMED = "malformed"


def validate_message(
    msg: SensitivityMessage,
    expected_round: int,
    known_agents: Iterable[AgentId],
    variables: Iterable[str] | None = None,
) -> Rejection | None:
    """Return ``None`` if ``msg`` is acceptable, otherwise why it is not.

    ``variables`` is the receiver's coordination-variable set; when given,
    numeric sensitivities may only name those variables.
    """
    if not versions_compatible(msg.protocol_version, PROTOCOL_VERSION):
        return Rejection.INCOMPATIBLE_VERSION
    if msg.round < expected_round:
        return Rejection.STALE
    if msg.round > expected_round:
        return Rejection.FUTURE
    if msg.sender not in set(known_agents):
        return Rejection.UNKNOWN_SENDER
    if not all(math.isfinite(v) for v in msg.decision.values()):
        return Rejection.MALFORMED
    sens = msg.sensitivity
    if sens.kind == NUMERIC:
        if not all(math.isfinite(v) for _, v in sens.numeric):
            return Rejection.MALFORMED
        if variables is not None:
            allowed = set(variables)
            if any(name not in allowed for name, _ in sens.numeric):
                return Rejection.UNKNOWN_VARIABLE
    return None


class AgentPolicy(Protocol):
    """Local cognition: maps coordination state and private knowledge to an action.

    ``inbox`` holds the neighbor decisions received this round, keyed by sender.
    Private constraints live on the policy object and are never transmitted.
    """

    def act(
        self, state: CoordinationState, observation: Any, inbox: Mapping[AgentId, Decision]
    ) -> tuple[Decision, Sensitivity]: ...


@dataclass
class Observation:
    """What an environment shows one agent at the start of a round.

    ``signals`` carries relative movements of environment quantities since the
    previous round (e.g. ``{"demand": 0.25}``); textual aggregation matches
    clause conditions against it.
    """

    values: dict[str, float] = field(default_factory=dict)
    signals: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, key: str) -> float:
        return self.values[key]

    def get(self, key: str, default: float | None = None) -> float | None:
        return self.values.get(key, default)
