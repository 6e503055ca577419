"""Global agreement step: coordinate-wise median over every agent's state."""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass

from .core import CoordinationState, Decision
from .errors import ConfigurationError

CONSENSUS_RULES = ("median_coordinate", "none")

# (agent index, decision, shared proposal or None) -> endorses?
Endorsement = Callable[[int, Decision, "CoordinationState | None"], bool]


@dataclass(frozen=True)
class ConsensusResult:
    shared_state: CoordinationState | None
    agreement_fraction: float


def _median(values: list[float]) -> float:
    values = sorted(values)
    n = len(values)
    mid = n // 2
    if n % 2:
        return values[mid]
    return (values[mid - 1] + values[mid]) / 2.0


def median_coordinatewise(states: Sequence[CoordinationState]) -> CoordinationState:
    if not states:
        raise ValueError("median of an empty state list")
    names = states[0].names
    for s in states[1:]:
        if s.names != names:
            raise ValueError(f"heterogeneous variable sets: {names} vs {s.names}")
    out = {}
    for name in names:
        column = [s[name] for s in states]
        if not all(math.isfinite(v) for v in column):
            raise ValueError(f"non-finite value for {name}")
        out[name] = _median(column)
    return CoordinationState(out, states[0].bounds)


def _participation(index: int, decision: Decision, shared: CoordinationState | None) -> bool:
    return bool(decision.get("participate", 0.0))


def run_consensus(
    states: Sequence[CoordinationState],
    decisions: Sequence[Decision],
    rule: str = "median_coordinate",
    endorse: Endorsement | None = None,
) -> ConsensusResult:
    """Reduce all agents' states and measure who endorses the outcome.

    Without a rule there is no shared state and ``endorse`` sees ``None``, so
    agreement reflects the raw decisions.
    """
    if rule not in CONSENSUS_RULES:
        raise ConfigurationError(f"unknown consensus rule {rule!r}; expected one of {list(CONSENSUS_RULES)}")
    if len(states) != len(decisions):
        raise ValueError(f"{len(states)} states but {len(decisions)} decisions")
    if not states:
        raise ValueError("consensus over zero agents")
    endorse = endorse or _participation
    shared = median_coordinatewise(states) if rule == "median_coordinate" else None
    votes = sum(1 for i, d in enumerate(decisions) if endorse(i, d, shared))
    return ConsensusResult(shared, votes / len(decisions))
