"""In-process publish/subscribe bus with per-agent inbox topics.

Messages travel as encoded bytes so that byte accounting and transcripts see
exactly what a networked transport would carry.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import threading
import time
from collections import defaultdict
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .core import AgentId, SensitivityMessage
from .errors import ConfigurationError, UnknownRecipientError
from .wire import decode, encode

log = logging.getLogger(__name__)

CONSENSUS_TOPIC = "consensus"


def inbox_topic(agent: AgentId) -> str:
    return f"inbox/{agent}"


@dataclass(frozen=True)
class Delivery:
    round: int
    sender: AgentId
    recipient: str
    payload: bytes

    @property
    def size(self) -> int:
        return len(self.payload)


class DeliveryLog:
    """Append-only record of every delivery."""

    def __init__(self):
        self._entries: list[Delivery] = []
        self._lock = threading.Lock()

    def append(self, entry: Delivery) -> None:
        with self._lock:
            self._entries.append(entry)

    @property
    def entries(self) -> list[Delivery]:
        with self._lock:
            return list(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def count(self, round: int | None = None) -> int:
        return sum(1 for e in self.entries if round is None or e.round == round)

    def total_bytes(self) -> int:
        return sum(e.size for e in self.entries)

    def rows(self) -> list[tuple[int, str, str, int]]:
        return [(e.round, e.sender, e.recipient, e.size) for e in self.entries]

    def digest(self) -> str:
        """SHA-256 over the sorted transcript, independent of delivery interleaving."""
        h = hashlib.sha256()
        for e in sorted(self.entries, key=lambda e: (e.round, e.sender, e.recipient, e.payload)):
            h.update(f"{e.round}\x1f{e.sender}\x1f{e.recipient}\x1f{len(e.payload)}\x1e".encode())
            h.update(e.payload)
        return h.hexdigest()

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "sender", "recipient", "bytes"])
            writer.writerows(self.rows())


class Transport(Protocol):
    """The seam where a networked transport would plug in."""

    log: DeliveryLog

    def subscribe(self, agent: AgentId) -> None: ...

    def multicast(self, sender: AgentId, recipients: Iterable[AgentId], msg: SensitivityMessage) -> int: ...

    def publish(self, topic: str, msg: SensitivityMessage) -> int: ...

    def drain_inbox(
        self, agent: AgentId, round: int, expected: int | None = None, timeout: float | None = None
    ) -> list[SensitivityMessage]: ...

    def drain_topic(self, topic: str, round: int) -> list[SensitivityMessage]: ...


class InProcessBus:
    """Thread-safe bus: concurrent multicasts from distinct senders and drains by
    distinct agents are allowed; each topic queue is guarded by one lock."""

    def __init__(self):
        self.log = DeliveryLog()
        self._lock = threading.Lock()
        self._arrived = threading.Condition(self._lock)
        # topic -> round -> list of (sender, payload)
        self._queues: dict[str, dict[int, list[tuple[str, bytes]]]] = {CONSENSUS_TOPIC: defaultdict(list)}

    def subscribe(self, agent: AgentId) -> None:
        with self._lock:
            self._queues.setdefault(inbox_topic(agent), defaultdict(list))

    @property
    def agents(self) -> list[AgentId]:
        with self._lock:
            return sorted(t[len("inbox/"):] for t in self._queues if t.startswith("inbox/"))

    def _deliver(self, topics: list[str], msg: SensitivityMessage, recipients: list[str]) -> int:
        payload = encode(msg)
        with self._arrived:
            for topic, who in zip(topics, recipients):
                self._queues[topic][msg.round].append((msg.sender, payload))
                self.log.append(Delivery(msg.round, msg.sender, who, payload))
            self._arrived.notify_all()
        return len(topics)

    def multicast(self, sender: AgentId, recipients: Iterable[AgentId], msg: SensitivityMessage) -> int:
        if msg.sender != sender:
            raise ValueError(f"message sender {msg.sender!r} does not match {sender!r}")
        targets = sorted(set(recipients))
        with self._lock:
            unknown = [r for r in targets if inbox_topic(r) not in self._queues]
        if unknown:
            raise UnknownRecipientError(f"unknown recipients: {unknown}")
        return self._deliver([inbox_topic(r) for r in targets], msg, targets)

    def publish(self, topic: str, msg: SensitivityMessage) -> int:
        with self._lock:
            if topic not in self._queues:
                raise UnknownRecipientError(f"unknown topic {topic!r}")
        return self._deliver([topic], msg, [topic])

    def _take(self, topic: str, round: int) -> list[SensitivityMessage]:
        queue = self._queues[topic]
        raw = queue.pop(round, [])
        for stale in [r for r in queue if r < round]:
            log.warning("discarding %d stale round-%d messages on %s", len(queue[stale]), stale, topic)
            del queue[stale]
        raw.sort()
        return [decode(p, check_version=False) for _, p in raw]

    def drain_inbox(
        self, agent: AgentId, round: int, expected: int | None = None, timeout: float | None = None
    ) -> list[SensitivityMessage]:
        """Consume ``agent``'s round-``round`` messages, sorted by sender.

        With ``expected`` and a positive ``timeout`` this blocks until that many
        messages have arrived or the timeout lapses, acting as the round barrier
        when clients run in separate threads.
        """
        topic = inbox_topic(agent)
        with self._arrived:
            if topic not in self._queues:
                raise UnknownRecipientError(f"agent {agent!r} is not subscribed")
            if expected is not None and timeout:
                deadline = time.monotonic() + timeout
                while len(self._queues[topic].get(round, ())) < expected:
                    remaining = deadline - time.monotonic()
                    if remaining <= 0 or not self._arrived.wait(remaining):
                        break
            return self._take(topic, round)

    def drain_topic(self, topic: str, round: int) -> list[SensitivityMessage]:
        with self._lock:
            if topic not in self._queues:
                raise UnknownRecipientError(f"unknown topic {topic!r}")
            return self._take(topic, round)


_REGISTRY: dict[str, InProcessBus] = {}


def get_transport(name: str) -> InProcessBus:
    """Named shared buses; clients configured with the same name talk to each other."""
    if name != "inproc" and not name.startswith("inproc:"):
        raise ConfigurationError(f"unknown transport {name!r}; expected 'inproc' or 'inproc:<name>'")
    return _REGISTRY.setdefault(name, InProcessBus())
