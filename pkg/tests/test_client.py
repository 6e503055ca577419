import json
import logging
import threading

import pytest

from rep import (
    ConfigurationError,
    CoordinationState,
    IncompatiblePeerError,
    InProcessBus,
    ProtocolError,
    Sensitivity,
    SensitivityMessage,
    configure,
)
from rep.domains import build_environment
from rep.domains.topology import chain

from helpers import ScriptedPolicy

BEER_STATE = {"TARGET_INVENTORY": 12.0, "ORDER_ADJUSTMENT_FACTOR": 1.0}


def chain_clients(n=4, partials=None, bus=None, consensus="none"):
    bus = bus or InProcessBus()
    agents = [f"s{i}" for i in range(n)]
    topo = chain(agents)
    policies = [ScriptedPolicy(a, partials or {"ORDER_ADJUSTMENT_FACTOR": 0.1 * (i + 1)}) for i, a in enumerate(agents)]
    clients = [
        configure(p, bus, "numerical_grad", consensus, CoordinationState(BEER_STATE), topo.neighbors(p.agent_id))
        for p in policies
    ]
    return bus, clients, policies


def test_configure_beer_client_and_schema():
    env = build_environment("beer", 4)
    policy = env.make_policy("retailer", "rep", "numeric")
    bus = InProcessBus()
    bus.subscribe("wholesaler")
    client = configure(policy, bus, "numerical_grad", "none", BEER_STATE, {"wholesaler"})
    assert client.round == 0 and len(bus.log) == 0
    decision, state = client.run_round(env.observe("retailer"))
    assert client.round == 1
    (entry,) = bus.log.entries
    wire = json.loads(entry.payload)
    assert set(wire) == {"v", "round", "sender", "decision", "sensitivity"}
    assert wire["round"] == 0 and wire["sender"] == "retailer" and set(wire["decision"]) == {"order"}
    assert wire["sensitivity"]["kind"] == "numeric"
    assert {n for n, _ in wire["sensitivity"]["numeric"]} <= set(BEER_STATE)


def test_configure_movie_client_reaches_three_inboxes():
    env = build_environment("movie", 20)
    policy = env.make_policy("agent_00", "rep", "textual")
    bus = InProcessBus()
    neighbors = {"agent_01", "agent_02", "agent_03"}
    for n in neighbors:
        bus.subscribe(n)
    client = configure(policy, bus, "textual_grad", "median_coordinate", {"TIME": 19.0, "PRICE": 12.0}, neighbors)
    client.run_round(env.observe("agent_00"))
    assert sorted(e.recipient for e in bus.log.entries) == sorted(neighbors)


def test_configure_rejects_empty_state_and_unknown_handles():
    with pytest.raises(ConfigurationError):
        configure(ScriptedPolicy("a"), InProcessBus(), "numerical_grad", "none", {}, set())
    with pytest.raises(ConfigurationError) as err:
        configure(ScriptedPolicy("a"), "carrier-pigeon", "gradient_magic", "mean", BEER_STATE, set())
    assert len(err.value.problems) == 3


def test_inbox_sizes_follow_degree():
    _, clients, policies = chain_clients()
    for _ in range(2):
        for c in clients:
            c.run_round()
    assert [len(p.seen_inboxes[0]) for p in policies] == [0, 0, 0, 0]
    assert [len(p.seen_inboxes[1]) for p in policies] == [1, 2, 2, 1]


def test_round_monotonicity_and_conservation():
    bus, clients, _ = chain_clients()
    for t in range(5):
        for c in clients:
            assert c.round == t
            c.run_round()
    assert all(c.round == 5 for c in clients)
    assert [bus.log.count(t) for t in range(5)] == [6] * 5  # 2|E| per round


def test_decision_uses_pre_update_state():
    _, clients, policies = chain_clients()
    history = []
    for _ in range(3):
        for c in clients:
            decision, state = c.run_round()
            history.append(state)
    p = policies[1]
    # the state handed to the policy is the one returned, and round-t messages move it only at t+1
    assert p.seen_states[0] == CoordinationState(BEER_STATE)
    assert p.seen_states[1]["ORDER_ADJUSTMENT_FACTOR"] == pytest.approx(1.0 - 0.3 * (0.1 + 0.3) / 2)
    assert history[1] == p.seen_states[0] and history[5] == p.seen_states[1]


def test_isolated_agent_keeps_state():
    bus = InProcessBus()
    p = ScriptedPolicy("solo", {"ORDER_ADJUSTMENT_FACTOR": 5.0})
    c = configure(p, bus, "numerical_grad", "none", BEER_STATE, set())
    for _ in range(3):
        decision, state = c.run_round()
        assert decision == {"order": 1.0} and state == CoordinationState(BEER_STATE)


def test_identical_runs_are_bit_identical():
    def run():
        bus, clients, _ = chain_clients()
        out = [c.run_round() for _ in range(4) for c in clients]
        return out, bus.log.digest()

    assert run() == run()


def test_missing_neighbor_raises_with_sender():
    _, clients, _ = chain_clients()
    for c in clients[:3]:
        c.run_round()  # s3 stays silent in round 0
    with pytest.raises(ProtocolError) as err:
        clients[2].run_round()
    assert err.value.sender == "s3"


def test_incompatible_peer():
    bus, clients, _ = chain_clients(n=2)
    clients[0].run_round()
    bus.drain_inbox("s1", 0)
    bus.multicast("s0", ["s1"], SensitivityMessage(0, "s0", {"order": 1.0}, Sensitivity.of_numeric({}), "2.0.0"))
    clients[1].run_round()
    with pytest.raises(IncompatiblePeerError) as err:
        clients[1].run_round()
    assert err.value.sender == "s0"


def test_duplicates_and_strangers_are_dropped(caplog):
    bus, clients, policies = chain_clients(n=2)
    bus.subscribe("stranger")
    for c in clients:
        c.run_round()
    bus.multicast("s0", ["s1"], clients[0].last_message)
    bus.multicast("stranger", ["s1"], SensitivityMessage(0, "stranger", {}, Sensitivity.of_numeric({})))
    with caplog.at_level(logging.WARNING):
        clients[1].run_round()
    assert list(policies[1].seen_inboxes[1]) == ["s0"]
    text = caplog.text
    assert "duplicate" in text and "unknown-sender" in text


def test_shared_proposal_is_adopted_before_update():
    bus = InProcessBus()
    p = ScriptedPolicy("a")
    c = configure(p, bus, "numerical_grad", "median_coordinate", BEER_STATE, set())
    c.run_round()
    shared = {"TARGET_INVENTORY": 20.0, "ORDER_ADJUSTMENT_FACTOR": 0.5}
    bus.multicast("consensus", ["a"], SensitivityMessage(0, "consensus", shared, Sensitivity.of_numeric({})))
    _, state = c.run_round()
    assert state.as_dict() == shared
    with pytest.raises(ProtocolError) as err:
        c.run_round()  # no shared proposal for round 1
    assert err.value.sender == "consensus"


def test_threaded_clients_match_sequential():
    def sequential():
        _, clients, _ = chain_clients(n=5)
        return [[c.run_round()[1] for c in clients] for _ in range(6)]

    bus = InProcessBus()
    agents = [f"s{i}" for i in range(5)]
    topo = chain(agents)
    clients = [
        configure(ScriptedPolicy(a, {"ORDER_ADJUSTMENT_FACTOR": 0.1 * (i + 1)}), bus, "numerical_grad", "none",
                  BEER_STATE, topo.neighbors(a), barrier_timeout=10.0)
        for i, a in enumerate(agents)
    ]
    results = {a: [] for a in agents}

    def drive(c):
        for _ in range(6):
            results[c.agent_id].append(c.run_round()[1])

    threads = [threading.Thread(target=drive, args=(c,)) for c in clients]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    threaded = [[results[a][r] for a in agents] for r in range(6)]
    assert threaded == sequential()
