import math

import pytest

from rep import (
    PROTOCOL_VERSION,
    ConfigurationError,
    CoordinationState,
    NetworkTopology,
    Rejection,
    Sensitivity,
    SensitivityMessage,
    validate_message,
)
from rep.core import versions_compatible


def test_state_is_name_sorted_and_clamped():
    s = CoordinationState({"PRICE": 25.0, "B": 1.0, "A": 2.0}, {"PRICE": (10.0, 20.0)})
    assert s.names == ("A", "B", "PRICE")
    assert s["PRICE"] == 20.0
    assert s.replace({"PRICE": 5.0})["PRICE"] == 10.0


def test_state_rejects_empty_and_unknown_updates():
    with pytest.raises(ConfigurationError):
        CoordinationState({})
    with pytest.raises(KeyError):
        CoordinationState({"A": 1.0}).replace({"B": 2.0})


def test_sensitivity_payload_must_match_kind():
    with pytest.raises(ValueError):
        Sensitivity("numeric", textual=("x",))
    with pytest.raises(ValueError):
        Sensitivity("textual", numeric=(("A", 1.0),))
    with pytest.raises(ValueError):
        Sensitivity("vector", numeric=())
    s = Sensitivity.of_numeric({"TIME": 1.0, "PRICE": -0.8})
    assert s.numeric == (("PRICE", -0.8), ("TIME", 1.0))


def test_topology_neighbors_and_invariants():
    topo = NetworkTopology(["a", "b", "c", "d"], [("a", "b"), ("c", "b"), ("c", "d")])
    assert topo.neighbors("b") == {"a", "c"}
    assert [topo.degree(x) for x in "abcd"] == [1, 2, 2, 1]
    with pytest.raises(ValueError):
        NetworkTopology(["a"], [("a", "a")])
    with pytest.raises(ValueError):
        NetworkTopology(["a", "b"], [("a", "z")])
    with pytest.raises(ValueError):
        NetworkTopology(["a", "a"])


def _msg(round=2, sender="b", partials=None, version=PROTOCOL_VERSION, decision=None):
    return SensitivityMessage(
        round, sender, decision or {"order": 4.0}, Sensitivity.of_numeric(partials or {"PRICE": -0.8}), version
    )


def test_validate_accepts_well_formed_message():
    assert validate_message(_msg(), 2, {"a", "b"}, ["PRICE", "TIME"]) is None


@pytest.mark.parametrize(
    "msg, expected",
    [
        (_msg(round=1), Rejection.STALE),
        (_msg(round=3), Rejection.FUTURE),
        (_msg(sender="z"), Rejection.UNKNOWN_SENDER),
        (_msg(partials={"VOLUME": 1.0}), Rejection.UNKNOWN_VARIABLE),
        (_msg(version="2.0.0"), Rejection.INCOMPATIBLE_VERSION),
        (_msg(decision={"order": math.nan}), Rejection.MALFORMED),
        (_msg(partials={"PRICE": math.inf}), Rejection.MALFORMED),
    ],
)
def test_validate_rejections(msg, expected):
    assert validate_message(msg, 2, {"a", "b"}, ["PRICE", "TIME"]) is expected


def test_version_compatibility_is_major_only():
    assert versions_compatible("1.0.0", "1.7.3")
    assert not versions_compatible("1.0.0", "2.0.0")
    assert not versions_compatible("1.0", "1.0.0")
