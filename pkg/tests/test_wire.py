import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rep import Sensitivity, SensitivityMessage, WireFormatError, decode, encode

names = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,8}", fullmatch=True)
finite = st.floats(allow_nan=False, allow_infinity=False)


@st.composite
def messages(draw):
    decision = draw(st.dictionaries(names, finite, max_size=4))
    if draw(st.booleans()):
        sens = Sensitivity.of_numeric(draw(st.dictionaries(names, finite, max_size=4)))
    else:
        sens = Sensitivity.of_text(draw(st.lists(st.text(max_size=30), max_size=4)))
    return SensitivityMessage(draw(st.integers(0, 10**6)), draw(names), decision, sens)


@given(messages())
def test_round_trip(msg):
    assert decode(encode(msg)) == msg


def test_numeric_round_trip_example():
    msg = SensitivityMessage(4, "agent_01", {"participate": 1.0}, Sensitivity.of_numeric({"PRICE": -0.8, "TIME": 0.25}))
    assert decode(encode(msg)) == msg


def test_golden_fixture_is_byte_exact(fixtures_dir):
    msg = SensitivityMessage(
        round=3,
        sender="retailer",
        decision={"order": 120.0},
        sensitivity=Sensitivity.of_text(
            ["IF demand increase 10% THEN order +15", "IF upstream_capacity increase THEN order -5"]
        ),
    )
    golden = (fixtures_dir / "beer_example_message.json").read_bytes()
    assert encode(msg) == golden
    assert decode(golden) == msg


def test_truncated_bytes_report_offset():
    data = encode(SensitivityMessage(0, "a", {"x": 1.0}, Sensitivity.of_numeric({})))
    with pytest.raises(WireFormatError) as err:
        decode(data[:-5])
    assert err.value.offset is not None and 0 < err.value.offset <= len(data)


def test_offset_counts_bytes_not_characters():
    data = '{"sender":"é", oops}'.encode()
    with pytest.raises(WireFormatError) as err:
        decode(data)
    assert err.value.offset == data.index(b"oops")


def test_invalid_utf8():
    with pytest.raises(WireFormatError) as err:
        decode(b'{"v":"\xff"}')
    assert err.value.offset == 6


def _wire(**changes):
    obj = {"v": "1.0.0", "round": 0, "sender": "a", "decision": {}, "sensitivity": {"kind": "numeric", "numeric": []}}
    obj.update(changes)
    return json.dumps(obj).encode()


@pytest.mark.parametrize(
    "data",
    [
        _wire(extra=1),
        _wire(v="2.0.0"),
        _wire(round=-1),
        _wire(round=1.5),
        _wire(sender=""),
        _wire(decision={"x": "1"}),
        _wire(sensitivity={"kind": "numeric", "numeric": [], "textual": []}),
        _wire(sensitivity={"kind": "numeric", "numeric": [["A"]]}),
        _wire(sensitivity={"kind": "textual", "textual": [1]}),
        _wire(sensitivity={"kind": "vector"}),
        b'{"v":"1.0.0","round":0,"sender":"a","decision":{"x":NaN},"sensitivity":{"kind":"numeric","numeric":[]}}',
        b"[]",
    ],
)
def test_rejects_malformed(data):
    with pytest.raises(WireFormatError):
        decode(data)


def test_field_order_is_irrelevant():
    data = b'{"sensitivity":{"numeric":[["A",1]],"kind":"numeric"},"sender":"a","round":2,"decision":{"q":3},"v":"1.2.0"}'
    msg = decode(data)
    assert msg.round == 2 and msg.decision == {"q": 3.0} and msg.sensitivity.as_dict() == {"A": 1.0}


def test_other_major_version_passes_when_unchecked():
    assert decode(_wire(v="2.0.0"), check_version=False).protocol_version == "2.0.0"
