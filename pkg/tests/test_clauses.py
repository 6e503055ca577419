import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rep import ClauseParseError, TextualClause, format_clause, parse_clause
from rep.clauses import canonical

KEYWORDS = {"if", "then", "increase", "decrease"}
variables = st.from_regex(r"[A-Za-z_][A-Za-z0-9_]{0,12}", fullmatch=True).filter(lambda v: v.lower() not in KEYWORDS)
magnitudes = st.none() | st.floats(0, 1e6, allow_nan=False, allow_infinity=False)
deltas = st.floats(-1e9, 1e9, allow_nan=False, allow_infinity=False)
clauses = st.builds(TextualClause, variables, st.sampled_from(["increase", "decrease"]), magnitudes, variables, deltas)


def test_worked_examples():
    assert parse_clause("IF demand increase 10% THEN order +15") == TextualClause("demand", "increase", 10.0, "order", 15.0)
    assert parse_clause("IF upstream_capacity increase THEN order -5") == TextualClause(
        "upstream_capacity", "increase", None, "order", -5.0
    )


def test_keywords_case_insensitive_and_whitespace_tolerant():
    c = parse_clause("  if demand   DECREASE 12.5 %  then order − 3.25 ")
    assert c == TextualClause("demand", "decrease", 12.5, "order", -3.25)
    assert format_clause(c) == "IF demand decrease 12.5% THEN order -3.25"


def test_hello_world_fails_at_first_token():
    with pytest.raises(ClauseParseError) as err:
        parse_clause("hello world")
    assert err.value.token == 1 and err.value.position == 0
    assert "IF" in err.value.expected


@pytest.mark.parametrize(
    "text, token, expected",
    [
        ("IF", 2, "variable"),
        ("IF demand grows THEN order +1", 3, "increase"),
        ("IF demand increase 10 THEN order +1", 4, "%"),
        ("IF demand increase ELSE order +1", 4, "THEN"),
        ("IF demand increase THEN order 15", 6, "+"),
        ("IF demand increase THEN order +", 6, "number"),
        ("IF demand increase THEN order +1 please", 7, "end of clause"),
        ("IF then increase THEN order +1", 2, "variable"),
    ],
)
def test_parse_errors_carry_position_and_expectations(text, token, expected):
    with pytest.raises(ClauseParseError) as err:
        parse_clause(text)
    assert err.value.token == token
    assert expected in err.value.expected
    assert 0 <= err.value.position <= len(text)


def test_negative_zero_and_exponents_survive():
    c = parse_clause("IF A increase THEN B -0")
    assert math.copysign(1.0, c.effect_delta) < 0
    assert format_clause(c) == "IF A increase THEN B -0"
    assert parse_clause("IF A increase THEN B +1e-07").effect_delta == 1e-07
    assert format_clause(TextualClause("A", "increase", None, "B", 1e22)) == "IF A increase THEN B +1e+22"


def test_non_finite_cannot_be_formatted():
    with pytest.raises(ValueError):
        format_clause(TextualClause("A", "increase", None, "B", math.inf))


@settings(max_examples=1000)
@given(clauses)
def test_parse_inverts_format(clause):
    assert parse_clause(format_clause(clause)) == clause


def _noisy(clause, draw):
    ws = lambda: draw(st.sampled_from([" ", "  ", "\t", " \n "]))
    case = lambda w: draw(st.sampled_from([w.lower(), w.upper(), w.capitalize()]))
    text = ws() + case("if") + ws() + clause.condition_variable + ws() + case(clause.condition_direction)
    if clause.condition_magnitude is not None:
        text += ws() + repr(clause.condition_magnitude) + draw(st.sampled_from(["%", " %"]))
    sign = "-" if math.copysign(1.0, clause.effect_delta) < 0 else draw(st.sampled_from(["+", "+ "]))
    return text + ws() + case("then") + ws() + clause.effect_variable + ws() + sign + repr(abs(clause.effect_delta)) + ws()


@settings(max_examples=1000)
@given(clauses, st.data())
def test_format_of_parse_is_canonical(clause, data):
    text = _noisy(clause, data.draw)
    assert format_clause(parse_clause(text)) == canonical(format_clause(clause)) == format_clause(clause)
