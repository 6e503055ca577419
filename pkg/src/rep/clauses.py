"""Grammar for textual sensitivity clauses.

    IF <var> (increase|decrease) [<num>%] THEN <var> (+|-)<num>

Keywords are case-insensitive and whitespace is free between tokens. The
canonical rendering uses upper-case IF/THEN, lower-case directions and single
spaces, so ``format_clause(parse_clause(s))`` normalizes any valid ``s``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Literal

from .errors import ClauseParseError

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_SIGN = {"+": 1.0, "-": -1.0, "−": -1.0}
_KEYWORDS = {"if", "then", "increase", "decrease"}


@dataclass(frozen=True)
class TextualClause:
    condition_variable: str
    condition_direction: Literal["increase", "decrease"]
    condition_magnitude: float | None
    effect_variable: str
    effect_delta: float


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.token = 0

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def fail(self, expected: set[str]) -> ClauseParseError:
        return ClauseParseError(self.text, self.pos, self.token, frozenset(expected))

    def match(self, pattern: re.Pattern[str]) -> str | None:
        m = pattern.match(self.text, self.pos)
        if not m:
            return None
        self.pos = m.end()
        return m.group(0)

    def keyword(self, *words: str) -> str:
        self.skip_ws()
        self.token += 1
        start = self.pos
        ident = self.match(_IDENT)
        if ident is None or ident.lower() not in words:
            self.pos = start
            raise self.fail({w.upper() if w in ("if", "then") else w for w in words})
        return ident.lower()

    def identifier(self) -> str:
        self.skip_ws()
        self.token += 1
        start = self.pos
        ident = self.match(_IDENT)
        if ident is None or ident.lower() in _KEYWORDS:
            self.pos = start
            raise self.fail({"variable"})
        return ident

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos == len(self.text)


def parse_clause(text: str) -> TextualClause:
    s = _Scanner(text)
    s.keyword("if")
    cond_var = s.identifier()
    direction = s.keyword("increase", "decrease")

    magnitude = None
    s.skip_ws()
    if s.pos < len(s.text) and (s.text[s.pos].isdigit() or s.text[s.pos] == "."):
        s.token += 1
        num = s.match(_NUMBER)
        if num is None:
            raise s.fail({"percentage"})
        s.skip_ws()
        if s.pos >= len(s.text) or s.text[s.pos] != "%":
            raise s.fail({"%"})
        s.pos += 1
        magnitude = float(num)

    s.keyword("then")
    effect_var = s.identifier()

    s.skip_ws()
    s.token += 1
    if s.pos >= len(s.text) or s.text[s.pos] not in _SIGN:
        raise s.fail({"+", "-"})
    sign = _SIGN[s.text[s.pos]]
    s.pos += 1
    s.skip_ws()
    num = s.match(_NUMBER)
    if num is None:
        raise s.fail({"number"})
    delta = math.copysign(float(num), sign)

    if not s.at_end():
        s.token += 1
        raise s.fail({"end of clause"})
    if not math.isfinite(delta) or (magnitude is not None and not math.isfinite(magnitude)):
        raise s.fail({"finite number"})
    return TextualClause(cond_var, direction, magnitude, effect_var, delta)  # type: ignore[arg-type]


def format_number(value: float) -> str:
    """Shortest round-tripping decimal for a non-negative finite float."""
    if not math.isfinite(value):
        raise ValueError(f"cannot format non-finite number {value!r}")
    text = repr(abs(float(value)))
    if text.endswith(".0"):
        text = text[:-2]
    return text


def format_clause(clause: TextualClause) -> str:
    parts = ["IF", clause.condition_variable, clause.condition_direction]
    if clause.condition_magnitude is not None:
        parts.append(format_number(clause.condition_magnitude) + "%")
    sign = "-" if math.copysign(1.0, clause.effect_delta) < 0 else "+"
    parts += ["THEN", clause.effect_variable, sign + format_number(clause.effect_delta)]
    return " ".join(parts)


def canonical(text: str) -> str:
    return format_clause(parse_clause(text))
