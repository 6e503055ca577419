"""JSON wire encoding for sensitivity messages.

Encoding is canonical (sorted keys, no whitespace) so the same message always
yields the same bytes; transcripts and golden fixtures rely on that.
"""

from __future__ import annotations

import json
import math
from typing import Any

from .core import NUMERIC, PROTOCOL_VERSION, TEXTUAL, Sensitivity, SensitivityMessage, versions_compatible
from .errors import WireFormatError

_MESSAGE_FIELDS = frozenset({"v", "round", "sender", "decision", "sensitivity"})
_SENSITIVITY_FIELDS = {NUMERIC: frozenset({"kind", "numeric"}), TEXTUAL: frozenset({"kind", "textual"})}


def to_wire_dict(msg: SensitivityMessage) -> dict[str, Any]:
    sens = msg.sensitivity
    if sens.kind == NUMERIC:
        payload: dict[str, Any] = {"kind": NUMERIC, "numeric": [[k, v] for k, v in sens.numeric]}
    else:
        payload = {"kind": TEXTUAL, "textual": list(sens.textual)}
    return {
        "v": msg.protocol_version,
        "round": msg.round,
        "sender": msg.sender,
        "decision": dict(msg.decision),
        "sensitivity": payload,
    }


def encode(msg: SensitivityMessage) -> bytes:
    obj = to_wire_dict(msg)
    try:
        text = json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)
    except ValueError as exc:
        raise WireFormatError(f"message is not encodable: {exc}") from None
    return text.encode("utf-8")


def _byte_offset(text: str, char_pos: int) -> int:
    return len(text[:char_pos].encode("utf-8"))


def _number(value: Any, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise WireFormatError(f"{where} must be a number, got {type(value).__name__}")
    out = float(value)
    if not math.isfinite(out):
        raise WireFormatError(f"{where} must be finite")
    return out


def decode(data: bytes, *, check_version: bool = True) -> SensitivityMessage:
    """Parse wire bytes.

    With ``check_version`` a peer of another major version is rejected here;
    the client passes ``False`` so it can raise a dedicated peer error instead.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise WireFormatError("invalid UTF-8", offset=exc.start) from None
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise WireFormatError(f"invalid JSON: {exc.msg}", offset=_byte_offset(text, exc.pos)) from None

    if not isinstance(obj, dict):
        raise WireFormatError("message must be a JSON object", offset=0)
    extra = set(obj) - _MESSAGE_FIELDS
    missing = _MESSAGE_FIELDS - set(obj)
    if extra:
        raise WireFormatError(f"unknown fields {sorted(extra)}")
    if missing:
        raise WireFormatError(f"missing fields {sorted(missing)}")

    version = obj["v"]
    if not isinstance(version, str):
        raise WireFormatError("'v' must be a string")
    if check_version and not versions_compatible(version, PROTOCOL_VERSION):
        raise WireFormatError(f"incompatible protocol version {version!r}")
    rnd = obj["round"]
    if isinstance(rnd, bool) or not isinstance(rnd, int) or rnd < 0:
        raise WireFormatError("'round' must be a non-negative integer")
    sender = obj["sender"]
    if not isinstance(sender, str) or not sender:
        raise WireFormatError("'sender' must be a non-empty string")
    decision = obj["decision"]
    if not isinstance(decision, dict):
        raise WireFormatError("'decision' must be an object")
    decision = {k: _number(v, f"decision[{k!r}]") for k, v in decision.items()}

    return SensitivityMessage(
        round=rnd,
        sender=sender,
        decision=decision,
        sensitivity=_decode_sensitivity(obj["sensitivity"]),
        protocol_version=version,
    )


def _reject_constant(name: str):
    raise WireFormatError(f"non-finite constant {name} is not allowed")


def _decode_sensitivity(raw: Any) -> Sensitivity:
    if not isinstance(raw, dict):
        raise WireFormatError("'sensitivity' must be an object")
    kind = raw.get("kind")
    if kind not in _SENSITIVITY_FIELDS:
        raise WireFormatError(f"unknown sensitivity kind {kind!r}")
    if set(raw) != _SENSITIVITY_FIELDS[kind]:
        raise WireFormatError(f"sensitivity of kind {kind} must have exactly fields {sorted(_SENSITIVITY_FIELDS[kind])}")
    if kind == NUMERIC:
        pairs = raw["numeric"]
        if not isinstance(pairs, list):
            raise WireFormatError("'numeric' must be a list")
        out = []
        for item in pairs:
            if not (isinstance(item, list) and len(item) == 2 and isinstance(item[0], str)):
                raise WireFormatError("numeric entries must be [name, value] pairs")
            out.append((item[0], _number(item[1], f"numeric[{item[0]!r}]")))
        try:
            return Sensitivity.of_numeric(out)
        except ValueError as exc:
            raise WireFormatError(str(exc)) from None
    clauses = raw["textual"]
    if not isinstance(clauses, list) or not all(isinstance(c, str) for c in clauses):
        raise WireFormatError("'textual' must be a list of strings")
    return Sensitivity.of_text(clauses)
