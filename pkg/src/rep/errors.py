"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class REPError(Exception):
    """Base class for all protocol, transport and harness errors."""


class ConfigurationError(REPError, ValueError):
    """Invalid client or experiment configuration.

    ``problems`` lists every issue found, so callers can report them all at once.
    """

    def __init__(self, problems: str | list[str]):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ProtocolError(REPError):
    """A round could not complete, e.g. a neighbor never delivered its message."""

    def __init__(self, message: str, sender: str | None = None):
        super().__init__(message)
        self.sender = sender


class IncompatiblePeerError(ProtocolError):
    """A peer speaks a protocol major version we cannot interoperate with."""


class TransportError(REPError):
    pass


class UnknownRecipientError(TransportError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its argument otherwise
        return str(self.args[0]) if self.args else ""


class WireFormatError(REPError, ValueError):
    """Undecodable bytes; ``offset`` is the byte position of the fault when known."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        where = f" (at byte {offset})" if offset is not None else ""
        super().__init__(f"{message}{where}")


class ClauseParseError(REPError, ValueError):
    """A sensitivity clause does not match the clause grammar.

    ``position`` is the character offset, ``token`` the 1-based token index and
    ``expected`` the set of token kinds that would have been accepted there.
    """

    def __init__(self, text: str, position: int, token: int, expected: frozenset[str]):
        self.text = text
        self.position = position
        self.token = token
        self.expected = expected
        want = ", ".join(sorted(expected))
        super().__init__(f"cannot parse clause {text!r}: token {token} at offset {position}, expected {want}")
