"""Sensitivity-sharing coordination protocol and benchmark simulator."""

from .aggregation import (
    Effect,
    GradientSignal,
    UpdaterConfig,
    aggregate_numeric,
    aggregate_textual,
    apply_update,
)
from .clauses import TextualClause, format_clause, parse_clause
from .client import REPClient, configure
from .consensus import ConsensusResult, median_coordinatewise, run_consensus
from .core import (
    PROTOCOL_VERSION,
    CoordinationState,
    NetworkTopology,
    Observation,
    Rejection,
    Sensitivity,
    SensitivityMessage,
    validate_message,
)
from .errors import (
    ClauseParseError,
    ConfigurationError,
    IncompatiblePeerError,
    ProtocolError,
    REPError,
    TransportError,
    UnknownRecipientError,
    WireFormatError,
)
from .transport import DeliveryLog, InProcessBus
from .wire import decode, encode

__version__ = "0.1.0"

__all__ = [
    "PROTOCOL_VERSION",
    "ClauseParseError",
    "ConfigurationError",
    "ConsensusResult",
    "CoordinationState",
    "DeliveryLog",
    "Effect",
    "GradientSignal",
    "InProcessBus",
    "IncompatiblePeerError",
    "NetworkTopology",
    "Observation",
    "ProtocolError",
    "REPClient",
    "REPError",
    "Rejection",
    "Sensitivity",
    "SensitivityMessage",
    "TextualClause",
    "TransportError",
    "UnknownRecipientError",
    "UpdaterConfig",
    "WireFormatError",
    "aggregate_numeric",
    "aggregate_textual",
    "apply_update",
    "configure",
    "decode",
    "encode",
    "format_clause",
    "median_coordinatewise",
    "parse_clause",
    "run_consensus",
    "validate_message",
]
