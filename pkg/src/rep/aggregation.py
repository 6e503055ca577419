"""Turning neighbor sensitivities into a gradient step on the coordination state.

Both updaters reduce their inputs to per-neighbor partials first and then
share one combination routine, which is what makes the textual and numeric
pathways produce bit-identical signals for equivalent inputs.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Literal, Protocol

from .clauses import TextualClause, parse_clause
from .core import NUMERIC, TEXTUAL, CoordinationState, Sensitivity, SensitivityMessage
from .errors import ClauseParseError, ConfigurationError

log = logging.getLogger(__name__)

UPDATER_KINDS = ("numerical_grad", "textual_grad", "none")


@dataclass(frozen=True)
class GradientSignal:
    deltas: dict[str, float]

    def __post_init__(self):
        bad = [k for k, v in self.deltas.items() if not math.isfinite(v)]
        if bad:
            raise ValueError(f"gradient signal has non-finite entries for {bad}")
        object.__setattr__(self, "deltas", {k: float(v) for k, v in sorted(self.deltas.items())})

    @classmethod
    def zero(cls, names: Iterable[str]) -> GradientSignal:
        return cls({n: 0.0 for n in names})

    def __getitem__(self, name: str) -> float:
        return self.deltas[name]

    def is_zero(self) -> bool:
        return all(v == 0.0 for v in self.deltas.values())


@dataclass(frozen=True)
class Effect:
    """Where a clause's effect lands: ``delta * scale`` is added to ``variable``.

    ``magnitude`` drops the sign of the clause delta, for partials that are
    stated as an amount ("order +15") but act as a damping pressure.
    """

    variable: str
    scale: float = 1.0
    magnitude: bool = False


@dataclass(frozen=True)
class UpdaterConfig:
    kind: Literal["numerical_grad", "textual_grad", "none"] = "numerical_grad"
    step_size: float = 0.3
    neighbor_weights: Literal["uniform", "degree"] = "uniform"
    # "ascent" for sensitivities that are gradients of a quantity to maximize
    sense: Literal["descent", "ascent"] = "descent"
    clamp: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    effects: Mapping[str, Effect] = field(default_factory=dict)

    def __post_init__(self):
        problems = []
        if self.kind not in UPDATER_KINDS:
            problems.append(f"unknown updater kind {self.kind!r}")
        if not (isinstance(self.step_size, (int, float)) and self.step_size > 0 and math.isfinite(self.step_size)):
            problems.append(f"step_size must be a positive finite number, got {self.step_size!r}")
        if self.neighbor_weights not in ("uniform", "degree"):
            problems.append(f"unknown neighbor weighting {self.neighbor_weights!r}")
        if self.sense not in ("descent", "ascent"):
            problems.append(f"unknown sense {self.sense!r}")
        if problems:
            raise ConfigurationError(problems)


def _weights(senders: Sequence[str], cfg: UpdaterConfig, degrees: Mapping[str, int] | None) -> list[float]:
    if cfg.neighbor_weights == "uniform":
        return [1.0] * len(senders)
    if degrees is None:
        raise ConfigurationError("degree weighting needs neighbor degrees")
    return [float(degrees[s]) for s in senders]


def combine(
    partials: Sequence[Mapping[str, float]],
    state: CoordinationState,
    cfg: UpdaterConfig,
    weights: Sequence[float] | None = None,
) -> GradientSignal:
    """Weighted per-variable average over the neighbors that expressed an opinion.

    A neighbor that omits a variable abstains on it instead of voting zero, so
    weights are renormalized per variable over contributors.
    """
    if weights is None:
        weights = [1.0] * len(partials)
    sign = -1.0 if cfg.sense == "ascent" else 1.0
    out: dict[str, float] = {}
    for name in state.names:
        terms, mass = [], []
        for w, p in zip(weights, partials):
            if name in p and w > 0:
                value = p[name]
                if not math.isfinite(value):
                    raise ValueError(f"non-finite sensitivity for {name}")
                terms.append(w * value)
                mass.append(w)
        out[name] = sign * math.fsum(terms) / math.fsum(mass) if mass else 0.0
    return GradientSignal(out)


def aggregate_numeric(
    sensitivities: Sequence[Sensitivity],
    state: CoordinationState,
    cfg: UpdaterConfig,
    weights: Sequence[float] | None = None,
) -> GradientSignal:
    partials = []
    for s in sensitivities:
        if s.kind != NUMERIC:
            raise TypeError("aggregate_numeric needs numeric sensitivities")
        partials.append({k: v for k, v in s.numeric if k in state})
    return combine(partials, state, cfg, weights)


class Synthesizer(Protocol):
    """Fallback for clauses outside the grammar; returns partials per variable."""

    def synthesize(self, clauses: Sequence[str], state: CoordinationState) -> dict[str, float]: ...


class DroppingSynthesizer:
    """Default stand-in for a language-model synthesizer: logs and discards."""

    def synthesize(self, clauses: Sequence[str], state: CoordinationState) -> dict[str, float]:
        for c in clauses:
            log.warning("dropping unparseable sensitivity clause %r", c)
        return {}


def clause_fires(clause: TextualClause, state: CoordinationState, signals: Mapping[str, float]) -> bool:
    """Whether a clause's condition holds for the receiver.

    Conditions on coordination variables are counterfactual partials and always
    hold. Environment conditions need a published relative movement in the
    stated direction, at least as large as any stated percentage.
    """
    if clause.condition_variable in state:
        return True
    move = signals.get(clause.condition_variable)
    if move is None or move == 0.0:
        return False
    if (move > 0) != (clause.condition_direction == "increase"):
        return False
    if clause.condition_magnitude is not None:
        return abs(move) * 100.0 >= clause.condition_magnitude - 1e-9
    return True


def _resolve(clause: TextualClause, state: CoordinationState, effects: Mapping[str, Effect]) -> tuple[str, float] | None:
    effect = effects.get(clause.effect_variable)
    if effect is None:
        if clause.effect_variable not in state:
            return None
        effect = Effect(clause.effect_variable)
    delta = abs(clause.effect_delta) if effect.magnitude else clause.effect_delta
    if clause.condition_variable in state and clause.condition_direction == "decrease":
        delta = -delta
    return effect.variable, delta * effect.scale


def clause_partials(
    clauses: Sequence[str],
    state: CoordinationState,
    cfg: UpdaterConfig,
    signals: Mapping[str, float],
    synthesizer: Synthesizer,
) -> dict[str, float]:
    """Per-variable mean delta over one neighbor's firing clauses."""
    sums: dict[str, list[float]] = {}
    unparsed = []
    for text in clauses:
        try:
            clause = parse_clause(text)
        except ClauseParseError:
            unparsed.append(text)
            continue
        if not clause_fires(clause, state, signals):
            continue
        resolved = _resolve(clause, state, cfg.effects)
        if resolved is None:
            log.warning("clause %r targets no coordination variable", text)
            continue
        sums.setdefault(resolved[0], []).append(resolved[1])
    out = {k: math.fsum(v) / len(v) for k, v in sums.items()}
    if unparsed:
        for k, v in synthesizer.synthesize(unparsed, state).items():
            if k in state and k not in out:
                out[k] = float(v)
    return out


def aggregate_textual(
    sensitivities: Sequence[Sensitivity],
    state: CoordinationState,
    cfg: UpdaterConfig,
    synthesizer: Synthesizer | None = None,
    signals: Mapping[str, float] | None = None,
    weights: Sequence[float] | None = None,
) -> GradientSignal:
    synthesizer = synthesizer or DroppingSynthesizer()
    signals = signals or {}
    partials = []
    for s in sensitivities:
        if s.kind != TEXTUAL:
            raise TypeError("aggregate_textual needs textual sensitivities")
        partials.append(clause_partials(s.textual, state, cfg, signals, synthesizer))
    return combine(partials, state, cfg, weights)


def apply_update(state: CoordinationState, g: GradientSignal, cfg: UpdaterConfig) -> CoordinationState:
    updates = {k: state[k] - cfg.step_size * v for k, v in g.deltas.items() if k in state}
    new = state.replace(updates)
    if cfg.clamp:
        clamped = {}
        for k, (lo, hi) in cfg.clamp.items():
            if k in new:
                clamped[k] = min(max(new[k], lo), hi)
        new = new.replace(clamped)
    return new


class Updater:
    """Client-side updater bound to a config; subclasses pick the modality."""

    def __init__(self, cfg: UpdaterConfig):
        self.cfg = cfg

    def signal(
        self,
        messages: Sequence[SensitivityMessage],
        state: CoordinationState,
        signals: Mapping[str, float],
        degrees: Mapping[str, int] | None = None,
    ) -> GradientSignal:
        raise NotImplementedError

    def update(self, messages, state, signals, degrees=None) -> tuple[CoordinationState, GradientSignal]:
        g = self.signal(messages, state, signals, degrees)
        return apply_update(state, g, self.cfg), g


class NumericalUpdater(Updater):
    def signal(self, messages, state, signals, degrees=None):
        weights = _weights([m.sender for m in messages], self.cfg, degrees)
        return aggregate_numeric([m.sensitivity for m in messages], state, self.cfg, weights)


class TextualUpdater(Updater):
    def __init__(self, cfg: UpdaterConfig, synthesizer: Synthesizer | None = None):
        super().__init__(cfg)
        self.synthesizer = synthesizer or DroppingSynthesizer()

    def signal(self, messages, state, signals, degrees=None):
        weights = _weights([m.sender for m in messages], self.cfg, degrees)
        return aggregate_textual(
            [m.sensitivity for m in messages], state, self.cfg, self.synthesizer, signals, weights
        )


class NullUpdater(Updater):
    """Never moves the state: the decision-only baseline."""

    def signal(self, messages, state, signals, degrees=None):
        return GradientSignal.zero(state.names)

    def update(self, messages, state, signals, degrees=None):
        return state, GradientSignal.zero(state.names)


def make_updater(
    handle: str | UpdaterConfig | Updater, synthesizer: Synthesizer | None = None, **overrides
) -> Updater:
    if isinstance(handle, Updater):
        return handle
    if isinstance(handle, str):
        if handle not in UPDATER_KINDS:
            raise ConfigurationError(f"unknown updater {handle!r}; expected one of {list(UPDATER_KINDS)}")
        cfg = UpdaterConfig(kind=handle, **overrides)  # type: ignore[arg-type]
    elif isinstance(handle, UpdaterConfig):
        cfg = handle
    else:
        raise ConfigurationError(f"unsupported updater handle {handle!r}")
    if cfg.kind == "numerical_grad":
        return NumericalUpdater(cfg)
    if cfg.kind == "textual_grad":
        return TextualUpdater(cfg, synthesizer)
    return NullUpdater(cfg)
