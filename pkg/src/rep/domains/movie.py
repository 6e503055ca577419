"""Group outing: agents with private price and showtime preferences agree on a
shared (TIME, PRICE) proposal and vote on whether to join."""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass

from ..aggregation import UpdaterConfig
from ..clauses import TextualClause, format_clause
from ..core import AgentId, CoordinationState, Decision, Observation, Sensitivity
from ..metrics import rounds_to_convergence
from .base import PREFERENCES, DomainPolicy, Environment, stream

TIME = "TIME"
PRICE = "PRICE"
DAY = 24.0

DEFAULTS = {
    "initial_time": 19.0,
    "initial_price": 12.0,
    "price_mean": 8.0,
    "price_sd": 1.0,
    "time_mean": 20.5,
    "time_sd": 0.7,
    "price_weight": [0.3, 1.0],
    "time_weight": [0.2, 0.6],
    "tolerance": [0.5, 1.5],
    "initial_participation": 0.4,
    "salience": 0.7,
    "step_size": 0.7,
    "price_bounds": [0.0, 40.0],
}


@dataclass(frozen=True)
class MoviePreference:
    ideal_price: float
    ideal_time: float
    price_weight: float
    time_weight: float
    min_utility: float

    def __post_init__(self):
        if self.price_weight < 0 or self.time_weight < 0 or self.price_weight + self.time_weight <= 0:
            raise ValueError("preference weights must be non-negative and not both zero")


def circular_distance(a: float, b: float) -> float:
    d = abs(a - b) % DAY
    return min(d, DAY - d)


def circular_slope(theta: float, ideal: float) -> float:
    """Derivative of the circular distance in ``theta``; 0 at both kinks."""
    d = (theta - ideal) % DAY
    if d == 0.0 or d == DAY / 2:
        return 0.0
    return 1.0 if d < DAY / 2 else -1.0


def _sign(x: float) -> float:
    return 0.0 if x == 0 else math.copysign(1.0, x)


def utility(pref: MoviePreference, time: float, price: float) -> float:
    return -pref.price_weight * abs(price - pref.ideal_price) - pref.time_weight * circular_distance(time, pref.ideal_time)


def movie_utility(pref: MoviePreference, state: CoordinationState) -> tuple[float, int, Sensitivity]:
    """Utility, participation vote and utility gradient at ``state``."""
    u = utility(pref, state[TIME], state[PRICE])
    grad = {
        PRICE: -pref.price_weight * _sign(state[PRICE] - pref.ideal_price),
        TIME: -pref.time_weight * circular_slope(state[TIME], pref.ideal_time),
    }
    return u, int(u >= pref.min_utility), Sensitivity.of_numeric(grad)


def salient_partials(pref: MoviePreference, state: CoordinationState, salience: float) -> dict[str, float]:
    """Gradient entries for the variables that cost this agent the most utility.

    A variable is reported when its utility loss is within ``salience`` of the
    largest loss; an agent already at its ideal reports nothing.
    """
    losses = {
        PRICE: pref.price_weight * abs(state[PRICE] - pref.ideal_price),
        TIME: pref.time_weight * circular_distance(state[TIME], pref.ideal_time),
    }
    top = max(losses.values())
    if top <= 0:
        return {}
    grad = movie_utility(pref, state)[2].as_dict()
    return {v: grad[v] for v, loss in losses.items() if loss > 0 and loss >= salience * top}


def sample_preferences(n: int, params: Mapping, seed: int, initial: tuple[float, float]) -> list[MoviePreference]:
    """Draw preferences, then set thresholds so the chosen share joins at ``initial``.

    Thresholds are ``c * tolerance`` with one constant ``c``; an agent joins iff
    its utility-to-tolerance ratio reaches ``c``, so ``c`` is the k-th largest ratio.
    """
    rng = stream(seed, PREFERENCES)
    price = rng.normal(params["price_mean"], params["price_sd"], n)
    time = rng.normal(params["time_mean"], params["time_sd"], n) % DAY
    wp = rng.uniform(*params["price_weight"], n)
    wt = rng.uniform(*params["time_weight"], n)
    tol = rng.uniform(*params["tolerance"], n)
    draft = [MoviePreference(float(price[i]), float(time[i]), float(wp[i]), float(wt[i]), 0.0) for i in range(n)]
    ratios = sorted((utility(p, *initial) / tol[i] for i, p in enumerate(draft)), reverse=True)
    k = max(1, math.ceil(params["initial_participation"] * n))
    c = ratios[k - 1]
    return [
        MoviePreference(p.ideal_price, p.ideal_time, p.price_weight, p.time_weight, float(c * tol[i]))
        for i, p in enumerate(draft)
    ]


class MoviePolicy(DomainPolicy):
    def __init__(self, agent_id: AgentId, emitter, pref: MoviePreference, params: Mapping):
        super().__init__(agent_id, emitter)
        self.pref = pref
        self.params = params

    def decide(self, state, obs, inbox):
        return {"participate": float(movie_utility(self.pref, state)[1])}


def emit_numeric(policy: MoviePolicy, state, obs, decision) -> Sensitivity:
    return Sensitivity.of_numeric(salient_partials(policy.pref, state, policy.params["salience"]))


def emit_textual(policy: MoviePolicy, state, obs, decision) -> Sensitivity:
    partials = salient_partials(policy.pref, state, policy.params["salience"])
    return Sensitivity.of_text(
        format_clause(TextualClause(v, "increase", None, v, d)) for v, d in sorted(partials.items())
    )


def emit_free_text(policy: MoviePolicy, state, obs, decision) -> Sensitivity:
    verdict = "I'm in" if decision["participate"] else "I'll pass"
    return Sensitivity.of_text([f"{verdict} for {state[TIME]:.1f}h at ${state[PRICE]:.2f}."])


class MovieNight(Environment):
    tracks_agreement = True
    default_consensus = "median_coordinate"

    def __init__(self, agents, topology, params, seed: int, rounds: int):
        super().__init__(agents, topology, {**DEFAULTS, **params})
        p = self.params
        self.initial = (float(p["initial_time"]), float(p["initial_price"]))
        self.prefs = sample_preferences(len(agents), p, seed, self.initial)
        self.index = {a: i for i, a in enumerate(agents)}
        self.shared: CoordinationState | None = None

    def initial_state(self, agent):
        time, price = self.initial
        return CoordinationState(
            {TIME: time, PRICE: price}, {TIME: (0.0, DAY), PRICE: tuple(self.params["price_bounds"])}
        )

    def updater_config(self, kind, step_size):
        return UpdaterConfig(kind=kind, step_size=step_size or self.params["step_size"], sense="ascent")

    def make_policy(self, agent, protocol, modality):
        if protocol == "a2a":
            emitter = emit_free_text
        else:
            emitter = emit_textual if modality == "textual" else emit_numeric
        return MoviePolicy(agent, emitter, self.prefs[self.index[agent]], self.params)

    def observe(self, agent):
        return Observation()

    def endorse(self, index: int, decision: Decision, shared: CoordinationState | None) -> bool:
        if shared is None:
            return bool(decision["participate"])
        return bool(movie_utility(self.prefs[index], shared)[1])

    def step(self, decisions):
        votes = [decisions[a]["participate"] for a in self.agents]
        return {"participation": sum(votes) / len(votes)}

    def summarize(self, metrics):
        fractions = [m["consensus_fraction"] for m in metrics]
        threshold = self.params.get("convergence_threshold", 0.70)
        return {
            "rounds_to_convergence": rounds_to_convergence(fractions, threshold),
            "max_consensus": max(fractions) if fractions else None,
            "final_consensus": fractions[-1] if fractions else None,
        }
