"""Shared fishery: companies deploy boats over zones with logistic regrowth."""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, replace

import numpy as np

from ..aggregation import Effect, UpdaterConfig
from ..clauses import TextualClause, format_clause
from ..core import AgentId, CoordinationState, Observation, Sensitivity
from .base import PREFERENCES, DomainPolicy, Environment, stream

QUOTA = "SUSTAINABLE_QUOTA"

DEFAULTS = {
    "zones": 3,
    "carrying_capacity": 1000.0,
    "growth_rate": 0.3,
    "catchability": 0.02,
    "max_harvest_fraction": 0.5,
    "price": 1.0,
    "boat_cost": 8.0,
    "initial_population": [0.95, 1.05],  # fraction of capacity, uniform per zone
    "fleet_range": [3, 7],
    "initial_quota": 8.0,
    "quota_bounds": [0.0, 10.0],
    "elasticity": 2.0,  # quota boats per 10% drop in catch per boat
    "recovery_weight": 0.5,
    "cooperation": 1.0,
    "greed_margin": 1.5,
    "trigger": 0.1,
    "threshold": 0.35,
    "step_size": 0.3,
}


@dataclass(frozen=True)
class FishbanksState:
    population: tuple[float, ...]
    fleets: tuple[int, ...]
    profits: tuple[float, ...]
    season: int = 0

    def sustainability_index(self, capacity: float) -> float:
        return sum(self.population) / (capacity * len(self.population))


def allocate(company: int, boats: int, zones: int) -> list[int]:
    """Round-robin placement starting at zone ``company mod zones``."""
    out = [0] * zones
    for b in range(boats):
        out[(company + b) % zones] += 1
    return out


def fishbanks_step(
    state: FishbanksState, deployments: list[list[int]], params: Mapping
) -> tuple[FishbanksState, list[float]]:
    """One season; ``deployments[i][z]`` boats of company ``i`` in zone ``z``.

    Returns the new state and each company's catch.
    """
    zones = len(state.population)
    for i, alloc in enumerate(deployments):
        if len(alloc) != zones or min(alloc) < 0 or sum(alloc) > state.fleets[i]:
            raise ValueError(f"company {i} deployment {alloc} is invalid for fleet {state.fleets[i]}")
    K, r, q = params["carrying_capacity"], params["growth_rate"], params["catchability"]
    catches = [0.0] * len(deployments)
    population = []
    for z, P in enumerate(state.population):
        boats = sum(a[z] for a in deployments)
        catch = min(P * q * boats, P * params["max_harvest_fraction"])
        if boats:
            for i, a in enumerate(deployments):
                catches[i] += catch * a[z] / boats
        population.append(max(0.0, P + r * P * (1.0 - P / K) - catch))
    profits = tuple(
        p + params["price"] * c - params["boat_cost"] * sum(a)
        for p, c, a in zip(state.profits, catches, deployments)
    )
    return replace(state, population=tuple(population), profits=profits, season=state.season + 1), catches


class FishbanksPolicy(DomainPolicy):
    def __init__(self, agent_id: AgentId, emitter, params: Mapping, index: int, fleet: int):
        super().__init__(agent_id, emitter)
        self.params = params
        self.index = index
        self.fleet = fleet

    def decide(self, state, obs, inbox):
        p = self.params
        boats = obs["deployed"]
        if obs["neighbor_total"] > obs["neighbor_total_before"]:
            boats += 1
        revenue = obs["catch_per_boat"] * p["price"]
        if revenue < p["boat_cost"]:
            boats -= 1
        elif revenue > p["greed_margin"] * p["boat_cost"]:
            boats += 1
        boats = min(max(boats, 0), self.fleet)
        boats = min(boats, math.floor(state[QUOTA] + 1e-9))
        alloc = allocate(self.index, int(boats), int(p["zones"]))
        return {f"zone_{z}": float(b) for z, b in enumerate(alloc)}

    def quota_partial(self, obs: Observation) -> float:
        """Push on the quota: down when catches thin out or the fleet shrinks, up on recovery."""
        p = self.params
        move = obs.signals.get("catch_per_boat", 0.0)
        out = 0.0
        if move <= -p["trigger"]:
            out -= p["elasticity"] * (-move / 0.1)
        elif move >= p["trigger"]:
            out += p["recovery_weight"] * p["elasticity"] * (move / 0.1)
        if obs.signals.get("fleet_total", 0.0) < 0:
            out -= p["cooperation"]
        return out


def _clause(cond, direction, magnitude, effect, delta) -> str:
    return format_clause(TextualClause(cond, direction, magnitude, effect, delta))


def emit_numeric(policy: FishbanksPolicy, state, obs, decision) -> Sensitivity:
    return Sensitivity.of_numeric({QUOTA: policy.quota_partial(obs)})


def emit_textual(policy: FishbanksPolicy, state, obs, decision) -> Sensitivity:
    p = policy.params
    move = obs.signals.get("catch_per_boat", 0.0)
    pct = p["trigger"] * 100.0
    clauses = []
    if move <= -p["trigger"]:
        clauses.append(_clause("catch_per_boat", "decrease", pct, "quota", -p["elasticity"] * (-move / 0.1)))
    elif move >= p["trigger"]:
        gain = p["recovery_weight"] * p["elasticity"] * (move / 0.1)
        clauses.append(_clause("catch_per_boat", "increase", pct, "quota", gain))
    if obs.signals.get("fleet_total", 0.0) < 0:
        clauses.append(_clause("fleet_total", "decrease", None, "boats", -p["cooperation"]))
    return Sensitivity.of_text(clauses)


def emit_free_text(policy: FishbanksPolicy, state, obs, decision) -> Sensitivity:
    boats = int(sum(decision.values()))
    return Sensitivity.of_text([f"Sending {boats} boats; catches have been {obs['catch_per_boat']:.1f} per boat."])


class Fishbanks(Environment):
    def __init__(self, agents, topology, params, seed: int, rounds: int):
        super().__init__(agents, topology, {**DEFAULTS, **params})
        p = self.params
        rng = stream(seed, PREFERENCES)
        lo, hi = p["fleet_range"]
        fleets = tuple(int(f) for f in rng.integers(lo, hi + 1, len(agents)))
        zones, K = int(p["zones"]), p["carrying_capacity"]
        population = tuple(float(K * u) for u in rng.uniform(*p["initial_population"], zones))
        self.state = FishbanksState(population, fleets, tuple(0.0 for _ in agents))
        self.index = {a: i for i, a in enumerate(agents)}
        initial = [math.ceil(f / 2) for f in fleets]
        self.deployed = list(initial)
        self.history = [list(initial), list(initial)]  # deployments one and two seasons back
        start_cpb = p["catchability"] * float(np.mean(population))
        self.cpb = [start_cpb] * len(agents)
        self.cpb_before = list(self.cpb)

    def initial_state(self, agent):
        p = self.params
        return CoordinationState({QUOTA: p["initial_quota"]}, {QUOTA: tuple(p["quota_bounds"])})

    def updater_config(self, kind, step_size):
        return UpdaterConfig(
            kind=kind,
            step_size=step_size or self.params["step_size"],
            sense="ascent",
            effects={"quota": Effect(QUOTA), "boats": Effect(QUOTA)},
        )

    def make_policy(self, agent, protocol, modality):
        if protocol == "a2a":
            emitter = emit_free_text
        else:
            emitter = emit_textual if modality == "textual" else emit_numeric
        i = self.index[agent]
        return FishbanksPolicy(agent, emitter, self.params, i, self.state.fleets[i])

    def _neighbor_total(self, agent, deployments) -> float:
        return float(sum(deployments[self.index[b]] for b in self.topology.neighbors(agent)))

    def observe(self, agent):
        i = self.index[agent]
        last, before = self.history[-1], self.history[-2]
        total, total_before = float(sum(last)), float(sum(before))
        cpb, cpb_before = self.cpb[i], self.cpb_before[i]
        return Observation(
            values={
                "fleet": float(self.state.fleets[i]),
                "deployed": float(self.deployed[i]),
                "catch_per_boat": cpb,
                "neighbor_total": self._neighbor_total(agent, last),
                "neighbor_total_before": self._neighbor_total(agent, before),
                "fleet_total": total,
            },
            signals={
                "catch_per_boat": (cpb - cpb_before) / max(cpb_before, 1e-9),
                "fleet_total": (total - total_before) / max(total_before, 1.0),
            },
        )

    def step(self, decisions):
        zones = int(self.params["zones"])
        allocs = [[int(decisions[a][f"zone_{z}"]) for z in range(zones)] for a in self.agents]
        self.state, catches = fishbanks_step(self.state, allocs, self.params)
        boats = [sum(a) for a in allocs]
        self.cpb_before = list(self.cpb)
        self.cpb = [c / b if b else prev for c, b, prev in zip(catches, boats, self.cpb)]
        self.deployed = boats
        self.history = [self.history[-1], boats]
        mean_boats = float(np.mean(boats))
        K = self.params["carrying_capacity"]
        return {
            "population": math.fsum(self.state.population),
            "sustainability_index": self.state.sustainability_index(K),
            "profit": float(np.mean(self.state.profits)),
            "deployed": float(sum(boats)),
            "dispersion": float(np.std(boats)) / mean_boats if mean_boats > 0 else 0.0,
        }

    def summarize(self, metrics):
        threshold = self.params["threshold"]
        return {
            "seasons_above_threshold": float(sum(m["sustainability_index"] >= threshold for m in metrics)),
            "final_profit": metrics[-1]["profit"] if metrics else 0.0,
            "final_index": metrics[-1]["sustainability_index"] if metrics else None,
        }
