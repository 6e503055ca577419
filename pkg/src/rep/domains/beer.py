"""Serial supply chain with shipping and ordering delays.

Each round a stage sees its own incoming order, stock and supply line, places
an order upstream, and the chain advances: shipments land, orders land, and
every stage ships what it can against its backlog plus new orders.
"""

from __future__ import annotations

import copy
import math
from collections import deque
from collections.abc import Mapping
from dataclasses import dataclass, field


from ..aggregation import Effect, UpdaterConfig
from ..clauses import TextualClause, format_clause
from ..core import AgentId, CoordinationState, Observation, Sensitivity
from ..metrics import bullwhip_ratio, window_variance
from .base import NOISE, DomainPolicy, Environment, stream

TARGET = "TARGET_INVENTORY"
FACTOR = "ORDER_ADJUSTMENT_FACTOR"
BASE_STAGES = ["retailer", "wholesaler", "distributor", "manufacturer"]

DEFAULTS = {
    "initial_demand": 4.0,
    "shock_demand": 8.0,
    "shock_round": 4,
    "demand_noise": 1.0,
    "shipping_delay": 2,
    "order_delay": 1,
    "initial_inventory": 12.0,
    "holding_cost": 0.5,
    "backlog_cost": 1.0,
    "alpha": 0.5,
    "supply_line_weight": 0.3,
    "target_inventory": 12.0,
    "adjustment_factor": 1.0,
    "factor_bounds": [0.1, 2.0],
    "target_bounds": [0.0, 60.0],
    "trigger": 0.1,
    "damping_gain": 1.0,
    "target_gain": 0.5,
    "step_size": 0.3,
    "clause_style": "conditional",
    "bullwhip_window": [8, 20],
    "shock_window": [4, 7],
}


def stage_names(n: int) -> list[str]:
    if not 4 <= n <= 8:
        raise ValueError(f"the supply chain supports 4 to 8 stages, got {n}")
    middle = [f"distributor_{k}" for k in range(2, n - 2)]
    return BASE_STAGES[:3] + middle + BASE_STAGES[3:]


def demand_series(params: Mapping, rounds: int, seed: int) -> list[float]:
    """Customer demand for rounds 1..rounds+1; the extra round lets the last step advance."""
    rng = stream(seed, NOISE)
    out = []
    for t in range(1, rounds + 2):
        base = params["shock_demand"] if t >= params["shock_round"] else params["initial_demand"]
        noisy = base + (rng.normal(0.0, params["demand_noise"]) if params["demand_noise"] > 0 else 0.0)
        out.append(float(max(0.0, round(noisy))))
    return out


@dataclass
class BeerGameState:
    on_hand: list[float]
    backlog: list[float]
    shipments: list[deque]  # shipments[k]: units heading to stage k, head arrives next
    orders: list[deque]  # orders[k]: orders heading to stage k from k-1 (k >= 1)
    source: deque  # manufacturer orders heading to the external source
    ordered: list[float]
    received: list[float]
    incoming: list[float]
    demand: list[float]
    round: int = 0
    served: float = 0.0
    demanded: float = 0.0
    params: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.on_hand)

    def net_inventory(self, k: int) -> float:
        return self.on_hand[k] - self.backlog[k]

    def supply_line(self, k: int) -> float:
        return self.ordered[k] - self.received[k]

    def costs(self) -> list[float]:
        h, b = self.params["holding_cost"], self.params["backlog_cost"]
        return [h * self.on_hand[k] + b * self.backlog[k] for k in range(self.n)]


def _advance(state: BeerGameState) -> None:
    """Move to the next round: arrivals, then new orders, then shipping."""
    n = state.n
    for k in range(n):
        arrived = state.shipments[k].popleft()
        state.on_hand[k] += arrived
        state.received[k] += arrived
    customer = state.demand[state.round] if state.round < len(state.demand) else state.demand[-1]
    state.incoming = [customer] + [state.orders[k].popleft() for k in range(1, n)]
    state.demanded += customer
    state.shipments[n - 1].append(state.source.popleft())
    for k in range(n):
        owed = state.backlog[k] + state.incoming[k]
        shipped = min(state.on_hand[k], owed)
        state.on_hand[k] -= shipped
        state.backlog[k] = owed - shipped
        if k == 0:
            state.served += shipped
        else:
            state.shipments[k - 1].append(shipped)
    state.round += 1


def beer_reset(params: Mapping, demand: list[float], n: int) -> BeerGameState:
    """Chain primed at the initial demand, advanced into round 1."""
    d0 = params["initial_demand"]
    ship_delay, order_delay = int(params["shipping_delay"]), int(params["order_delay"])
    if ship_delay < 1 or order_delay < 1:
        raise ValueError("delays must be at least one round")
    outstanding = (ship_delay + order_delay) * d0
    state = BeerGameState(
        on_hand=[float(params["initial_inventory"])] * n,
        backlog=[0.0] * n,
        shipments=[deque([d0] * ship_delay) for _ in range(n)],
        orders=[deque([d0] * order_delay) for _ in range(n)],
        source=deque([d0] * order_delay),
        ordered=[outstanding] * n,
        received=[0.0] * n,
        incoming=[d0] * n,
        demand=list(demand),
        params=dict(params),
    )
    _advance(state)
    return state


def beer_step(state: BeerGameState, orders: list[float]) -> tuple[BeerGameState, list[float]]:
    """Charge this round's costs, place ``orders`` and advance one round."""
    if len(orders) != state.n:
        raise ValueError(f"expected {state.n} orders, got {len(orders)}")
    if any(o < 0 or o != math.floor(o) for o in orders):
        raise ValueError(f"orders must be non-negative integers: {orders}")
    nxt = copy.deepcopy(state)
    costs = nxt.costs()
    for k, qty in enumerate(orders):
        nxt.ordered[k] += qty
        if k + 1 < nxt.n:
            nxt.orders[k + 1].append(float(qty))
        else:
            nxt.source.append(float(qty))
    _advance(nxt)
    return nxt, costs


def base_stock_order(
    incoming: float, net_inventory: float, supply_line: float, target: float, factor: float, p: Mapping
) -> float:
    """Anchor on incoming demand, adjust toward target stock and a full supply line."""
    lead = p["shipping_delay"] + p["order_delay"] - 1
    gap = target - net_inventory - p["supply_line_weight"] * (supply_line - lead * incoming)
    return float(max(0, math.floor(incoming + p["alpha"] * factor * gap + 0.5)))


class BeerPolicy(DomainPolicy):
    def __init__(self, agent_id: AgentId, emitter, params: Mapping):
        super().__init__(agent_id, emitter)
        self.params = params

    def decide(self, state, obs, inbox):
        order = base_stock_order(
            obs["incoming"], obs["inventory"], obs["supply_line"], state[TARGET], state[FACTOR], self.params
        )
        return {"order": order}

    def order_partial(self, state: CoordinationState, obs: Observation) -> float:
        """Order response to the observed demand move, zero below the trigger."""
        p = self.params
        move = obs.signals.get("demand", 0.0)
        if abs(move) < p["trigger"]:
            return 0.0
        lead = p["shipping_delay"] + p["order_delay"] - 1
        return obs["demand_change"] * (1.0 + p["alpha"] * state[FACTOR] * p["supply_line_weight"] * lead)

    def factor_partial(self, state, obs) -> float:
        return abs(self.order_partial(state, obs)) * self.params["damping_gain"] / self.params["initial_demand"]

    def target_partial(self, state, obs) -> float:
        p = self.params
        return p["target_gain"] * (obs["inventory"] - state[TARGET]) / p["initial_demand"]


def _clause(cond, direction, magnitude, effect, delta) -> str:
    return format_clause(TextualClause(cond, direction, magnitude, effect, delta))


def emit_numeric(policy: BeerPolicy, state, obs, decision) -> Sensitivity:
    return Sensitivity.of_numeric({FACTOR: policy.factor_partial(state, obs), TARGET: policy.target_partial(state, obs)})


def emit_textual(policy: BeerPolicy, state, obs, decision) -> Sensitivity:
    p = policy.params
    clauses = []
    if p["clause_style"] == "direct":
        clauses.append(_clause(FACTOR, "increase", None, FACTOR, policy.factor_partial(state, obs)))
    else:
        k = policy.order_partial(state, obs)
        if k != 0.0:
            direction = "increase" if obs.signals["demand"] > 0 else "decrease"
            clauses.append(_clause("demand", direction, p["trigger"] * 100.0, "order", abs(k)))
    clauses.append(_clause(TARGET, "increase", None, TARGET, policy.target_partial(state, obs)))
    return Sensitivity.of_text(clauses)


def emit_free_text(policy: BeerPolicy, state, obs, decision) -> Sensitivity:
    low = obs["inventory"] < state[TARGET]
    reason = "inventory is low" if low else "inventory is sufficient"
    return Sensitivity.of_text([f"Ordering {decision['order']:g} units because {reason}."])


class BeerGame(Environment):
    def __init__(self, agents, topology, params, seed: int, rounds: int):
        super().__init__(agents, topology, {**DEFAULTS, **params})
        if params.get("clause_style", "conditional") not in ("conditional", "direct"):
            raise ValueError(f"unknown clause style {params['clause_style']!r}")
        self.demand = demand_series(self.params, rounds, seed)
        self.state = beer_reset(self.params, self.demand, len(agents))
        self.index = {a: k for k, a in enumerate(agents)}
        self.previous_incoming = [float(self.params["initial_demand"])] * len(agents)

    def initial_state(self, agent):
        p = self.params
        return CoordinationState(
            {TARGET: p["target_inventory"], FACTOR: p["adjustment_factor"]},
            {TARGET: tuple(p["target_bounds"]), FACTOR: tuple(p["factor_bounds"])},
        )

    def updater_config(self, kind, step_size):
        p = self.params
        scale = p["damping_gain"] / p["initial_demand"]
        return UpdaterConfig(
            kind=kind,
            step_size=step_size or p["step_size"],
            sense="descent",
            effects={
                "order": Effect(FACTOR, scale, magnitude=True),
                "order_adjustment": Effect(FACTOR, scale, magnitude=True),
            },
        )

    def make_policy(self, agent, protocol, modality):
        if protocol == "a2a":
            emitter = emit_free_text
        else:
            emitter = emit_textual if modality == "textual" else emit_numeric
        return BeerPolicy(agent, emitter, self.params)

    def observe(self, agent):
        k = self.index[agent]
        s = self.state
        incoming, prev = s.incoming[k], self.previous_incoming[k]
        return Observation(
            values={
                "incoming": incoming,
                "demand_change": incoming - prev,
                "on_hand": s.on_hand[k],
                "backlog": s.backlog[k],
                "inventory": s.net_inventory(k),
                "supply_line": s.supply_line(k),
            },
            signals={"demand": (incoming - prev) / max(prev, 1.0)},
        )

    def step(self, decisions):
        orders = [decisions[a]["order"] for a in self.agents]
        customer = self.state.incoming[0]
        self.previous_incoming = list(self.state.incoming)
        self.state, costs = beer_step(self.state, orders)
        metrics = {"demand": customer, "cost": math.fsum(costs)}
        for a, c, o in zip(self.agents, costs, orders):
            metrics[f"cost_{a}"] = c
            metrics[f"order_{a}"] = o
        return metrics

    def summarize(self, metrics):
        top = self.agents[-1]
        orders = [m[f"order_{top}"] for m in metrics]
        demand = [m["demand"] for m in metrics]
        late, shock = self.params["bullwhip_window"], self.params["shock_window"]
        return {
            "total_cost": math.fsum(m["cost"] for m in metrics),
            "bullwhip_ratio": bullwhip_ratio(orders, demand, late),
            "order_variance_late": window_variance(orders, late),
            "order_variance_shock": window_variance(orders, shock),
        }
