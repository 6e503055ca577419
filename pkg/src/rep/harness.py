"""Experiment runner: builds a trial from config, drives the round loop and
collects metrics, message accounting and summaries."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
from collections.abc import Iterable, Mapping
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import import_module
from pathlib import Path
from typing import Any

from .aggregation import UPDATER_KINDS, NullUpdater, make_updater
from .client import CONSENSUS_SENDER, REPClient, configure
from .consensus import CONSENSUS_RULES, ConsensusResult, run_consensus
from .core import CoordinationState, Sensitivity, SensitivityMessage
from .domains import DEFAULT_AGENTS, ENVIRONMENTS, PROTOCOLS, build_environment
from .domains.topology import TOPOLOGY_KINDS
from .errors import ConfigurationError
from .metrics import bullwhip_ratio, rounds_to_convergence
from .transport import CONSENSUS_TOPIC, InProcessBus

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
AGENT_LIMITS = {"beer": (4, 8), "fishbanks": (2, 500), "movie": (2, 1000)}

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "RoundRecord",
    "TrialResult",
    "bullwhip_ratio",
    "configs_from_document",
    "load_config",
    "read_results",
    "rounds_to_convergence",
    "run_experiment",
    "run_trial",
    "write_results",
]


@dataclass(frozen=True)
class ExperimentConfig:
    domain: str
    protocol: str = "rep"
    updater: str = "numerical_grad"
    consensus: str = "auto"
    n_agents: int | None = None
    sparsity: float = 0.0
    topology: str = "auto"
    rounds: int = 20
    trials: int = 5
    seed: int = 0
    eta: float | None = None
    params: dict[str, Any] = field(default_factory=dict)
    convergence_threshold: float = 0.70
    workers: int = 1
    name: str = ""

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ConfigurationError(problems)

    def problems(self) -> list[str]:
        out = []
        if self.domain not in ENVIRONMENTS:
            out.append(f"domain must be one of {sorted(ENVIRONMENTS)}, got {self.domain!r}")
        if self.protocol not in PROTOCOLS:
            out.append(f"protocol must be one of {list(PROTOCOLS)}, got {self.protocol!r}")
        if self.updater not in UPDATER_KINDS:
            out.append(f"updater must be one of {list(UPDATER_KINDS)}, got {self.updater!r}")
        if self.consensus != "auto" and self.consensus not in CONSENSUS_RULES:
            out.append(f"consensus must be 'auto' or one of {list(CONSENSUS_RULES)}, got {self.consensus!r}")
        if self.topology not in TOPOLOGY_KINDS:
            out.append(f"topology must be one of {list(TOPOLOGY_KINDS)}, got {self.topology!r}")
        if self.n_agents is not None:
            if not isinstance(self.n_agents, int) or isinstance(self.n_agents, bool):
                out.append(f"n_agents must be an integer, got {self.n_agents!r}")
            elif self.domain in AGENT_LIMITS:
                lo, hi = AGENT_LIMITS[self.domain]
                if not lo <= self.n_agents <= hi:
                    out.append(f"{self.domain} supports {lo} to {hi} agents, got {self.n_agents}")
        if not isinstance(self.sparsity, (int, float)) or not 0.0 <= self.sparsity < 1.0:
            out.append(f"sparsity must lie in [0, 1), got {self.sparsity!r}")
        for key in ("rounds", "trials", "workers"):
            value = getattr(self, key)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                out.append(f"{key} must be a positive integer, got {value!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            out.append(f"seed must be a non-negative integer, got {self.seed!r}")
        if self.eta is not None and not (isinstance(self.eta, (int, float)) and math.isfinite(self.eta) and self.eta > 0):
            out.append(f"eta must be a positive number, got {self.eta!r}")
        if not isinstance(self.convergence_threshold, (int, float)) or not 0 < self.convergence_threshold <= 1:
            out.append(f"convergence_threshold must lie in (0, 1], got {self.convergence_threshold!r}")
        if not isinstance(self.params, dict):
            out.append("params must be a mapping")
        elif self.domain in ENVIRONMENTS:
            module = import_module(ENVIRONMENTS[self.domain].__module__)
            unknown = sorted(set(self.params) - set(module.DEFAULTS) - {"convergence_threshold"})
            if unknown:
                out.append(f"unknown {self.domain} parameters: {unknown}")
        return out

    @property
    def resolved_consensus(self) -> str:
        if self.protocol == "a2a":
            return "none"
        if self.consensus == "auto":
            return ENVIRONMENTS[self.domain].default_consensus
        return self.consensus

    @property
    def agents(self) -> int:
        return self.n_agents or DEFAULT_AGENTS[self.domain]

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any]) -> ExperimentConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(raw) - known)
        if unknown:
            problems = [f"unknown config keys: {unknown}"]
            if "domain" not in raw:
                problems.append("missing required key 'domain'")
            raise ConfigurationError(problems)
        if "domain" not in raw:
            raise ConfigurationError("missing required key 'domain'")
        return cls(**dict(raw))

    def replace(self, **changes) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)


@dataclass
class RoundRecord:
    round: int
    metrics: dict[str, float]
    states: dict[str, dict[str, float]] = field(default_factory=dict)
    decisions: dict[str, dict[str, float]] = field(default_factory=dict)
    shared_state: dict[str, float] | None = None


@dataclass
class TrialResult:
    seed: int
    records: list[RoundRecord]
    summary: dict[str, float | None]
    messages: int
    bytes: int
    transcript_digest: str

    def series(self, metric: str) -> list[float]:
        return [r.metrics[metric] for r in self.records]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    trials: list[TrialResult]
    aggregate: dict[str, dict[str, float | int | None]]

    @property
    def name(self) -> str:
        return self.config.name or f"{self.config.domain}_{self.config.protocol}"


def _consensus_phase(
    bus: InProcessBus, clients: list[REPClient], states: list[CoordinationState], t: int
) -> list[CoordinationState]:
    """Every agent publishes its proposal; the service collects them in agent order."""
    empty = Sensitivity.of_numeric({})
    for c, s in zip(clients, states):
        bus.publish(CONSENSUS_TOPIC, SensitivityMessage(t, c.agent_id, s.as_dict(), empty))
    received = {m.sender: m for m in bus.drain_topic(CONSENSUS_TOPIC, t)}
    bounds = states[0].bounds
    return [CoordinationState(received[c.agent_id].decision, bounds) for c in clients]


def run_trial(cfg: ExperimentConfig, seed: int) -> TrialResult:
    params = dict(cfg.params)
    env = build_environment(
        cfg.domain, cfg.agents, seed=seed, rounds=cfg.rounds, sparsity=cfg.sparsity,
        topology=cfg.topology, params=params,
    )
    topo = env.topology
    consensus = cfg.resolved_consensus
    modality = "textual" if cfg.updater == "textual_grad" else "numeric"
    if cfg.protocol == "a2a":
        updater = NullUpdater(env.updater_config("none", cfg.eta))
    else:
        updater = make_updater(env.updater_config(cfg.updater, cfg.eta))

    bus = InProcessBus()
    clients = [
        configure(
            env.make_policy(a, cfg.protocol, modality), bus, updater, consensus, env.initial_state(a),
            topo.neighbors(a), agent_id=a, neighbor_degrees={b: topo.degree(b) for b in topo.neighbors(a)},
        )
        for a in env.agents
    ]

    records = []
    for t in range(cfg.rounds):
        before = len(bus.log)
        log_bytes = bus.log.total_bytes()
        observations = {a: env.observe(a) for a in env.agents}
        decisions, states = [], []
        for c in clients:
            d, s = c.run_round(observations[c.agent_id])
            decisions.append(d)
            states.append(s)

        shared = None
        if consensus != "none":
            proposals = _consensus_phase(bus, clients, states, t)
            result: ConsensusResult = run_consensus(proposals, decisions, consensus, env.endorse)
            shared = result.shared_state
            _broadcast_shared(bus, env.agents, t, shared)
        else:
            result = run_consensus(states, decisions, "none", env.endorse)

        metrics = env.step({a: d for a, d in zip(env.agents, decisions)})
        if env.tracks_agreement:
            metrics["consensus_fraction"] = result.agreement_fraction
        metrics["messages"] = float(len(bus.log) - before)
        metrics["bytes"] = float(bus.log.total_bytes() - log_bytes)
        records.append(
            RoundRecord(
                round=t + 1,
                metrics=metrics,
                states={c.agent_id: s.as_dict() for c, s in zip(clients, states)},
                decisions={c.agent_id: d for c, d in zip(clients, decisions)},
                shared_state=shared.as_dict() if shared is not None else None,
            )
        )

    metric_rows = [r.metrics for r in records]
    env.params["convergence_threshold"] = cfg.convergence_threshold
    summary = env.summarize(metric_rows)
    summary["messages"] = math.fsum(m["messages"] for m in metric_rows)
    summary["bytes"] = math.fsum(m["bytes"] for m in metric_rows)
    return TrialResult(
        seed=seed,
        records=records,
        summary=summary,
        messages=len(bus.log),
        bytes=bus.log.total_bytes(),
        transcript_digest=bus.log.digest(),
    )


def _broadcast_shared(bus: InProcessBus, agents: Iterable[str], t: int, shared: CoordinationState) -> int:
    msg = SensitivityMessage(t, CONSENSUS_SENDER, shared.as_dict(), Sensitivity.of_numeric({}))
    return bus.multicast(CONSENSUS_SENDER, agents, msg)


def aggregate(trials: list[TrialResult]) -> dict[str, dict[str, float | int | None]]:
    """Mean and sample standard deviation per summary field; ``None`` counts as DNF."""
    keys = sorted({k for t in trials for k in t.summary})
    out = {}
    for k in keys:
        values = [t.summary.get(k) for t in trials]
        done = [float(v) for v in values if v is not None]
        mean = math.fsum(done) / len(done) if done else None
        if len(done) >= 2:
            std = math.sqrt(math.fsum((v - mean) ** 2 for v in done) / (len(done) - 1))
        else:
            std = 0.0 if done else None
        out[k] = {"mean": mean, "std": std, "n": len(done), "dnf": len(values) - len(done)}
    return out


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    seeds = [cfg.seed + k for k in range(cfg.trials)]
    if cfg.workers > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, cfg.trials)) as pool:
            trials = list(pool.map(run_trial, [cfg] * len(seeds), seeds))
    else:
        trials = [run_trial(cfg, s) for s in seeds]
    return ExperimentResult(cfg, trials, aggregate(trials))


# configuration documents

def configs_from_document(doc: Mapping[str, Any], name: str = "") -> list[ExperimentConfig]:
    """Expand a config document; a ``variants`` list yields one config per override set."""
    doc = dict(doc)
    variants = doc.pop("variants", None)
    doc.pop("description", None)
    doc.setdefault("name", name)
    if variants is None:
        return [ExperimentConfig.from_dict(doc)]
    if not isinstance(variants, list) or not variants:
        raise ConfigurationError("'variants' must be a non-empty list of override mappings")
    configs, problems = [], []
    for k, override in enumerate(variants):
        merged = {**doc, **override}
        if "params" in override:
            merged["params"] = {**doc.get("params", {}), **override["params"]}
        merged["name"] = override.get("name", f"{doc['name'] or 'variant'}_{k}")
        try:
            configs.append(ExperimentConfig.from_dict(merged))
        except ConfigurationError as exc:
            problems += [f"variant {k}: {p}" for p in exc.problems]
    if problems:
        raise ConfigurationError(problems)
    return configs


def load_config(path: str | Path) -> list[ExperimentConfig]:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{path}: config must be a JSON object")
    return configs_from_document(doc, name=path.stem)


# persistence

def result_to_dict(res: ExperimentResult) -> dict[str, Any]:
    return {
        "name": res.name,
        "config": res.config.to_dict(),
        "trials": [dataclasses.asdict(t) for t in res.trials],
        "aggregate": res.aggregate,
    }


def write_results(results: ExperimentResult | list[ExperimentResult], path: str | Path, format: str = "json") -> Path:
    if isinstance(results, ExperimentResult):
        results = [results]
    path = Path(path)
    if format not in ("json", "csv"):
        raise ConfigurationError(f"unknown output format {format!r}")
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True)
        if format == "json":
            doc = {"schema_version": SCHEMA_VERSION, "experiments": [result_to_dict(r) for r in results]}
            path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        else:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["experiment", "trial", "seed", "round", "metric", "value"])
                for res in results:
                    for k, trial in enumerate(res.trials):
                        for rec in trial.records:
                            for metric, value in sorted(rec.metrics.items()):
                                writer.writerow([res.name, k, trial.seed, rec.round, metric, repr(float(value))])
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write results to {path}: {exc.strerror}") from None
    return path


def read_results(path: str | Path) -> dict[str, Any]:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ConfigurationError(f"{path}: unsupported results schema {doc.get('schema_version')!r}")
    return doc


def plot_rows(doc: Mapping[str, Any], metric: str) -> list[tuple[str, int, int, int, float]]:
    """Long-format (experiment, trial, seed, round, value) rows for one metric."""
    rows = []
    for exp in doc["experiments"]:
        for k, trial in enumerate(exp["trials"]):
            for rec in trial["records"]:
                if metric in rec["metrics"]:
                    rows.append((exp["name"], k, trial["seed"], rec["round"], rec["metrics"][metric]))
    return rows
