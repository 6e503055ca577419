"""Directional regression checks over the bundled scenarios, for CI."""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass

from . import scenarios
from .harness import ExperimentResult, configs_from_document, run_experiment


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _run(name: str, trials: int | None) -> list[ExperimentResult]:
    out = []
    for cfg in configs_from_document(scenarios.load(name), name=name):
        out.append(run_experiment(cfg.replace(trials=trials) if trials else cfg))
    return out


def _mean(res: ExperimentResult, key: str) -> float:
    return res.aggregate[key]["mean"]


def check_beer(trials=None) -> list[CheckResult]:
    rep, a2a = _run("beer_rep", trials)[0], _run("beer_a2a", trials)[0]
    ratio = _mean(rep, "total_cost") / _mean(a2a, "total_cost")
    bw_rep, bw_a2a = _mean(rep, "bullwhip_ratio"), _mean(a2a, "bullwhip_ratio")
    calm = _mean(rep, "order_variance_late") / _mean(rep, "order_variance_shock")
    return [
        CheckResult("beer-cost", ratio <= 0.80, f"cost ratio {ratio:.3f} (<= 0.80)"),
        CheckResult("beer-bullwhip", bw_rep < bw_a2a and bw_a2a > 1.5, f"bullwhip {bw_rep:.2f} vs {bw_a2a:.2f}"),
        CheckResult("beer-stabilization", calm <= 0.25, f"late/shock variance {calm:.3f} (<= 0.25)"),
    ]


def check_fishbanks(trials=None) -> list[CheckResult]:
    rep, a2a = _run("fishbanks_rep", trials)[0], _run("fishbanks_a2a", trials)[0]
    gain = _mean(rep, "seasons_above_threshold") - _mean(a2a, "seasons_above_threshold")
    p_rep, p_a2a = _mean(rep, "final_profit"), _mean(a2a, "final_profit")
    return [
        CheckResult("fishbanks-seasons", gain >= 1.0, f"+{gain:.2f} seasons above threshold (>= 1)"),
        CheckResult("fishbanks-profit", p_rep >= p_a2a, f"profit {p_rep:.1f} vs {p_a2a:.1f}"),
    ]


def check_movie(trials=None) -> list[CheckResult]:
    runs = {r.name: r for r in _run("movie_sparsity", trials)}
    limits = {"rep_complete": 6, "rep_sparse30": 9, "rep_sparse60": 14}
    per_seed = list(zip(*[[t.summary["rounds_to_convergence"] for t in runs[k].trials] for k in limits]))
    within = all(r is not None and r <= lim for row in per_seed for r, lim in zip(row, limits.values()))
    ordered = all(None not in row and list(row) == sorted(row) for row in per_seed)
    cap = max(max(t.series("consensus_fraction")) for k in runs if k.startswith("a2a") for t in runs[k].trials)
    scaling = {r.name: r for r in _run("movie_scaling", trials)}
    rep_ok = all(scaling[k].aggregate["rounds_to_convergence"]["dnf"] == 0 for k in scaling if k.startswith("rep"))
    a2a_dnf = all(
        scaling[f"a2a_n{n}"].aggregate["rounds_to_convergence"]["n"] == 0 for n in (50, 100, 200)
    )
    return [
        CheckResult("movie-sparsity", within and ordered, f"rounds per seed {per_seed}"),
        CheckResult("movie-baseline-cap", cap <= 0.55, f"baseline best consensus {cap:.2f} (<= 0.55)"),
        CheckResult("movie-scaling", rep_ok and a2a_dnf, "protocol converges at every size, baseline never from 50 up"),
    ]


ALL: dict[str, Callable[..., list[CheckResult]]] = {
    "beer": check_beer,
    "fishbanks": check_fishbanks,
    "movie": check_movie,
}


def run_checks(only: list[str] | None = None, trials: int | None = None) -> list[CheckResult]:
    out = []
    for name, fn in ALL.items():
        if only and name not in only:
            continue
        out += fn(trials)
    return out
