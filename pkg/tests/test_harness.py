import csv
import json

import pytest

from rep import ConfigurationError
from rep.harness import (
    ExperimentConfig,
    aggregate,
    configs_from_document,
    load_config,
    plot_rows,
    read_results,
    run_experiment,
    run_trial,
    write_results,
)
from rep.metrics import bullwhip_ratio, rounds_to_convergence, window_variance


def shape(obj):
    """Key structure of a JSON document with leaf types erased."""
    if isinstance(obj, dict):
        return {k: shape(v) for k, v in sorted(obj.items())}
    if isinstance(obj, list):
        return [shape(obj[0])] if obj else []
    return None


def test_smallest_run():
    res = run_experiment(ExperimentConfig("beer", rounds=1, trials=1))
    (trial,) = res.trials
    assert len(trial.records) == 1 and trial.records[0].round == 1
    assert set(trial.records[0].states) == {"retailer", "wholesaler", "distributor", "manufacturer"}
    assert res.aggregate["total_cost"]["n"] == 1 and res.aggregate["total_cost"]["std"] == 0.0


@pytest.mark.parametrize("domain", ["beer", "fishbanks", "movie"])
def test_trials_are_reproducible(domain):
    cfg = ExperimentConfig(domain, rounds=4, n_agents=8 if domain != "beer" else None)
    a, b = run_trial(cfg, 3), run_trial(cfg, 3)
    assert a.transcript_digest == b.transcript_digest
    assert a.summary == b.summary and [r.states for r in a.records] == [r.states for r in b.records]
    assert run_trial(cfg, 4).transcript_digest != a.transcript_digest


def test_summary_is_recomputable_from_records():
    cfg = ExperimentConfig("beer", rounds=20)
    trial = run_trial(cfg, 1)
    assert trial.summary["total_cost"] == pytest.approx(sum(trial.series("cost")))
    top = trial.series("order_manufacturer")
    assert trial.summary["bullwhip_ratio"] == bullwhip_ratio(top, trial.series("demand"), (8, 20))
    assert trial.summary["messages"] == trial.messages


@pytest.mark.parametrize(
    "domain,n,sparsity,protocol",
    [("beer", 4, 0.0, "rep"), ("fishbanks", 6, 0.0, "rep"), ("movie", 30, 0.3, "rep"), ("movie", 30, 0.3, "a2a")],
)
def test_message_accounting(domain, n, sparsity, protocol):
    cfg = ExperimentConfig(domain, protocol=protocol, n_agents=n, sparsity=sparsity, rounds=5, consensus="median_coordinate")
    trial = run_trial(cfg, 0)
    from rep.domains import build_environment

    edges = build_environment(domain, n, seed=0, sparsity=sparsity).topology.n_edges
    per_round = 2 * edges + (2 * n if protocol == "rep" else 0)
    assert trial.series("messages") == [per_round] * 5
    assert trial.messages == 5 * per_round


def test_a2a_never_moves_state():
    trial = run_trial(ExperimentConfig("movie", protocol="a2a", n_agents=10, rounds=5), 0)
    assert all(r.shared_state is None for r in trial.records)
    assert {json.dumps(s, sort_keys=True) for r in trial.records for s in r.states.values()} == {
        json.dumps({"PRICE": 12.0, "TIME": 19.0})
    }


def test_config_validation_lists_every_problem():
    with pytest.raises(ConfigurationError) as err:
        ExperimentConfig("beer", protocol="smoke", updater="magic", n_agents=2, sparsity=1.5, rounds=0,
                         eta=-1.0, params={"colour": 3})
    assert len(err.value.problems) == 7
    with pytest.raises(ConfigurationError):
        ExperimentConfig("chess")
    with pytest.raises(ConfigurationError) as err:
        ExperimentConfig.from_dict({"rounds": 3, "flavour": "x"})
    assert len(err.value.problems) == 2


def test_consensus_resolution():
    assert ExperimentConfig("movie").resolved_consensus == "median_coordinate"
    assert ExperimentConfig("beer").resolved_consensus == "none"
    assert ExperimentConfig("movie", protocol="a2a", consensus="median_coordinate").resolved_consensus == "none"


def test_variants_expand_and_report_all_failures():
    doc = {"domain": "movie", "rounds": 3, "params": {"salience": 0.5},
           "variants": [{"name": "a", "sparsity": 0.3}, {"params": {"step_size": 0.2}}]}
    a, b = configs_from_document(doc, "demo")
    assert a.name == "a" and a.sparsity == 0.3 and b.name == "demo_1"
    assert b.params == {"salience": 0.5, "step_size": 0.2}
    with pytest.raises(ConfigurationError) as err:
        configs_from_document({"domain": "movie", "variants": [{"rounds": 0}, {"sparsity": 2}]})
    assert [p.split(":")[0] for p in err.value.problems] == ["variant 0", "variant 1"]


def test_load_config_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigurationError):
        load_config(bad)
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.json")


def test_rounds_to_convergence_examples():
    assert rounds_to_convergence([0.2, 0.5, 0.75, 0.8]) == 3
    assert rounds_to_convergence([0.8, 0.2, 0.75, 0.8]) == 3  # a one-round spike does not count
    assert rounds_to_convergence([0.8]) is None
    assert rounds_to_convergence([0.69, 0.7, 0.7]) == 2


def test_variability_examples():
    assert bullwhip_ratio([1, 3, 1, 3], [2, 3, 2, 3], (1, 4)) == 4.0
    assert bullwhip_ratio([1, 3], [2, 2], (1, 2)) is None
    assert window_variance([5, 1, 3, 9], (2, 3)) == 1.0
    with pytest.raises(ValueError):
        window_variance([1, 2], (0, 1))


def test_aggregate_counts_dnf():
    from rep.harness import TrialResult

    trials = [TrialResult(s, [], {"r": v}, 0, 0, "") for s, v in enumerate([2.0, None, 4.0])]
    assert aggregate(trials)["r"] == {"mean": 3.0, "std": pytest.approx(2 ** 0.5), "n": 2, "dnf": 1}


def test_results_round_trip(tmp_path, fixtures_dir):
    res = run_experiment(ExperimentConfig("movie", n_agents=6, rounds=3, trials=2))
    path = write_results(res, tmp_path / "out" / "r.json")
    doc = read_results(path)
    assert doc["experiments"][0]["aggregate"] == json.loads(json.dumps(res.aggregate))
    golden = json.loads((fixtures_dir / "results_schema.json").read_text())
    assert shape(doc) == golden
    rows = plot_rows(doc, "consensus_fraction")
    assert len(rows) == 6 and rows[0][:4] == ("movie_rep", 0, 0, 1)

    csv_path = write_results(res, tmp_path / "r.csv", "csv")
    with open(csv_path, newline="") as fh:
        table = list(csv.reader(fh))
    metrics_per_round = len(res.trials[0].records[0].metrics)
    assert table[0] == ["experiment", "trial", "seed", "round", "metric", "value"]
    assert len(table) - 1 == 2 * 3 * metrics_per_round


def test_unsupported_schema(tmp_path):
    p = tmp_path / "x.json"
    p.write_text(json.dumps({"schema_version": 99}))
    with pytest.raises(ConfigurationError):
        read_results(p)


def test_parallel_trials_match_serial():
    cfg = ExperimentConfig("movie", n_agents=8, rounds=3, trials=2)
    serial = run_experiment(cfg)
    parallel = run_experiment(cfg.replace(workers=2))
    assert [t.transcript_digest for t in serial.trials] == [t.transcript_digest for t in parallel.trials]
