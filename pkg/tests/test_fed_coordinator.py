import dataclasses
import pathlib

import numpy as np
import pytest

import pillcase.fed.coordinator as coordinator
from pillcase.fed import (
    PARAM_DIM,
    ClientUpdate,
    ExperimentConfig,
    ConfigError,
    PopulationSpec,
    aggregate,
    evaluate_fairness,
    generate_population,
    init_params,
    local_train,
    parse_experiment_config,
    load_experiment_config,
    run_federation,
)

EXPERIMENTS = pathlib.Path(__file__).parent.parent / "experiments"


def upd(cid, vec, n, loss):
    return ClientUpdate(cid, np.asarray(vec, dtype=float), n, loss)


def test_plain_weights_proportional_to_samples():
    params = np.zeros(3)
    updates = [upd("a", [1, 0, 0], 1, 0.9), upd("b", [0, 1, 0], 3, 0.1)]
    new, w = aggregate(params, updates, "plain")
    assert np.allclose(w, [0.25, 0.75])
    assert np.allclose(new, [0.25, 0.75, 0.0])


def test_fair_weights_scale_with_loss_power():
    params = np.zeros(3)
    updates = [upd("a", [1, 0, 0], 2, 0.5), upd("b", [0, 1, 0], 2, 1.5)]
    new, w = aggregate(params, updates, "fair", q=1.0)
    assert np.allclose(w, [0.25, 0.75])
    _, w2 = aggregate(params, updates, "fair", q=2.0)
    assert np.allclose(w2, [0.1, 0.9])


def test_fair_q0_equals_plain_exactly():
    rng = np.random.default_rng(42)
    params = rng.normal(size=PARAM_DIM)
    for _ in range(100):
        k = rng.integers(1, 8)
        updates = [
            upd(f"c{i}", rng.normal(size=PARAM_DIM), int(rng.integers(0, 500)),
                float(rng.uniform(0.0, 3.0)))
            for i in range(k)
        ]
        plain_p, plain_w = aggregate(params, updates, "plain")
        fair_p, fair_w = aggregate(params, updates, "fair", q=0.0)
        assert np.array_equal(plain_p, fair_p)  # bitwise, not approx
        assert np.array_equal(plain_w, fair_w)
        params = plain_p


def test_weights_sum_to_one():
    rng = np.random.default_rng(3)
    updates = [
        upd(f"c{i}", rng.normal(size=4), int(rng.integers(1, 100)), rng.uniform(0.1, 2))
        for i in range(6)
    ]
    for mode, q in (("plain", 0.0), ("fair", 1.0), ("fair", 2.0)):
        _, w = aggregate(np.zeros(4), updates, mode, q)
        assert abs(w.sum() - 1.0) <= 1e-9


def test_zero_sample_clients_get_zero_weight():
    updates = [upd("a", [10.0], 0, 0.5), upd("b", [2.0], 5, 0.5)]
    new, w = aggregate(np.zeros(1), updates, "plain")
    assert w[0] == 0.0 and w[1] == 1.0
    assert new[0] == 2.0


def test_abstaining_and_empty_rounds():
    params = np.array([1.0, 2.0])
    new, w = aggregate(params, [None, None], "plain")
    assert np.array_equal(new, params)
    assert w.size == 0
    new2, w2 = aggregate(params, [None, upd("b", [1.0, 1.0], 4, 0.2)], "plain")
    assert np.array_equal(new2, params + [1.0, 1.0])
    assert np.array_equal(w2, [1.0])
    # all zero-sample: no-op too
    new3, w3 = aggregate(params, [upd("a", [9.0, 9.0], 0, 0.1)], "plain")
    assert np.array_equal(new3, params)
    assert np.array_equal(w3, [0.0])


def test_aggregate_validates_mode_and_q():
    with pytest.raises(ValueError):
        aggregate(np.zeros(2), [], "median")
    with pytest.raises(ValueError):
        aggregate(np.zeros(2), [], "fair", q=-1.0)


def test_evaluate_fairness_hand_case():
    rep = evaluate_fairness([1.0, 3.0])
    assert rep.variance == pytest.approx(1.0)
    assert rep.max_loss == 3.0
    assert rep.worst_decile_mean == 3.0  # ceil(2/10) = 1 worst loss


def test_evaluate_fairness_worst_decile_brute_force():
    rng = np.random.default_rng(8)
    for n in (1, 9, 10, 11, 20, 95):
        losses = rng.uniform(0, 2, size=n)
        rep = evaluate_fairness(losses)
        k = -(-n // 10)  # ceil
        want = np.mean(sorted(losses)[-k:])
        assert rep.worst_decile_mean == pytest.approx(want)
        assert rep.variance == pytest.approx(np.var(losses))
    with pytest.raises(ValueError):
        evaluate_fairness([])


def test_run_federation_deterministic():
    spec = PopulationSpec(8, 0.8, 0.5, 1.0, seed=21)
    a = run_federation(spec, days=60, rounds=10, clients_per_round=3)
    b = run_federation(spec, days=60, rounds=10, clients_per_round=3)
    assert a.to_ndjson() == b.to_ndjson()
    c = run_federation(
        PopulationSpec(8, 0.8, 0.5, 1.0, seed=22), days=60, rounds=10, clients_per_round=3
    )
    assert a.to_ndjson() != c.to_ndjson()


def test_round_metrics_structure():
    spec = PopulationSpec(6, seed=2)
    h = run_federation(spec, days=30, rounds=4, clients_per_round=2)
    assert len(h.rounds) == 4
    for i, r in enumerate(h.rounds):
        assert r.round_index == i
        assert len(r.selected) == 2
        assert len(set(r.selected)) == 2  # sampled without replacement
        assert len(r.client_losses) == 6
        assert r.fairness_max == max(r.client_losses)
    assert h.final_params is not None and len(h.final_params) == PARAM_DIM
    assert 0.0 <= h.final_accuracy <= 1.0


def test_single_client_plain_equals_centralized():
    # one client at weight 1: every round is just more GD on the same data
    spec = PopulationSpec(1, 0.85, 0.5, 1.0, seed=3)
    h = run_federation(
        spec, days=120, rounds=8, clients_per_round=1, epochs=4, lr=0.4,
        holdout_fraction=0.0,
    )
    (ds,) = generate_population(spec, 120)
    u = local_train(init_params(), ds, epochs=32, lr=0.4)
    centralized = init_params() + u.update
    assert np.array_equal(h.final_params, centralized)


def test_fair_aggregation_lowers_worst_client_loss():
    for seed in (0, 1, 2):
        spec = PopulationSpec(20, 0.8, 0.4, 2.0, seed=seed)
        plain = run_federation(spec, days=120, rounds=60, clients_per_round=5, mode="plain")
        fair = run_federation(spec, days=120, rounds=60, clients_per_round=5, mode="fair", q=2.0)
        assert fair.rounds[-1].fairness_max <= plain.rounds[-1].fairness_max


def test_coordinator_never_sees_raw_rows(monkeypatch):
    seen = []
    real = coordinator.aggregate

    def spy(params, updates, mode="plain", q=0.0):
        seen.extend(u for u in updates if u is not None)
        return real(params, updates, mode, q)

    monkeypatch.setattr(coordinator, "aggregate", spy)
    run_federation(PopulationSpec(4, seed=1), days=20, rounds=3, clients_per_round=2)
    assert seen
    for u in seen:
        assert isinstance(u, ClientUpdate)
        names = {f.name for f in dataclasses.fields(u)}
        assert names == {"client_id", "update", "n_samples", "local_loss"}
        assert u.update.shape == (PARAM_DIM,)  # a delta, not a data matrix
        assert isinstance(u.n_samples, int)
        assert isinstance(u.local_loss, float)


def test_run_federation_validates_args():
    spec = PopulationSpec(2)
    with pytest.raises(ValueError):
        run_federation(spec, days=10, rounds=0)
    with pytest.raises(ValueError):
        run_federation(spec, days=10, rounds=1, clients_per_round=0)
    with pytest.raises(ValueError):
        run_federation(spec, days=10, rounds=1, holdout_fraction=1.0)


def test_experiment_config_parse_and_defaults():
    cfg = parse_experiment_config("clients = 5\nmode = fair\nq = 2.0\n# note\n")
    assert cfg.clients == 5 and cfg.mode == "fair" and cfg.q == 2.0
    assert cfg.rounds == 100 and cfg.lr == 0.5  # defaults hold
    spec = cfg.population_spec()
    assert spec.n_clients == 5


@pytest.mark.parametrize(
    "text,line",
    [
        ("clients 5\n", 1),
        ("bogus = 3\n", 1),
        ("clients = 5\nclients = 6\n", 2),
        ("clients = five\n", 1),
    ],
)
def test_experiment_config_errors(text, line):
    with pytest.raises(ConfigError) as e:
        parse_experiment_config(text)
    assert e.value.line_number == line


def test_experiment_config_bad_mode():
    with pytest.raises(ValueError):
        parse_experiment_config("mode = median\n")


def test_shipped_experiment_config_loads():
    cfg = load_experiment_config(EXPERIMENTS / "weekend_adherence.cfg")
    assert cfg.clients == 50 and cfg.days == 365
    assert cfg.skew > 0  # heterogeneity is what makes the problem learnable
