import numpy as np
import pytest

from pillcase.fed import (
    FEATURE_DIM,
    PopulationSpec,
    PopulationSpecError,
    build_features,
    generate_population,
)


def test_generation_deterministic():
    spec = PopulationSpec(5, seed=9)
    a = generate_population(spec, 30)
    b = generate_population(spec, 30)
    for da, db in zip(a, b):
        assert da.client_id == db.client_id
        assert np.array_equal(da.features, db.features)
        assert np.array_equal(da.labels, db.labels)
    c = generate_population(PopulationSpec(5, seed=10), 30)
    assert any(not np.array_equal(da.labels, dc.labels) for da, dc in zip(a, c))


def test_shapes_and_label_values():
    spec = PopulationSpec(3, slots_per_day=2)
    pop = generate_population(spec, 10)
    assert len(pop) == 3
    for ds in pop:
        assert ds.features.shape == (20, FEATURE_DIM)
        assert ds.labels.shape == (20,)
        assert set(np.unique(ds.labels)) <= {0.0, 1.0}
        assert len(ds) == 20


def test_day_of_week_one_hot_and_slots():
    spec = PopulationSpec(1, slots_per_day=3)
    (ds,) = generate_population(spec, 14)
    onehot = ds.features[:, :7]
    assert np.array_equal(onehot.sum(axis=1), np.ones(42))
    for r in range(42):
        day, slot = divmod(r, 3)
        assert onehot[r].argmax() == day % 7
        assert ds.features[r, 7] == slot


def test_trailing_rate_matches_recompute():
    spec = PopulationSpec(1, base_adherence=0.7, seed=4)
    (ds,) = generate_population(spec, 30)
    window = 7 * spec.slots_per_day
    for r in range(len(ds)):
        past = ds.labels[max(0, r - window) : r]
        want = past.mean() if len(past) else 1.0
        assert ds.features[r, 8] == pytest.approx(want)


def test_pills_fraction_tracks_consumption_and_refills():
    spec = PopulationSpec(1, bottle_size=5, base_adherence=0.95, seed=2)
    (ds,) = generate_population(spec, 60)
    frac = ds.features[:, 9]
    assert frac.min() >= 0.0 and frac.max() <= 1.0
    pills = 5
    for r in range(len(ds)):
        assert frac[r] == pytest.approx(pills / 5)
        if ds.labels[r]:
            pills -= 1
            if pills == 0:
                pills = 5
    # with a 5-pill bottle and ~95% adherence, refills must have happened
    assert (frac == 1.0).sum() > 1


def test_weekend_dip_shows_in_pooled_rates():
    spec = PopulationSpec(50, base_adherence=0.9, weekend_dip=0.6, skew=0.0, seed=0)
    pop = generate_population(spec, 365)
    weekend, weekday = [], []
    for ds in pop:
        dow = ds.features[:, :7].argmax(axis=1)
        mask = np.isin(dow, (5, 6))
        weekend.append(ds.labels[mask])
        weekday.append(ds.labels[~mask])
    weekend_rate = np.concatenate(weekend).mean()
    weekday_rate = np.concatenate(weekday).mean()
    assert weekend_rate == pytest.approx(0.9 * 0.6, abs=0.03)
    assert weekday_rate == pytest.approx(0.9, abs=0.03)


def test_skew_spreads_client_rates():
    def weekday_rates(skew):
        pop = generate_population(PopulationSpec(30, 0.8, 0.4, skew, seed=1), 200)
        rates = []
        for ds in pop:
            dow = ds.features[:, :7].argmax(axis=1)
            rates.append(ds.labels[~np.isin(dow, (5, 6))].mean())
        return np.array(rates)

    flat = weekday_rates(0.0)
    spread = weekday_rates(2.0)
    assert flat.std() < 0.05
    assert spread.std() > 0.15


def test_build_features_layout():
    x = build_features(3, 1, 0.5, 0.25)
    assert x.shape == (FEATURE_DIM,)
    assert x[3] == 1.0 and x[:7].sum() == 1.0
    assert x[7] == 1.0 and x[8] == 0.5 and x[9] == 0.25


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(n_clients=0),
        dict(n_clients=1, base_adherence=0.0),
        dict(n_clients=1, base_adherence=1.0),
        dict(n_clients=1, weekend_dip=-0.1),
        dict(n_clients=1, weekend_dip=1.1),
        dict(n_clients=1, skew=-1.0),
        dict(n_clients=1, slots_per_day=0),
        dict(n_clients=1, bottle_size=0),
    ],
)
def test_spec_validation(kwargs):
    with pytest.raises(PopulationSpecError):
        PopulationSpec(**kwargs)


def test_days_validation():
    with pytest.raises(PopulationSpecError):
        generate_population(PopulationSpec(1), 0)
