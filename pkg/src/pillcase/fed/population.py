"""Synthetic adherence histories for a fleet of simulated patients.

Each client is a patient with a personal base adherence probability; on
weekends that probability is multiplied by a dip factor (people slip out
of routine).  Day 0 is a Monday, days are 86400 s.  The per-client base
rates are spread in logit space by ``skew`` so a skew of 0 gives a
perfectly homogeneous population and larger values give heterogeneity.

A row is one scheduled intake slot.  Features are computed strictly from
information available before the event (causal): day-of-week one-hot,
slot index, the trailing 7-day adherence rate, and the fraction of pills
left in the bottle.  The label is whether the dose was actually taken.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

FEATURE_DIM = 10  # 7 day-of-week + slot index + trailing rate + pills fraction
SECONDS_PER_DAY = 86400
WEEKEND_DAYS = (5, 6)  # Saturday, Sunday with Monday = 0


class PopulationSpecError(ValueError):
    pass


@dataclass(frozen=True)
class PopulationSpec:
    n_clients: int
    base_adherence: float = 0.9
    weekend_dip: float = 0.6
    skew: float = 0.0
    slots_per_day: int = 2
    bottle_size: int = 60
    seed: int = 0

    def __post_init__(self):
        if self.n_clients < 1:
            raise PopulationSpecError("need at least one client")
        if not 0.0 < self.base_adherence < 1.0:
            raise PopulationSpecError("base_adherence must be inside (0, 1)")
        if not 0.0 <= self.weekend_dip <= 1.0:
            raise PopulationSpecError("weekend_dip must be in [0, 1]")
        if self.skew < 0:
            raise PopulationSpecError("skew must be >= 0")
        if self.slots_per_day < 1:
            raise PopulationSpecError("slots_per_day must be >= 1")
        if self.bottle_size < 1:
            raise PopulationSpecError("bottle_size must be >= 1")


@dataclass(frozen=True, eq=False)
class ClientDataset:
    """One client's local data.  Never serialized off the client."""

    client_id: str
    features: np.ndarray  # (n, FEATURE_DIM) float64
    labels: np.ndarray  # (n,) float64 in {0, 1}

    def __len__(self) -> int:
        return len(self.labels)


def build_features(
    day_of_week: int, slot_index: int, trailing_rate: float, pills_fraction: float
) -> np.ndarray:
    x = np.zeros(FEATURE_DIM)
    x[day_of_week] = 1.0
    x[7] = float(slot_index)
    x[8] = trailing_rate
    x[9] = pills_fraction
    return x


def generate_population(spec: PopulationSpec, days: int) -> list[ClientDataset]:
    if days < 1:
        raise PopulationSpecError("days must be >= 1")
    rng = np.random.default_rng(spec.seed)
    base_logit = math.log(spec.base_adherence / (1.0 - spec.base_adherence))
    datasets = []
    for i in range(spec.n_clients):
        z = rng.standard_normal()
        p_base = 1.0 / (1.0 + math.exp(-(base_logit + spec.skew * z)))
        history: deque = deque(maxlen=7 * spec.slots_per_day)
        pills = spec.bottle_size
        rows = np.empty((days * spec.slots_per_day, FEATURE_DIM))
        labels = np.empty(days * spec.slots_per_day)
        r = 0
        for day in range(days):
            dow = day % 7
            p = p_base * (spec.weekend_dip if dow in WEEKEND_DAYS else 1.0)
            for slot in range(spec.slots_per_day):
                rate = sum(history) / len(history) if history else 1.0
                rows[r] = build_features(dow, slot, rate, pills / spec.bottle_size)
                taken = rng.random() < p
                labels[r] = 1.0 if taken else 0.0
                history.append(1 if taken else 0)
                if taken:
                    pills -= 1
                    if pills == 0:
                        pills = spec.bottle_size  # refilled before the next slot
                r += 1
        datasets.append(ClientDataset(f"client-{i:03d}", rows, labels))
    return datasets
