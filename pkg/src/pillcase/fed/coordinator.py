"""Round loop and aggregation.  The coordinator sees updates, never rows.

Two aggregation modes over the client deltas:

* ``plain``: weights proportional to n_samples (classic federated
  averaging).
* ``fair``: weights proportional to n_samples * local_loss**q, so
  struggling clients pull the global model toward themselves; q = 0
  reduces exactly to plain.

Abstaining clients (no data) contribute weight zero.  If every client
abstains the round is a no-op.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .model import ClientUpdate, init_params, local_train, mean_loss, predict_proba
from .population import ClientDataset, PopulationSpec, generate_population

PLAIN = "plain"
FAIR = "fair"


def aggregate(
    params: np.ndarray,
    updates: list[ClientUpdate | None],
    mode: str = PLAIN,
    q: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Apply one round of updates; returns (new_params, weights).

    Weights align with the non-abstaining updates, sum to 1 when any
    weight is positive, and are all zero on a no-op round.
    """
    if mode not in (PLAIN, FAIR):
        raise ValueError(f"unknown aggregation mode {mode!r}")
    if q < 0:
        raise ValueError("q must be >= 0")
    active = [u for u in updates if u is not None]
    if not active:
        return params.copy(), np.zeros(0)
    n = np.array([u.n_samples for u in active], dtype=float)
    if mode == PLAIN:
        raw = n
    else:
        losses = np.array([u.local_loss for u in active])
        raw = n * np.power(losses, q)
    total = raw.sum()
    if total == 0:
        return params.copy(), raw
    weights = raw / total
    delta = np.zeros_like(params)
    for w, u in zip(weights, active):
        delta += w * u.update
    return params + delta, weights


@dataclass(frozen=True)
class FairnessReport:
    variance: float
    max_loss: float
    worst_decile_mean: float


def evaluate_fairness(losses) -> FairnessReport:
    arr = np.asarray(list(losses), dtype=float)
    if arr.size == 0:
        raise ValueError("no losses to evaluate")
    k = math.ceil(arr.size / 10)
    worst = np.sort(arr)[-k:]
    return FairnessReport(float(np.var(arr)), float(arr.max()), float(worst.mean()))


@dataclass(frozen=True)
class RoundMetrics:
    round_index: int
    selected: tuple[str, ...]
    global_loss: float
    global_accuracy: float
    client_losses: tuple[float, ...]  # holdout loss per client, fleet order
    fairness_variance: float
    fairness_max: float
    fairness_worst_decile: float

    def to_dict(self) -> dict:
        return {
            "round": self.round_index,
            "selected": list(self.selected),
            "global_loss": self.global_loss,
            "global_accuracy": self.global_accuracy,
            "client_losses": list(self.client_losses),
            "fairness_variance": self.fairness_variance,
            "fairness_max": self.fairness_max,
            "fairness_worst_decile": self.fairness_worst_decile,
        }


@dataclass
class FederationHistory:
    mode: str
    q: float
    seed: int
    baseline_accuracy: float
    majority_class: int
    rounds: list[RoundMetrics] = field(default_factory=list)
    final_params: np.ndarray | None = None

    @property
    def final_accuracy(self) -> float:
        return self.rounds[-1].global_accuracy if self.rounds else 0.0

    def to_ndjson(self) -> str:
        lines = [
            json.dumps(
                {
                    "mode": self.mode,
                    "q": self.q,
                    "seed": self.seed,
                    "baseline_accuracy": self.baseline_accuracy,
                    "majority_class": self.majority_class,
                },
                sort_keys=True,
            )
        ]
        lines += [json.dumps(r.to_dict(), sort_keys=True) for r in self.rounds]
        lines.append(
            json.dumps(
                {
                    "final_accuracy": self.final_accuracy,
                    "final_params": list(self.final_params),
                },
                sort_keys=True,
            )
        )
        return "\n".join(lines) + "\n"


def _split(dataset: ClientDataset, rng, holdout_fraction: float):
    """Train/eval split; fraction 0 (or a lone row) evaluates in-sample."""
    n = len(dataset)
    n_hold = int(round(n * holdout_fraction))
    if n_hold == 0 or n < 2:
        return dataset, dataset
    n_hold = min(n_hold, n - 1)
    idx = rng.permutation(n)
    hold, train = idx[:n_hold], idx[n_hold:]
    train_ds = ClientDataset(dataset.client_id, dataset.features[train], dataset.labels[train])
    hold_ds = ClientDataset(dataset.client_id, dataset.features[hold], dataset.labels[hold])
    return train_ds, hold_ds


def run_federation(
    spec: PopulationSpec,
    days: int = 365,
    rounds: int = 100,
    clients_per_round: int = 10,
    mode: str = PLAIN,
    q: float = 0.0,
    epochs: int = 5,
    lr: float = 0.5,
    holdout_fraction: float = 0.2,
    class_weighted: bool = True,
) -> FederationHistory:
    """Simulate a whole federation; deterministic for a given spec.seed."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if not 1 <= clients_per_round:
        raise ValueError("clients_per_round must be >= 1")
    if not 0.0 <= holdout_fraction < 1.0:
        raise ValueError("holdout_fraction must be in [0, 1)")

    population = generate_population(spec, days)
    rng = np.random.default_rng([spec.seed, 0xFED])
    splits = [_split(ds, rng, holdout_fraction) for ds in population]
    train_sets = [t for t, _ in splits]
    holdouts = [h for _, h in splits]

    hold_X = np.concatenate([h.features for h in holdouts])
    hold_y = np.concatenate([h.labels for h in holdouts])
    train_y = np.concatenate([t.labels for t in train_sets])
    majority = 1 if train_y.mean() >= 0.5 else 0
    baseline_accuracy = float((hold_y == majority).mean())

    history = FederationHistory(mode, q, spec.seed, baseline_accuracy, majority)
    params = init_params()
    n_pick = min(clients_per_round, len(population))

    for r in range(rounds):
        chosen = rng.choice(len(population), size=n_pick, replace=False)
        updates = [
            local_train(params, train_sets[i], epochs, lr, class_weighted)
            for i in chosen
        ]
        params, _ = aggregate(params, updates, mode, q)

        probs = predict_proba(params, hold_X)
        accuracy = float(((probs >= 0.5) == (hold_y > 0.5)).mean())
        global_loss = mean_loss(params, hold_X, hold_y)
        client_losses = tuple(
            mean_loss(params, h.features, h.labels) for h in holdouts
        )
        fairness = evaluate_fairness(client_losses)
        history.rounds.append(
            RoundMetrics(
                r,
                tuple(population[i].client_id for i in chosen),
                global_loss,
                accuracy,
                client_losses,
                fairness.variance,
                fairness.max_loss,
                fairness.worst_decile_mean,
            )
        )

    history.final_params = params
    return history
