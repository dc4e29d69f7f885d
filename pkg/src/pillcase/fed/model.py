"""Local logistic model: the only thing a client ever shares is a delta.

Parameters are a flat vector, weights then bias.  Training is full-batch
gradient descent on the class-weighted cross entropy (inverse-frequency
weights, so the rarer missed doses are not drowned out).  The reported
``local_loss`` is the plain unweighted mean loss after training, which is
what fairness-aware aggregation compares across clients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .population import FEATURE_DIM, ClientDataset

PARAM_DIM = FEATURE_DIM + 1  # weights + trailing bias

_P_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class ClientUpdate:
    """The full client-to-coordinator payload.  No raw rows, ever."""

    client_id: str
    update: np.ndarray  # parameter delta, shape (PARAM_DIM,)
    n_samples: int
    local_loss: float


def init_params() -> np.ndarray:
    return np.zeros(PARAM_DIM)


def predict_proba(params: np.ndarray, features: np.ndarray) -> np.ndarray:
    scores = features @ params[:-1] + params[-1]
    return 0.5 * (1.0 + np.tanh(0.5 * scores))  # stable sigmoid


def class_weights(labels: np.ndarray) -> np.ndarray:
    """Per-sample inverse-frequency weights; a lone class gets weight 1."""
    n = len(labels)
    n_pos = float(labels.sum())
    n_neg = n - n_pos
    if n_pos == 0 or n_neg == 0:
        return np.ones(n)
    return np.where(labels > 0.5, n / (2.0 * n_pos), n / (2.0 * n_neg))


def loss_and_gradient(params, features, labels, sample_weight=None):
    """Weighted mean cross entropy and its gradient in one pass."""
    if sample_weight is None:
        sample_weight = np.ones(len(labels))
    p = predict_proba(params, features)
    p = np.clip(p, _P_FLOOR, 1.0 - _P_FLOOR)
    ce = -(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p))
    total_w = sample_weight.sum()
    loss = float((sample_weight * ce).sum() / total_w)
    dz = sample_weight * (p - labels) / total_w
    grad = np.empty_like(params)
    grad[:-1] = features.T @ dz
    grad[-1] = dz.sum()
    return loss, grad


def mean_loss(params, features, labels) -> float:
    return loss_and_gradient(params, features, labels)[0]


def local_train(
    params: np.ndarray,
    dataset: ClientDataset,
    epochs: int,
    lr: float,
    class_weighted: bool = True,
) -> ClientUpdate | None:
    """Train locally from the global params; None signals an abstain."""
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    if lr <= 0:
        raise ValueError("lr must be > 0")
    if len(dataset) == 0:
        return None
    X, y = dataset.features, dataset.labels
    sw = class_weights(y) if class_weighted else None
    p = params.copy()
    for _ in range(epochs):
        _, grad = loss_and_gradient(p, X, y, sw)
        p -= lr * grad
    return ClientUpdate(
        dataset.client_id, p - params, len(dataset), mean_loss(p, X, y)
    )
