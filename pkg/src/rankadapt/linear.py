"""Linear LambdaRank: ``score = w . x`` trained with lambda gradients."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .lambdas import compute_lambdas
from .metrics import NdcgConfig
from .scorer import Scorer

logger = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


class LinearModel(Scorer):
    def __init__(self, weights):
        w = np.array(weights, dtype=np.float64).reshape(-1)
        if w.size == 0:
            raise ValueError("weights must be non-empty")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        w.setflags(write=False)
        self.weights = w
        self.feature_count = w.size

    @classmethod
    def zeros(cls, feature_count: int) -> "LinearModel":
        return cls(np.zeros(feature_count))

    def predict(self, X):
        return self._check(X) @ self.weights

    def __repr__(self):
        return f"LinearModel(feature_count={self.feature_count})"


def score_linear(model: LinearModel, features) -> float:
    return model.score(features)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    learning_rate: float = 1e-3
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be ≥ 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")


def train_linear_lambdarank(dataset: Dataset, config: TrainConfig = TrainConfig(),
                            ndcg_config: NdcgConfig = NdcgConfig()) -> LinearModel:
    """Fit a linear ranker by per-query lambda-gradient ascent from zero weights.

    For each query, ``w += learning_rate * sum_i residual_i * x_i``.
    Query order is reshuffled every epoch when ``config.shuffle``.
    """
    if len(dataset) == 0:
        raise ValueError("cannot train on an empty dataset")
    rng = np.random.default_rng(config.seed)
    w = np.zeros(dataset.feature_count)
    queries = dataset.queries
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(queries)) if config.shuffle else range(len(queries))
        for qi in order:
            q = queries[qi]
            with np.errstate(over="ignore", invalid="ignore"):
                grads = compute_lambdas(q, q.features @ w, ndcg_config)
                w = w + config.learning_rate * (grads.residuals @ q.features)
        if not np.all(np.isfinite(w)):
            raise TrainingError(f"non-finite weights after epoch {epoch}")
        logger.debug("epoch %d |w|=%.6g", epoch, float(np.linalg.norm(w)))
    return LinearModel(w)
