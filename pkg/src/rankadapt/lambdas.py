"""Lambda gradients: the pairwise cross-entropy cost, its derivative and the
per-document residuals / Newton weights used by every trainer."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.special import expit

from .data import Query
from .metrics import NdcgConfig, _discounts, _gains, ideal_dcg, rank_order


@dataclass(frozen=True)
class LambdaGradients:
    residuals: np.ndarray
    newton_weights: np.ndarray


def pair_cost(s_i, s_j):
    """Cross-entropy pair cost ``s_j - s_i + log(1 + exp(s_i - s_j))``.

    Evaluated as ``log(1 + exp(-o))`` with ``o = s_i - s_j`` so large score
    gaps neither overflow nor lose the small tail.
    """
    o = np.subtract(s_i, s_j, dtype=np.float64)
    out = np.logaddexp(0.0, -o)
    return float(out) if np.ndim(out) == 0 else out


def pair_cost_gradient(o):
    """Derivative of :func:`pair_cost` w.r.t. ``o = s_i - s_j``: ``-1 / (1 + exp(o))``."""
    out = -expit(-np.asarray(o, dtype=np.float64))
    return float(out) if np.ndim(out) == 0 else out


def compute_lambdas(query: Union[Query, Sequence[int]], scores,
                    config: NdcgConfig = NdcgConfig()) -> LambdaGradients:
    """Residuals and Newton weights for one query at the given scores.

    Every pair with distinct labels contributes. With ``i`` the better
    labelled document, ``rho = 1 / (1 + exp(s_i - s_j))`` and ``g`` the
    absolute NDCG change from swapping the pair::

        residuals[i] += g * rho          residuals[j] -= g * rho
        weights[i]   += g * rho * (1 - rho)   (same for j)

    Queries without a relevant document get all-zero gradients.
    """
    labels = query.labels if isinstance(query, Query) else np.asarray(query, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    n = labels.size
    if scores.shape != labels.shape:
        raise ValueError(f"got {scores.size} scores for {n} documents")
    residuals = np.zeros(n)
    weights = np.zeros(n)
    best = ideal_dcg(labels, config.truncation)
    if best == 0.0 or n < 2:
        return LambdaGradients(residuals, weights)

    pos = np.empty(n, dtype=np.int64)
    pos[rank_order(scores)] = np.arange(n)
    disc = _discounts(n, config.truncation)[pos]
    gain = _gains(labels)

    better = labels[:, None] > labels[None, :]
    delta = np.abs((gain[:, None] - gain[None, :]) * (disc[None, :] - disc[:, None])) / best
    rho = expit(scores[None, :] - scores[:, None])  # 1 / (1 + exp(s_i - s_j))
    lam = np.where(better, delta * rho, 0.0)
    hess = np.where(better, delta * rho * (1.0 - rho), 0.0)

    residuals = lam.sum(axis=1) - lam.sum(axis=0)
    weights = hess.sum(axis=1) + hess.sum(axis=0)
    return LambdaGradients(residuals, weights)


def dataset_lambdas(queries: Sequence[Query], scores: Sequence[np.ndarray],
                    config: NdcgConfig = NdcgConfig()) -> LambdaGradients:
    """Concatenate :func:`compute_lambdas` over queries in order."""
    parts = [compute_lambdas(q, s, config) for q, s in zip(queries, scores)]
    if not parts:
        return LambdaGradients(np.zeros(0), np.zeros(0))
    return LambdaGradients(np.concatenate([p.residuals for p in parts]),
                           np.concatenate([p.newton_weights for p in parts]))
