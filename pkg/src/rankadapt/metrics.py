"""NDCG family, pair-swap NDCG deltas and paired significance testing.

The discount uses the natural logarithm, ``1 / log(1 + j)`` for 1-based rank
``j``. The base cancels in NDCG but shows up in raw DCG values.
Score ties are broken by original document index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import stats

from .data import Dataset, Query

DEFAULT_CUTOFFS = (1, 3, 10)


class UndefinedMetricError(ValueError):
    """Every query has all-zero labels, so NDCG is undefined throughout."""


@dataclass(frozen=True)
class NdcgConfig:
    truncation: int = 10
    ave_ndcg_range: tuple[int, int] = (1, 10)

    def __post_init__(self):
        if self.truncation < 1:
            raise ValueError("truncation must be >= 1")
        lo, hi = self.ave_ndcg_range
        if lo < 1 or lo > hi:
            raise ValueError("ave_ndcg_range must satisfy 1 <= start <= end")

    @property
    def ave_cutoffs(self) -> tuple[int, ...]:
        lo, hi = self.ave_ndcg_range
        return tuple(range(lo, hi + 1))


@dataclass
class MetricsReport:
    ndcg_at: dict[int, float]
    ave_ndcg: float
    per_query: list[tuple[str, dict[int, float]]]
    excluded: int = 0
    ave_cutoffs: tuple[int, ...] = field(default=tuple(range(1, 11)))

    def per_query_ave(self) -> dict[str, float]:
        """Per-query mean NDCG over the Ave-NDCG cutoffs."""
        return {qid: float(np.mean([v[k] for k in self.ave_cutoffs]))
                for qid, v in self.per_query}

    def tsv_row(self, name: str, cutoffs: Sequence[int] = DEFAULT_CUTOFFS) -> str:
        vals = [f"{self.ndcg_at[k]:.4f}" for k in cutoffs] + [f"{self.ave_ndcg:.4f}"]
        return "\t".join([name, *vals])


def tsv_header(cutoffs: Sequence[int] = DEFAULT_CUTOFFS) -> str:
    return "\t".join(["model", *(f"NDCG@{k}" for k in cutoffs), "AveNDCG"])


def _labels_of(query) -> np.ndarray:
    if isinstance(query, Query):
        return query.labels
    return np.asarray(query, dtype=np.int64)


def _gains(labels: np.ndarray) -> np.ndarray:
    return np.exp2(labels.astype(np.float64)) - 1.0


def _discounts(n: int, k: int) -> np.ndarray:
    """Discount per 0-based rank position; zero at and beyond the cutoff."""
    d = np.zeros(n)
    m = min(n, k)
    d[:m] = 1.0 / np.log(2.0 + np.arange(m))
    return d


def rank_order(scores) -> np.ndarray:
    """Document indices sorted by descending score, ties by index."""
    return np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")


def dcg_at_k(labels_in_rank_order, k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    labels = np.asarray(labels_in_rank_order, dtype=np.int64)[:k]
    if labels.size == 0:
        return 0.0
    return float(np.sum(_gains(labels) / np.log(2.0 + np.arange(labels.size))))


def ideal_dcg(labels, k: int) -> float:
    return dcg_at_k(np.sort(_labels_of(labels))[::-1], k)


def ndcg_at_k(query, scores, k: Union[int, NdcgConfig] = 10) -> Optional[float]:
    """NDCG at cutoff ``k`` of the ranking induced by ``scores``.

    Returns None when no document is relevant (ideal DCG is zero).
    """
    if isinstance(k, NdcgConfig):
        k = k.truncation
    labels = _labels_of(query)
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != labels.shape:
        raise ValueError(f"got {scores.size} scores for {labels.size} documents")
    best = ideal_dcg(labels, k)
    if best == 0.0:
        return None
    return dcg_at_k(labels[rank_order(scores)], k) / best


def _ndcg_curve(labels: np.ndarray, scores: np.ndarray, cutoffs: Sequence[int]
                ) -> Optional[dict[int, float]]:
    # one sort serves every cutoff
    kmax = max(cutoffs)
    gains_ranked = _gains(labels[rank_order(scores)])[:kmax]
    gains_ideal = _gains(np.sort(labels)[::-1])[:kmax]
    disc = 1.0 / np.log(2.0 + np.arange(gains_ranked.size))
    dcg = np.cumsum(gains_ranked * disc)
    idcg = np.cumsum(gains_ideal * disc)
    if idcg[-1] == 0.0:
        return None
    out = {}
    for k in cutoffs:
        j = min(k, dcg.size) - 1
        out[k] = float(dcg[j] / idcg[j])
    return out


def evaluate_scores(queries: Sequence[Query], scores: Sequence[np.ndarray],
                    config: NdcgConfig = NdcgConfig(),
                    cutoffs: Sequence[int] = DEFAULT_CUTOFFS) -> MetricsReport:
    """Build a report from precomputed per-query score arrays."""
    all_k = sorted(set(cutoffs) | set(config.ave_cutoffs))
    per_query = []
    excluded = 0
    for q, s in zip(queries, scores):
        s = np.asarray(s, dtype=np.float64)
        if s.shape != q.labels.shape:
            raise ValueError(f"query {q.qid!r}: got {s.size} scores for {len(q)} documents")
        curve = _ndcg_curve(q.labels, s, all_k)
        if curve is None:
            excluded += 1
        else:
            per_query.append((q.qid, curve))
    if not per_query:
        raise UndefinedMetricError("no evaluable queries")
    n = len(per_query)
    means = {k: sum(v[k] for _, v in per_query) / n for k in all_k}
    ave = sum(means[k] for k in config.ave_cutoffs) / len(config.ave_cutoffs)
    return MetricsReport({k: means[k] for k in cutoffs}, ave, per_query, excluded,
                         config.ave_cutoffs)


def score_queries(dataset: Dataset, scorer) -> list[np.ndarray]:
    """Score every query with one batched call; returns per-query arrays."""
    X, _, offsets = dataset.stacked()
    predict: Callable = getattr(scorer, "predict", scorer)
    s = np.asarray(predict(X), dtype=np.float64)
    return [s[offsets[i]:offsets[i + 1]] for i in range(len(dataset.queries))]


def mean_ndcg(dataset: Dataset, scorer, config: NdcgConfig = NdcgConfig(),
              cutoffs: Sequence[int] = DEFAULT_CUTOFFS) -> MetricsReport:
    """Mean NDCG of ``scorer`` over ``dataset``.

    ``scorer`` is a model with ``predict(X)`` or a plain callable on a
    feature matrix. Queries with no relevant document are skipped and
    counted in ``MetricsReport.excluded``.
    """
    return evaluate_scores(dataset.queries, score_queries(dataset, scorer), config, cutoffs)


def delta_ndcg(query, scores, i: int, j: int, k: Union[int, NdcgConfig] = 10) -> float:
    """NDCG change from swapping documents ``i`` and ``j`` in the current ranking.

    Only the two affected rank positions are touched.
    """
    if isinstance(k, NdcgConfig):
        k = k.truncation
    labels = _labels_of(query)
    n = labels.size
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"document index out of range for {n} documents")
    if i == j:
        raise ValueError("i and j must differ")
    best = ideal_dcg(labels, k)
    if best == 0.0:
        return 0.0
    pos = np.empty(n, dtype=np.int64)
    pos[rank_order(scores)] = np.arange(n)
    disc = _discounts(n, k)
    gi, gj = 2.0 ** labels[i] - 1.0, 2.0 ** labels[j] - 1.0
    return float((gi - gj) * (disc[pos[j]] - disc[pos[i]]) / best)


def paired_t_test(a, b) -> tuple[float, float]:
    """Two-sided paired t-test on ``a - b``.

    With zero variance in the differences the statistic is infinite; by
    convention p is 1.0 when the mean difference is also zero and 0.0
    otherwise (t is 0.0 or +/-inf accordingly).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-d and of equal length")
    n = a.size
    if n < 2:
        raise ValueError("need at least 2 paired observations")
    d = a - b
    mean = float(np.mean(d))
    sd = float(np.std(d, ddof=1))
    if sd == 0.0 or sd < 1e-14 * max(1.0, abs(mean)):
        if mean == 0.0 or abs(mean) < 1e-14:
            return 0.0, 1.0
        return math.copysign(math.inf, mean), 0.0
    t = mean / (sd / math.sqrt(n))
    p = float(2.0 * stats.t.sf(abs(t), df=n - 1))
    return float(t), p
