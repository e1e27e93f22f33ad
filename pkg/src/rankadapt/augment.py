"""Expanding a small in-domain training set with near-duplicate background documents.

Low label-entropy queries from the in-domain data form the seed set; every
background document whose ``k`` nearest seed documents (cosine distance)
are all within ``max_distance``, and at least one of which carries the same
label, is copied out as a single-document query.
"""

from __future__ import annotations

import logging
import math
import warnings
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .data import Dataset, Query

logger = logging.getLogger(__name__)

# cosine distances this close to zero are rounding noise from identical directions
_ZERO_DISTANCE = 1e-12


@dataclass(frozen=True)
class AugmentConfig:
    seed_query_count: int
    k: int = 3
    max_distance: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.seed_query_count < 1:
            raise ValueError("seed_query_count must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0 <= self.max_distance <= 2:
            raise ValueError("max_distance must be in [0, 2]")


def label_entropy(query) -> float:
    labels = query.labels if isinstance(query, Query) else np.asarray(query)
    if len(labels) == 0:
        raise ValueError("empty query")
    n = len(labels)
    h = 0.0
    for c in Counter(int(l) for l in labels).values():
        p = c / n
        h -= p * math.log2(p)
    return h + 0.0  # normalise -0.0


def select_seed_queries(in_domain: Dataset, config: AugmentConfig) -> Dataset:
    """The ``seed_query_count`` lowest-entropy queries, ties by qid."""
    if config.seed_query_count > len(in_domain):
        raise ValueError(f"seed_query_count {config.seed_query_count} exceeds "
                         f"{len(in_domain)} queries")
    ranked = sorted(in_domain.queries, key=lambda q: (label_entropy(q), q.qid))
    return Dataset(tuple(ranked[:config.seed_query_count]), in_domain.feature_count,
                   in_domain.feature_names)


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("vectors differ in dimension")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("undefined cosine")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def cosine_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``1 - cos`` between every row of ``A`` and every row of ``B`` (no zero rows)."""
    An = A / np.linalg.norm(A, axis=1, keepdims=True)
    Bn = B / np.linalg.norm(B, axis=1, keepdims=True)
    d = 1.0 - np.clip(An @ Bn.T, -1.0, 1.0)
    d[np.abs(d) < _ZERO_DISTANCE] = 0.0
    return d


def knn_expand(seeds: Dataset, background: Dataset, config: AugmentConfig) -> Dataset:
    """Background documents accepted by the k-nearest-seed test, one query each.

    Neighbour ties are broken by seed document order. New qids are
    ``aug-<original qid>-<document index>``; output follows background
    scan order. Zero feature vectors are skipped with a warning.
    """
    if seeds.feature_count != background.feature_count:
        raise ValueError("seed and background feature counts differ")
    S, s_labels, _ = seeds.stacked()
    keep = np.linalg.norm(S, axis=1) > 0
    if not keep.all():
        warnings.warn(f"skipping {int((~keep).sum())} zero-vector seed documents")
        S, s_labels = S[keep], s_labels[keep]
    if S.shape[0] == 0:
        raise ValueError("seed set has no documents")
    if S.shape[0] < config.k:
        raise ValueError(f"k={config.k} exceeds the {S.shape[0]} seed documents")

    accepted = []
    skipped = 0
    for q in background.queries:
        nonzero = np.linalg.norm(q.features, axis=1) > 0
        skipped += int((~nonzero).sum())
        rows = np.flatnonzero(nonzero)
        if rows.size == 0:
            continue
        dist = cosine_distances(q.features[rows], S)
        nearest = np.argsort(dist, axis=1, kind="stable")[:, :config.k]
        near_d = np.take_along_axis(dist, nearest, axis=1)
        close = np.all(near_d <= config.max_distance, axis=1)
        same_label = np.any(s_labels[nearest] == q.labels[rows][:, None], axis=1)
        for r in rows[close & same_label]:
            accepted.append(Query(f"aug-{q.qid}-{r}", q.labels[r:r + 1], q.features[r:r + 1]))
    if skipped:
        warnings.warn(f"skipped {skipped} zero-vector background documents")
    logger.info("knn_expand accepted %d of %d documents", len(accepted),
                background.document_count)
    return Dataset(tuple(accepted), background.feature_count, background.feature_names)


def regroup_by_source(expanded: Dataset) -> Dataset:
    """Merge singleton ``aug-<qid>-<index>`` queries back into one query per source.

    A singleton query yields no document pairs and so no lambda gradient;
    regrouping restores pairs among documents harvested from the same
    background query. Groups keep first-appearance order.
    """
    groups: dict[str, list] = {}
    for q in expanded.queries:
        if not q.qid.startswith("aug-"):
            raise ValueError(f"not an augmented qid: {q.qid!r}")
        source = q.qid[4:].rsplit("-", 1)[0]
        groups.setdefault(source, []).append(q)
    queries = tuple(Query(f"aug-{src}", np.concatenate([q.labels for q in qs]),
                          np.vstack([q.features for q in qs]))
                    for src, qs in groups.items())
    return Dataset(queries, expanded.feature_count, expanded.feature_names)


def merge_datasets(first: Dataset, second: Dataset) -> Dataset:
    if first.feature_count != second.feature_count:
        raise ValueError("feature counts differ")
    return Dataset(first.queries + second.queries, first.feature_count, first.feature_names)
