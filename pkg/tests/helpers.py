"""Fixture builders and brute-force reference implementations for the tests.

The reference functions here deliberately avoid the package's own code
paths: plain Python loops, explicit permutations, direct sums.
"""

import math

import numpy as np

from rankadapt.data import Dataset, Query


def random_query(rng, n_docs=None, n_features=3, qid="q"):
    n = n_docs if n_docs is not None else int(rng.integers(2, 11))
    labels = rng.integers(0, 5, size=n)
    feats = rng.normal(size=(n, n_features))
    return Query(qid, labels, feats)


def random_dataset(rng, n_queries=20, docs=(5, 15), n_features=5):
    qs = []
    for i in range(n_queries):
        n = int(rng.integers(docs[0], docs[1] + 1))
        qs.append(Query(f"q{i}", rng.integers(0, 5, size=n), rng.normal(size=(n, n_features))))
    return Dataset(tuple(qs), n_features)


def label_feature_dataset(rng, n_queries=20, n_docs=10, n_features=4):
    """Feature 0 equals the label; the rest are noise."""
    qs = []
    for i in range(n_queries):
        labels = rng.integers(0, 5, size=n_docs)
        X = rng.normal(size=(n_docs, n_features))
        X[:, 0] = labels
        qs.append(Query(f"q{i}", labels, X))
    return Dataset(tuple(qs), n_features)


def separable_dataset(seed=0, n_queries=40, n_docs=10, n_features=5):
    """Label is the indicator of feature 0 > 0.5."""
    rng = np.random.default_rng(seed)
    qs = []
    for i in range(n_queries):
        X = rng.uniform(size=(n_docs, n_features))
        labels = (X[:, 0] > 0.5).astype(int)
        if labels.max() == 0:
            X[0, 0] = 0.9
            labels[0] = 1
        qs.append(Query(f"q{i}", labels, X))
    return Dataset(tuple(qs), n_features)


def ref_dcg(labels_ranked, k):
    total = 0.0
    for j, r in enumerate(labels_ranked[:k], start=1):
        total += (2 ** int(r) - 1) / math.log(1 + j)
    return total


def ref_ranking(scores):
    # descending score, ties by index: plain Python sort is stable
    return sorted(range(len(scores)), key=lambda i: -scores[i])


def ref_ndcg(labels, scores, k):
    labels = [int(x) for x in labels]
    ideal = ref_dcg(sorted(labels, reverse=True), k)
    if ideal == 0:
        return None
    order = ref_ranking(list(scores))
    return ref_dcg([labels[i] for i in order], k) / ideal


def ref_ndcg_after_swap(labels, scores, i, j, k):
    """NDCG of the current ranking with documents i and j trading places."""
    labels = [int(x) for x in labels]
    ideal = ref_dcg(sorted(labels, reverse=True), k)
    if ideal == 0:
        return 0.0
    order = ref_ranking(list(scores))
    pi, pj = order.index(i), order.index(j)
    order[pi], order[pj] = j, i
    return ref_dcg([labels[d] for d in order], k) / ideal


def ref_mean_report(dataset, scores_by_query, cutoffs, ave_range=range(1, 11)):
    """(per-cutoff means, ave_ndcg) by straightforward loops."""
    all_k = sorted(set(cutoffs) | set(ave_range))
    rows = []
    for q, s in zip(dataset.queries, scores_by_query):
        vals = {k: ref_ndcg(q.labels, s, k) for k in all_k}
        if vals[all_k[0]] is not None:
            rows.append(vals)
    means = {k: sum(r[k] for r in rows) / len(rows) for k in all_k}
    ave = sum(means[k] for k in ave_range) / len(ave_range)
    return means, ave
