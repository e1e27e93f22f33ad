# NDCG, the swap delta, and lambda gradients on one small query

import numpy as np

from rankadapt.data import Query
from rankadapt.lambdas import compute_lambdas
from rankadapt.metrics import dcg_at_k, delta_ndcg, ndcg_at_k

q = Query("demo", [3, 0, 2, 1, 0], np.eye(5))
scores = np.array([0.1, 0.9, 0.5, 0.3, -0.2])

# ranking by score puts the irrelevant document first
order = np.argsort(-scores, kind="stable")
print("ranked labels:", q.labels[order])
print("DCG@5 :", dcg_at_k(q.labels[order], 5))
print("NDCG@5:", ndcg_at_k(q, scores, 5))

# swapping the top two documents, closed form vs recompute
d = delta_ndcg(q, scores, 0, 1, 5)
swapped = scores.copy()
swapped[[0, 1]] = swapped[[1, 0]]
print("delta (closed form):", d)
print("delta (recomputed) :", ndcg_at_k(q, swapped, 5) - ndcg_at_k(q, scores, 5))

# lambdas push relevant documents up, irrelevant down, and sum to zero
g = compute_lambdas(q, scores)
print("residuals     :", np.round(g.residuals, 4))
print("sum           :", g.residuals.sum())
print("newton weights:", np.round(g.newton_weights, 4))

# a few gradient steps directly on the scores
s = scores.copy()
for step in range(5):
    s = s + 2.0 * compute_lambdas(q, s).residuals
    print(step, "NDCG@5 =", round(ndcg_at_k(q, s, 5), 4))
