# Mixing two rankers: Powell search vs LambdaRank on component scores

import numpy as np

from rankadapt.data import Dataset, Query
from rankadapt.interpolation import (InterpolatedModel, optimize_weights_lambdarank,
                                     optimize_weights_powell)
from rankadapt.linear import LinearModel, TrainConfig
from rankadapt.metrics import mean_ndcg

rng = np.random.default_rng(3)
w_true = np.array([1.0, 0.6, -0.4])

qs = []
for i in range(30):
    X = rng.normal(size=(10, 3))
    labels = np.digitize(X @ w_true + 0.3 * rng.normal(size=10), [-0.5, 0.3, 1.0, 1.6])
    qs.append(Query(f"v{i}", labels, X))
valid = Dataset(tuple(qs), 3)

# each component sees only part of the signal
a = LinearModel([1.0, 0.0, 0.0])
b = LinearModel([0.0, 0.6, -0.4])
print("component a:", round(mean_ndcg(valid, a).ave_ndcg, 4))
print("component b:", round(mean_ndcg(valid, b).ave_ndcg, 4))

alphas = optimize_weights_powell([a, b], valid)
print("powell alphas:", np.round(alphas, 4),
      "Ave-NDCG", round(mean_ndcg(valid, InterpolatedModel([a, b], alphas)).ave_ndcg, 4))

alphas = optimize_weights_lambdarank([a, b], valid, TrainConfig(epochs=50, learning_rate=1e-2))
print("lambdarank alphas:", np.round(alphas, 4),
      "Ave-NDCG", round(mean_ndcg(valid, InterpolatedModel([a, b], alphas)).ave_ndcg, 4))

# the objective only depends on the ratio of the weights
for t in (0.0, 0.25, 0.5, 0.75, 1.0):
    m = InterpolatedModel([a, b], [1 - t, t])
    print("alpha_b = %.2f  Ave-NDCG %.4f" % (t, mean_ndcg(valid, m).ave_ndcg))
