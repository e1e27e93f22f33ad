# LambdaBoost and LambdaSMART adapting a weak background ranker

import numpy as np

from rankadapt.boosting import BoostConfig, lambda_boost, lambda_smart
from rankadapt.data import Dataset, Query
from rankadapt.linear import LinearModel
from rankadapt.metrics import mean_ndcg

rng = np.random.default_rng(0)


def make(n_queries, prefix):
    qs = []
    for i in range(n_queries):
        X = rng.normal(size=(12, 4))
        # relevance needs both features 0 and 1 to be high: not linear
        u = np.minimum(X[:, 0], X[:, 1]) + 0.2 * X[:, 2]
        labels = np.digitize(u, [-0.5, 0.0, 0.5, 1.0])
        qs.append(Query(f"{prefix}{i}", labels, X))
    return Dataset(tuple(qs), 4)


train, test = make(40, "tr"), make(40, "te")
background = LinearModel([0.5, 0.0, 0.2, 0.0])
print("background    train %.4f  test %.4f" % (mean_ndcg(train, background).ave_ndcg,
                                                mean_ndcg(test, background).ave_ndcg))

# one feature per round: a reweighting of the linear model
boost = lambda_boost(background, train, BoostConfig(rounds=50))
print("LambdaBoost   train %.4f  test %.4f" % (mean_ndcg(train, boost).ave_ndcg,
                                                mean_ndcg(test, boost).ave_ndcg))
print("features picked:", [st.basis.feature_index for st in boost.stages[:10]], "...")

# trees can express the min() interaction
curve = []
smart = lambda_smart(background, train, BoostConfig(rounds=50, leaves=8),
                     trace=lambda m, model, ave: curve.append(ave))
print("LambdaSMART   train %.4f  test %.4f" % (mean_ndcg(train, smart).ave_ndcg,
                                                mean_ndcg(test, smart).ave_ndcg))
print("train Ave-NDCG every 10 rounds:", np.round(curve[::10], 4))

# node-level randomization, same budget
rand = lambda_smart(background, train, BoostConfig(rounds=50, leaves=8, randomize=True, seed=1))
print("randomized    train %.4f  test %.4f" % (mean_ndcg(train, rand).ave_ndcg,
                                                mean_ndcg(test, rand).ave_ndcg))
