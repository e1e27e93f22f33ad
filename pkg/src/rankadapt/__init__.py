"""Ranking model adaptation: model interpolation and lambda-gradient boosting."""

from .augment import (AugmentConfig, cosine_similarity, knn_expand, label_entropy, merge_datasets,
                      regroup_by_source, select_seed_queries)
from .boosting import (BoostConfig, BoostedEnsemble, SingleFeature, Stage, TreeBasis,
                       ensemble_score, lambda_boost, lambda_smart, ls_loss, optimal_beta)
from .data import Dataset, Document, LetorParseError, Query, format_letor, parse_letor, read_letor, split_dataset, write_letor
from .interpolation import (InterpolatedModel, PowellConfig, interpolated_score,
                            optimize_weights_lambdarank, optimize_weights_powell)
from .lambdas import LambdaGradients, compute_lambdas, pair_cost, pair_cost_gradient
from .linear import LinearModel, TrainConfig, score_linear, train_linear_lambdarank
from .metrics import (MetricsReport, NdcgConfig, UndefinedMetricError, dcg_at_k, delta_ndcg, mean_ndcg, ndcg_at_k,
                      paired_t_test)
from .modelio import load_model, save_model
from .scorer import Scorer
from .trees import RegressionTree, fit_regression_tree, tree_predict

__version__ = "0.1.0"
