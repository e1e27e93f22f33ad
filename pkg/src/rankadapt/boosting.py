"""Boosted adaptation of a background ranker with lambda residuals.

Both trainers start from the background model's scores and append one
basis function per round:

* :func:`lambda_boost` picks a single input feature per round, scaled by its
  least-squares coefficient.
* :func:`lambda_smart` fits a regression tree to the residuals and replaces
  each leaf value by a Newton step ``sum(residual) / sum(newton_weight)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .data import Dataset
from .lambdas import dataset_lambdas
from .metrics import NdcgConfig, evaluate_scores
from .scorer import Scorer
from .trees import RegressionTree, fit_regression_tree

logger = logging.getLogger(__name__)


class DegenerateBasisError(ValueError):
    pass


@dataclass(frozen=True)
class SingleFeature:
    feature_index: int

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return X[:, self.feature_index]


@dataclass(frozen=True)
class TreeBasis:
    tree: RegressionTree

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return self.tree.predict(X)


BasisFunction = Union[SingleFeature, TreeBasis]


@dataclass(frozen=True)
class Stage:
    basis: BasisFunction
    coefficient: float = 1.0


@dataclass(frozen=True)
class BoostConfig:
    rounds: int = 500
    shrinkage: float = 0.5
    leaves: int = 20
    min_samples_per_leaf: int = 1
    randomize: bool = False
    sample_rate: float = 0.7
    seed: int = 0
    # bound on |leaf value| in LambdaSMART; None keeps the raw Newton quotient
    max_leaf_step: Optional[float] = 10.0

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not 0 < self.shrinkage <= 1:
            raise ValueError("shrinkage must be in (0, 1]")
        if self.leaves < 1 or self.min_samples_per_leaf < 1:
            raise ValueError("leaves and min_samples_per_leaf must be >= 1")
        if not 0 < self.sample_rate <= 1:
            raise ValueError("sample_rate must be in (0, 1]")
        if self.max_leaf_step is not None and not self.max_leaf_step > 0:
            raise ValueError("max_leaf_step must be positive or None")


class BoostedEnsemble(Scorer):
    """``background(x) + sum_m shrinkage * coefficient_m * basis_m(x)``."""

    def __init__(self, background: Scorer, stages: Sequence[Stage], shrinkage: float):
        self.background = background
        self.stages = tuple(stages)
        self.shrinkage = float(shrinkage)
        self.feature_count = background.feature_count
        for st in self.stages:
            if isinstance(st.basis, SingleFeature) and not 0 <= st.basis.feature_index < self.feature_count:
                raise ValueError(f"feature index {st.basis.feature_index} out of range")

    def stage_contribution(self, stage: Stage, X) -> np.ndarray:
        return self.shrinkage * stage.coefficient * stage.basis(self._check(X))

    def predict(self, X):
        X = self._check(X)
        s = np.asarray(self.background.predict(X), dtype=np.float64).copy()
        for st in self.stages:
            s += self.shrinkage * st.coefficient * st.basis(X)
        return s

    def truncated(self, n_stages: int) -> "BoostedEnsemble":
        return BoostedEnsemble(self.background, self.stages[:n_stages], self.shrinkage)

    def __repr__(self):
        return f"BoostedEnsemble(stages={len(self.stages)}, shrinkage={self.shrinkage})"


def ensemble_score(ensemble: BoostedEnsemble, features) -> float:
    return ensemble.score(features)


def _check_basis(residuals, basis_values):
    y = np.asarray(residuals, dtype=np.float64)
    h = np.asarray(basis_values, dtype=np.float64)
    if y.shape != h.shape:
        raise ValueError("residuals and basis values differ in length")
    hh = float(h @ h)
    if hh == 0.0:
        raise DegenerateBasisError("degenerate basis")
    return y, h, hh


def optimal_beta(residuals, basis_values) -> float:
    """Least-squares coefficient ``sum(y' h) / sum(h^2)``."""
    y, h, hh = _check_basis(residuals, basis_values)
    return float(y @ h) / hh


def ls_loss(residuals, basis_values) -> float:
    """Residual sum of squares at the optimal coefficient:
    ``sum(y'^2) - sum(y' h)^2 / sum(h^2)``."""
    y, h, hh = _check_basis(residuals, basis_values)
    yh = float(y @ h)
    return float(y @ y) - yh * yh / hh


TraceFn = Callable[[int, BoostedEnsemble, float], None]


class _RoundState:
    """Current per-document scores of the growing ensemble on the training set."""

    def __init__(self, background: Scorer, train: Dataset, ndcg_config: NdcgConfig):
        if len(train) == 0:
            raise ValueError("training dataset is empty")
        if background.feature_count != train.feature_count:
            raise ValueError(f"background expects {background.feature_count} features, "
                             f"data has {train.feature_count}")
        self.train = train
        self.ndcg_config = ndcg_config
        self.X, _, self.offsets = train.stacked()
        self.scores = np.asarray(background.predict(self.X), dtype=np.float64).copy()

    def split(self, v: np.ndarray) -> list[np.ndarray]:
        o = self.offsets
        return [v[o[i]:o[i + 1]] for i in range(len(o) - 1)]

    def lambdas(self):
        return dataset_lambdas(self.train.queries, self.split(self.scores), self.ndcg_config)

    def ave_ndcg(self) -> float:
        return evaluate_scores(self.train.queries, self.split(self.scores),
                               self.ndcg_config).ave_ndcg


def _trace(trace: Optional[TraceFn], m: int, state: _RoundState, make) -> None:
    if trace is not None:
        trace(m, make(), state.ave_ndcg())


def lambda_boost(background: Scorer, train: Dataset, config: BoostConfig = BoostConfig(),
                 ndcg_config: NdcgConfig = NdcgConfig(),
                 trace: Optional[TraceFn] = None) -> BoostedEnsemble:
    """Adapt ``background`` by re-weighting one input feature per round.

    Each round picks the feature with the smallest least-squares loss
    against the current lambda residuals (lowest index on ties) and adds
    ``shrinkage * beta * x[feature]``.
    """
    state = _RoundState(background, train, ndcg_config)
    X = state.X
    hh = np.einsum("ij,ij->j", X, X)
    usable = hh > 0.0
    if not usable.any():
        raise DegenerateBasisError("all features are identically zero")
    stages: list[Stage] = []
    for m in range(1, config.rounds + 1):
        y = state.lambdas().residuals
        yh = y @ X
        loss = np.full(X.shape[1], np.inf)
        loss[usable] = float(y @ y) - yh[usable] ** 2 / hh[usable]
        f = int(np.argmin(loss))
        beta = float(yh[f]) / float(hh[f])
        stages.append(Stage(SingleFeature(f), beta))
        state.scores += config.shrinkage * beta * X[:, f]
        _trace(trace, m, state, lambda: BoostedEnsemble(background, stages, config.shrinkage))
    return BoostedEnsemble(background, stages, config.shrinkage)


def newton_leaf_values(leaf_of: np.ndarray, residuals: np.ndarray,
                       newton_weights: np.ndarray,
                       max_step: Optional[float] = None) -> dict[int, float]:
    """``sum(residual) / sum(weight)`` per leaf; 0.0 where the weight sum is 0.

    A leaf holding only badly misordered documents has near-zero curvature
    and the quotient can reach 1e90; ``max_step`` clips it to ``[-max_step, max_step]``.
    """
    out = {}
    for leaf in np.unique(leaf_of):
        mask = leaf_of == leaf
        w = float(newton_weights[mask].sum())
        v = float(residuals[mask].sum()) / w if w > 0.0 else 0.0
        if max_step is not None:
            v = min(max(v, -max_step), max_step)
        out[int(leaf)] = v
    return out


def lambda_smart(background: Scorer, train: Dataset, config: BoostConfig = BoostConfig(),
                 ndcg_config: NdcgConfig = NdcgConfig(),
                 trace: Optional[TraceFn] = None) -> BoostedEnsemble:
    """Adapt ``background`` by adding one Newton-stepped regression tree per round."""
    state = _RoundState(background, train, ndcg_config)
    rng = np.random.default_rng(config.seed)
    stages: list[Stage] = []
    for m in range(1, config.rounds + 1):
        grads = state.lambdas()
        tree = fit_regression_tree(
            state.X, grads.residuals, max_leaves=config.leaves,
            min_samples_leaf=config.min_samples_per_leaf,
            sample_rate=config.sample_rate if config.randomize else None, rng=rng)
        leaf_of = tree.apply(state.X)
        tree = tree.with_leaf_values(
            newton_leaf_values(leaf_of, grads.residuals, grads.newton_weights,
                               config.max_leaf_step))
        stages.append(Stage(TreeBasis(tree), 1.0))
        state.scores += config.shrinkage * tree.predict(state.X)
        _trace(trace, m, state, lambda: BoostedEnsemble(background, stages, config.shrinkage))
    return BoostedEnsemble(background, stages, config.shrinkage)
