"""Linear interpolation of ranking models and tuning of the mixing weights.

Weights are tuned on validation data either by Powell's direction-set
search on Ave-NDCG (derivative free) or by treating component scores as
features of a linear LambdaRank model.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .data import Dataset, Query
from .linear import TrainConfig, train_linear_lambdarank
from .metrics import NdcgConfig, UndefinedMetricError, score_queries
from .scorer import Scorer

logger = logging.getLogger(__name__)


def _mix(alphas: np.ndarray, columns: Sequence[np.ndarray]) -> np.ndarray:
    # fixed summation order shared by predict() and the search objective
    total = alphas[0] * columns[0]
    for a, c in zip(alphas[1:], columns[1:]):
        total = total + a * c
    return total


class InterpolatedModel(Scorer):
    """``score(x) = sum_i alphas[i] * components[i](x)``."""

    def __init__(self, components: Sequence[Scorer], alphas):
        self.components = tuple(components)
        self.alphas = np.array(alphas, dtype=np.float64).reshape(-1)
        self.alphas.setflags(write=False)
        if len(self.components) < 2:
            raise ValueError("interpolation needs at least 2 components")
        if self.alphas.size != len(self.components):
            raise ValueError("one alpha per component required")
        if not np.any(self.alphas != 0.0):
            raise ValueError("at least one alpha must be nonzero")
        counts = {c.feature_count for c in self.components}
        if len(counts) != 1:
            raise ValueError(f"components disagree on feature_count: {sorted(counts)}")
        self.feature_count = counts.pop()

    def predict(self, X):
        X = self._check(X)
        return _mix(self.alphas, [np.asarray(c.predict(X), dtype=np.float64)
                                  for c in self.components])

    def __repr__(self):
        return f"InterpolatedModel(alphas={self.alphas.tolist()})"


def interpolated_score(model: InterpolatedModel, features) -> float:
    return model.score(features)


@dataclass(frozen=True)
class PowellConfig:
    max_iterations: int = 20
    line_search_grid: int = 201
    line_search_span: float = 2.0
    refine_levels: int = 3
    tolerance: float = 1e-6
    # the search draws no random numbers; kept so run manifests record one
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1 or self.line_search_grid < 2:
            raise ValueError("max_iterations >= 1 and line_search_grid >= 2 required")
        if not self.line_search_span > 0 or not self.tolerance > 0:
            raise ValueError("line_search_span and tolerance must be positive")
        if self.refine_levels < 1:
            raise ValueError("refine_levels must be >= 1")


class _Objective:
    """Validation Ave-NDCG as a function of the interpolation weights.

    Queries are padded into one (queries x width) matrix so each evaluation
    is a handful of array operations. Rankings equal those of
    :func:`~rankadapt.metrics.mean_ndcg` on the interpolated model; the value
    can differ from it in the last bits only.
    """

    def __init__(self, components: Sequence[Scorer], validation: Dataset,
                 ndcg_config: NdcgConfig):
        cutoffs = ndcg_config.ave_cutoffs
        queries = [q for q in validation.queries if q.labels.max() > 0]
        if not queries:
            raise UndefinedMetricError("no evaluable queries")
        kmax = max(cutoffs)
        width = max(kmax, max(len(q) for q in queries))
        n_q = len(queries)
        self.valid = np.zeros((n_q, width), dtype=bool)
        gains = np.zeros((n_q, width))
        for i, q in enumerate(queries):
            self.valid[i, :len(q)] = True
            gains[i, :len(q)] = np.exp2(q.labels.astype(np.float64)) - 1.0
        sub = validation.subset(q.qid for q in queries)
        per_comp = [score_queries(sub, c) for c in components]
        self.columns = []
        for pc in per_comp:
            m = np.zeros((n_q, width))
            for i, s in enumerate(pc):
                m[i, :s.size] = s
            self.columns.append(m)
        self.gains = gains
        disc = 1.0 / np.log(2.0 + np.arange(kmax))
        self.disc = disc
        self.kmax = kmax
        ideal = -np.sort(-gains, axis=1)[:, :kmax]
        self.idcg = np.cumsum(ideal * disc, axis=1)
        self.cut_idx = np.array(cutoffs) - 1
        self.calls = 0

    def __call__(self, alphas: np.ndarray) -> float:
        self.calls += 1
        mixed = np.where(self.valid, _mix(alphas, self.columns), -np.inf)
        order = np.argsort(-mixed, axis=1, kind="stable")[:, :self.kmax]
        ranked = np.take_along_axis(self.gains, order, axis=1)
        dcg = np.cumsum(ranked * self.disc, axis=1)
        ndcg = dcg[:, self.cut_idx] / self.idcg[:, self.cut_idx]
        return float(ndcg.mean(axis=0).mean())


def _line_search(f: _Objective, p: np.ndarray, u: np.ndarray, fp: float,
                 config: PowellConfig) -> tuple[float, float]:
    """Maximize ``f(p + t u)`` over ``t`` by grid scans with local refinement.

    Returns ``(t, f(p + t u))``. ``t = 0`` is kept unless a strictly better
    point is found; among equal values the smallest ``|t|`` wins.
    """
    best_t, best_f = 0.0, fp
    center, half = 0.0, config.line_search_span
    for _ in range(config.refine_levels):
        grid = np.linspace(center - half, center + half, config.line_search_grid)
        for t in grid[np.argsort(np.abs(grid), kind="stable")]:
            if t == 0.0:
                continue
            val = f(p + t * u)
            if val > best_f or (val == best_f and best_t != 0.0 and abs(t) < abs(best_t)):
                best_t, best_f = float(t), val
        center = best_t
        half = 2.0 * half / (config.line_search_grid - 1)
    return best_t, best_f


def optimize_weights_powell(components: Sequence[Scorer], validation: Dataset,
                            ndcg_config: NdcgConfig = NdcgConfig(),
                            config: PowellConfig = PowellConfig()) -> np.ndarray:
    """Tune interpolation weights on ``validation`` Ave-NDCG with Powell's method.

    Starts from uniform weights and the coordinate axes as search
    directions. After each sweep the net displacement becomes a new
    direction, replacing the one that gave the largest gain (the basic
    Numerical Recipes variant). Stops after ``max_iterations`` sweeps or when
    a sweep gains less than ``tolerance``. The result is scaled to unit L1
    norm, which leaves every ranking unchanged.
    """
    n = len(components)
    if n < 2:
        raise ValueError("interpolation needs at least 2 components")
    f = _Objective(components, validation, ndcg_config)
    p = np.full(n, 1.0 / n)
    fp = f(p)
    f_start = fp
    directions = [np.eye(n)[i] for i in range(n)]
    for it in range(1, config.max_iterations + 1):
        p0, f0 = p.copy(), fp
        biggest_gain, biggest_i = 0.0, 0
        for i, u in enumerate(directions):
            t, ft = _line_search(f, p, u, fp, config)
            if ft - fp > biggest_gain:
                biggest_gain, biggest_i = ft - fp, i
            p, fp = p + t * u, ft
        shift = p - p0
        norm = np.abs(shift).sum()
        if norm > 0.0:
            u_new = shift / norm
            t, ft = _line_search(f, p, u_new, fp, config)
            p, fp = p + t * u_new, ft
            directions.pop(biggest_i)
            directions.append(u_new)
        logger.debug("powell iteration %d: ave_ndcg=%.6f", it, fp)
        if fp - f0 < config.tolerance:
            break
    scale = np.abs(p).sum()
    if scale > 0.0:
        normalized = p / scale
        # rescaling can perturb exact score ties; keep whichever scores higher
        if f(normalized) >= fp:
            p = normalized
    logger.info("powell: ave_ndcg %.6f -> %.6f in %d evaluations", f_start, f(p), f.calls)
    return p


def optimize_weights_lambdarank(components: Sequence[Scorer], validation: Dataset,
                                train_config: TrainConfig = TrainConfig(),
                                ndcg_config: NdcgConfig = NdcgConfig()) -> np.ndarray:
    """Learn weights with linear LambdaRank over component scores as features."""
    if len(components) < 2:
        raise ValueError("interpolation needs at least 2 components")
    derived = component_score_dataset(components, validation)
    return train_linear_lambdarank(derived, train_config, ndcg_config).weights.copy()


def component_score_dataset(components: Sequence[Scorer], dataset: Dataset) -> Dataset:
    """Same queries and labels, with features replaced by component scores."""
    per_comp = [score_queries(dataset, c) for c in components]
    queries = tuple(Query(q.qid, q.labels, np.column_stack([pc[i] for pc in per_comp]))
                    for i, q in enumerate(dataset.queries))
    return Dataset(queries, len(components))
