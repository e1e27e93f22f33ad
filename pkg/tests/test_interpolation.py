import numpy as np
import pytest

from rankadapt.data import Dataset, Query
from rankadapt.interpolation import (InterpolatedModel, PowellConfig, component_score_dataset,
                                     interpolated_score, optimize_weights_lambdarank,
                                     optimize_weights_powell)
from rankadapt.linear import LinearModel, TrainConfig
from rankadapt.metrics import mean_ndcg

from helpers import random_dataset


class Const:
    def __init__(self, value, feature_count=2):
        self.value = value
        self.feature_count = feature_count

    def predict(self, X):
        return np.full(np.atleast_2d(X).shape[0], self.value)


def labelled_dataset(rng, n_queries=15, n_docs=8, n_features=3):
    """Feature 0 is the label plus a little noise; the rest is noise."""
    qs = []
    for i in range(n_queries):
        labels = rng.integers(0, 5, size=n_docs)
        X = rng.normal(size=(n_docs, n_features))
        X[:, 0] = labels + 0.01 * rng.normal(size=n_docs)
        qs.append(Query(f"v{i}", labels, X))
    return Dataset(tuple(qs), n_features)


class TestInterpolatedScore:
    def test_first_component_only(self, rng):
        a, b = LinearModel(rng.normal(size=3)), LinearModel(rng.normal(size=3))
        x = rng.normal(size=3)
        assert interpolated_score(InterpolatedModel([a, b], [1, 0]), x) == a.score(x)

    def test_weighted_sum(self):
        m = InterpolatedModel([Const(2.0), Const(4.0)], [0.5, 0.5])
        assert interpolated_score(m, [0.0, 0.0]) == 3.0

    def test_scaling_keeps_rankings(self, rng):
        ds = random_dataset(rng, n_queries=10, n_features=3)
        comps = [LinearModel(rng.normal(size=3)) for _ in range(2)]
        a = mean_ndcg(ds, InterpolatedModel(comps, [0.3, -0.2]))
        b = mean_ndcg(ds, InterpolatedModel(comps, [0.9, -0.6]))
        assert a.ndcg_at == b.ndcg_at

    def test_validation(self, rng):
        a = LinearModel([1.0, 2.0])
        with pytest.raises(ValueError):
            InterpolatedModel([a], [1.0])
        with pytest.raises(ValueError):
            InterpolatedModel([a, a], [0.0, 0.0])
        with pytest.raises(ValueError):
            InterpolatedModel([a, LinearModel([1.0])], [1.0, 1.0])
        with pytest.raises(ValueError):
            interpolated_score(InterpolatedModel([a, a], [1, 1]), [1.0])


class TestPowell:
    def test_identical_components(self, rng):
        ds = random_dataset(rng, n_queries=10, n_features=3)
        a = LinearModel(rng.normal(size=3))
        alphas = optimize_weights_powell([a, a], ds)
        assert mean_ndcg(ds, InterpolatedModel([a, a], alphas)).ave_ndcg == \
            pytest.approx(mean_ndcg(ds, a).ave_ndcg, abs=1e-12)

    def test_perfect_plus_adversarial(self, rng):
        ds = labelled_dataset(rng)
        good = LinearModel([1.0, 0.0, 0.0])
        bad = LinearModel([-1.0, 0.0, 0.0])
        assert mean_ndcg(ds, good).ave_ndcg == 1.0
        alphas = optimize_weights_powell([good, bad], ds)
        assert mean_ndcg(ds, InterpolatedModel([good, bad], alphas)).ave_ndcg == 1.0
        assert np.abs(alphas).sum() == pytest.approx(1.0)

    def test_three_components_beat_each_single(self):
        rng = np.random.default_rng(8)
        ds = labelled_dataset(rng, n_features=4)
        comps = [LinearModel(rng.normal(size=4)) for _ in range(3)]
        alphas = optimize_weights_powell(comps, ds)
        got = mean_ndcg(ds, InterpolatedModel(comps, alphas)).ave_ndcg
        for c in comps:
            assert got >= mean_ndcg(ds, c).ave_ndcg - 1e-12
        uniform = mean_ndcg(ds, InterpolatedModel(comps, [1 / 3] * 3)).ave_ndcg
        assert got >= uniform

    def test_deterministic(self, rng):
        ds = labelled_dataset(rng)
        comps = [LinearModel(rng.normal(size=3)) for _ in range(3)]
        cfg = PowellConfig(max_iterations=3)
        a = optimize_weights_powell(comps, ds, config=cfg)
        b = optimize_weights_powell(comps, ds, config=cfg)
        assert a.tobytes() == b.tobytes()

    def test_objective_agrees_with_mean_ndcg(self, rng):
        from rankadapt.interpolation import _Objective
        from rankadapt.metrics import NdcgConfig
        ds = random_dataset(rng, n_queries=25, docs=(2, 14), n_features=3)
        comps = [LinearModel(rng.normal(size=3)) for _ in range(3)]
        f = _Objective(comps, ds, NdcgConfig())
        for _ in range(30):
            alphas = rng.normal(size=3)
            ref = mean_ndcg(ds, InterpolatedModel(comps, alphas)).ave_ndcg
            assert f(alphas) == pytest.approx(ref, abs=1e-12)

    def test_needs_two_components(self, rng):
        with pytest.raises(ValueError):
            optimize_weights_powell([LinearModel([1.0])], Dataset((Query("q", [1], [[1.0]]),), 1))

    def test_no_evaluable_queries(self):
        ds = Dataset((Query("q", [0, 0], [[1.0], [2.0]]),), 1)
        with pytest.raises(ValueError, match="no evaluable"):
            optimize_weights_powell([LinearModel([1.0]), LinearModel([2.0])], ds)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PowellConfig(line_search_grid=1)
        with pytest.raises(ValueError):
            PowellConfig(refine_levels=0)


class TestLambdaRankWeights:
    def test_informative_component_dominates(self):
        rng = np.random.default_rng(3)
        ds = labelled_dataset(rng, n_queries=20)
        informative = LinearModel([1.0, 0.0, 0.0])
        noise = LinearModel([0.0, 1.0, 0.0])
        alphas = optimize_weights_lambdarank([informative, noise], ds,
                                             TrainConfig(epochs=50, learning_rate=1e-2))
        assert abs(alphas[0]) > 10 * abs(alphas[1])
        assert mean_ndcg(ds, InterpolatedModel([informative, noise], alphas)).ave_ndcg >= 0.99

    def test_constant_components_stay_zero(self, rng):
        ds = labelled_dataset(rng, n_queries=5)
        alphas = optimize_weights_lambdarank([Const(1.0, 3), Const(-2.0, 3)], ds,
                                             TrainConfig(epochs=3))
        # residuals cancel per query, up to rounding
        assert np.abs(alphas).max() < 1e-12

    def test_deterministic(self, rng):
        ds = labelled_dataset(rng, n_queries=5)
        comps = [LinearModel(rng.normal(size=3)) for _ in range(2)]
        a = optimize_weights_lambdarank(comps, ds, TrainConfig(epochs=5, seed=2))
        b = optimize_weights_lambdarank(comps, ds, TrainConfig(epochs=5, seed=2))
        assert a.tobytes() == b.tobytes()

    def test_derived_dataset(self, rng):
        ds = labelled_dataset(rng, n_queries=3)
        comps = [LinearModel([1.0, 0.0, 0.0]), LinearModel([0.0, 0.0, 2.0])]
        derived = component_score_dataset(comps, ds)
        assert derived.feature_count == 2
        q, d = ds.queries[1], derived.queries[1]
        np.testing.assert_array_equal(d.features[:, 1], 2.0 * q.features[:, 2])
        np.testing.assert_array_equal(d.labels, q.labels)
