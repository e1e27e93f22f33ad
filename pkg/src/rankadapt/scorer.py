from __future__ import annotations

import numpy as np


class Scorer:
    """A ranking function mapping feature vectors to relevance scores.

    Subclasses implement :meth:`predict` on a 2-d feature matrix and set
    ``feature_count``. Models are treated as immutable once built.
    """

    feature_count: int
    # set when the model was loaded from or saved to a model file
    source_path = None

    def predict(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def score(self, features) -> float:
        x = np.asarray(features, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("score() takes a single feature vector")
        return float(self.predict(x[None, :])[0])

    def __call__(self, X):
        return self.predict(X)

    def _check(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.feature_count:
            raise ValueError(f"expected {self.feature_count} features, got shape {X.shape}")
        return X
