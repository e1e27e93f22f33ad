"""Synthetic domain-shift data for closed vs. open test experiments.

The ``shift`` profile draws five LETOR sets from three related relevance
functions over the same features. Observed features are noisy copies of
a few latent factors, so groups of them are strongly correlated.

* background: linear utility with weights ``w_bg``;
* in-domain (train, valid, closed test): ``w_bg`` re-weighted
  feature by feature, plus a pairwise interaction term that only trees
  can express;
* open test: collected later, its weights drift back part of the way
  toward ``w_bg`` with fresh re-weighting noise, the interaction
  changes sign, and a fraction of labels is replaced at random.

Labels are the utility plus Gaussian noise, cut into 5 grades at fixed
thresholds. All parameters live in :class:`ShiftProfile` and are copied
into the emitted spec file.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .data import Dataset, Query, write_letor

PROFILES = ("shift",)
BUNDLED_SEED = 2009
# experiment settings written into the emitted spec unless overridden
DEFAULT_EXPERIMENT = {
    "output_dir": "results",
    "augment": {"seed_query_count": 20, "k": 3, "max_distance": 0.1},
}

FILES = {
    "background_train": "background.train.txt",
    "in_domain_train": "indomain.train.txt",
    "validation": "indomain.valid.txt",
    "closed_test": "closed.test.txt",
    "open_test": "open.test.txt",
}


@dataclass(frozen=True)
class ShiftProfile:
    n_features: int = 10
    background_queries: int = 300
    in_domain_queries: int = 60
    valid_queries: int = 40
    closed_test_queries: int = 150
    open_test_queries: int = 150
    docs_min: int = 8
    docs_max: int = 20
    reweight_sigma: float = 0.8
    interaction: float = 1.5
    open_drift_back: float = 0.5
    open_reweight_sigma: float = 0.4
    open_interaction: float = -0.5
    open_label_noise: float = 0.15
    utility_noise: float = 0.8
    latent_factors: int = 5
    copy_noise: float = 0.3
    label_thresholds: tuple = (0.0, 0.8, 1.6, 2.4)


def _query_features(rng, n, p: ShiftProfile):
    d = p.n_features
    if p.latent_factors:
        k = p.latent_factors
        Z = rng.normal(size=(n, k)) + 0.5 * rng.normal(size=k)
        return Z[:, np.arange(d) % k] + p.copy_noise * rng.normal(size=(n, d))
    # a per-query offset makes documents of one query share a topic direction
    return rng.normal(size=(n, d)) + 0.5 * rng.normal(size=d)


def _labels(u, rng, p: ShiftProfile, flip: float = 0.0):
    u = u + p.utility_noise * rng.normal(size=u.size)
    labels = np.digitize(u, p.label_thresholds)
    if flip > 0:
        mask = rng.random(u.size) < flip
        labels[mask] = rng.integers(0, 5, size=int(mask.sum()))
    return labels


def _domain(rng, count, prefix, p: ShiftProfile, w, interaction, flip=0.0):
    qs = []
    for i in range(count):
        n = int(rng.integers(p.docs_min, p.docs_max + 1))
        X = _query_features(rng, n, p)
        u = X @ w + interaction * np.tanh(2 * X[:, 0]) * np.tanh(2 * X[:, 1])
        labels = _labels(u, rng, p, flip)
        if labels.max() == 0:
            labels[int(np.argmax(u))] = 1
        qs.append(Query(f"{prefix}{i}", labels, np.round(X, 6)))
    return Dataset(tuple(qs), p.n_features)


def generate_shift(seed: int, profile: ShiftProfile = ShiftProfile()) -> dict:
    """Return the five datasets keyed like :data:`FILES`."""
    p = profile
    rng = np.random.default_rng(seed)
    w_bg = rng.normal(size=p.n_features)
    w_bg *= 1.2 / np.linalg.norm(w_bg)
    w_in = w_bg * np.exp(p.reweight_sigma * rng.normal(size=p.n_features))
    w_open = ((1 - p.open_drift_back) * w_in + p.open_drift_back * w_bg) \
        * np.exp(p.open_reweight_sigma * rng.normal(size=p.n_features))
    return {
        "background_train": _domain(rng, p.background_queries, "bg", p, w_bg, 0.0),
        "in_domain_train": _domain(rng, p.in_domain_queries, "tr", p, w_in, p.interaction),
        "validation": _domain(rng, p.valid_queries, "va", p, w_in, p.interaction),
        "closed_test": _domain(rng, p.closed_test_queries, "cl", p, w_in, p.interaction),
        "open_test": _domain(rng, p.open_test_queries, "op", p, w_open, p.open_interaction,
                             p.open_label_noise),
    }


def write_shift(out_dir: str, seed: int, profile: ShiftProfile = ShiftProfile(),
                experiment: dict | None = None) -> str:
    """Write the datasets and an experiment spec to ``out_dir``; return the spec path."""
    os.makedirs(out_dir, exist_ok=True)
    for key, ds in generate_shift(seed, profile).items():
        write_letor(ds, os.path.join(out_dir, FILES[key]))
    spec = dict(FILES)
    spec.update(DEFAULT_EXPERIMENT if experiment is None else experiment)
    spec["seed"] = seed
    spec["generator"] = {"profile": "shift", "seed": seed, "parameters": asdict(profile)}
    path = os.path.join(out_dir, "spec.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(spec, f, indent=1)
        f.write("\n")
    return path
