# Harvesting near-duplicates of low-entropy in-domain queries from background data

import warnings

import numpy as np

from rankadapt.augment import (AugmentConfig, knn_expand, label_entropy, regroup_by_source,
                               select_seed_queries)
from rankadapt.synth import ShiftProfile, generate_shift

data = generate_shift(11, ShiftProfile(background_queries=80, in_domain_queries=30))
in_domain, background = data["in_domain_train"], data["background_train"]

ent = sorted(label_entropy(q) for q in in_domain.queries)
print("label entropy, lowest five :", np.round(ent[:5], 3))
print("label entropy, highest five:", np.round(ent[-5:], 3))

cfg = AugmentConfig(seed_query_count=8, k=3, max_distance=0.1)
seeds = select_seed_queries(in_domain, cfg)
print("seed queries:", seeds.qids, "documents:", seeds.document_count)

# the accept set grows with epsilon
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    for eps in (0.02, 0.05, 0.1, 0.2, 0.4):
        e2 = knn_expand(seeds, background, AugmentConfig(8, max_distance=eps))
        print("epsilon %.2f  accepted %4d of %d" % (eps, len(e2), background.document_count))

e2 = knn_expand(seeds, background, cfg)
print("first accepted qids:", e2.qids[:5])
grouped = regroup_by_source(e2)
print("regrouped into", len(grouped), "queries of sizes", [len(q) for q in grouped.queries][:10])
