# The closed vs open test contrast on the bundled synthetic shift data

import os
import tempfile

from rankadapt.experiment import ExperimentSpec, run_experiment
from rankadapt.synth import BUNDLED_SEED, write_shift

out = tempfile.mkdtemp(prefix="rankadapt-demo-")
spec_path = write_shift(out, BUNDLED_SEED)
print("data and spec in", out)
print(sorted(os.listdir(out)))

# about 20 seconds: two linear baselines, two interpolations, three boosted models
result = run_experiment(ExperimentSpec.load(spec_path))

print("\nclosed test (same distribution as in-domain training)")
print(result.table("closed"))
print("open test (drifted)")
print(result.table("open"))

ave = lambda name, which: result.report(name, which).ave_ndcg
print("trees win closed:       ", ave("LambdaSMART", "closed") >= ave("2W-Interp.", "closed"))
print("interpolation wins open:", ave("2W-Interp.", "open") >= ave("LambdaSMART", "open"))
print("kNN expansion accepted", result.manifest["augment"]["accepted"], "documents")
