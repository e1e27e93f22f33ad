import json
import subprocess
import sys

import numpy as np
import pytest

from rankadapt.cli import main
from rankadapt.data import Dataset, Query, read_letor, write_letor
from rankadapt.linear import LinearModel
from rankadapt.metrics import mean_ndcg
from rankadapt.modelio import load_model, save_model

from helpers import label_feature_dataset, separable_dataset
from test_augment import brute_force_accept, docs_of, hand_fixture


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def value(out, key):
    for line in out.splitlines():
        if line.startswith(key + "="):
            return line.split("=", 1)[1]
    raise AssertionError(f"{key} not in output:\n{out}")


@pytest.fixture
def files(tmp_path):
    def put(name, ds):
        path = tmp_path / name
        write_letor(ds, path)
        return path
    return put


class TestTrain:
    def test_separable(self, capsys, files, tmp_path):
        data = files("train.txt", label_feature_dataset(np.random.default_rng(0)))
        code, out, _ = run(capsys, "train", "--data", data, "--out", tmp_path / "m.json")
        assert code == 0
        assert float(value(out, "ave_ndcg")) >= 0.99
        assert load_model(tmp_path / "m.json").feature_count == 4

    def test_missing_file(self, capsys, tmp_path):
        missing = tmp_path / "nope.txt"
        code, _, err = run(capsys, "train", "--data", missing, "--out", tmp_path / "m.json")
        assert code == 2
        assert str(missing) in err

    def test_zero_epochs(self, capsys, files, tmp_path):
        data = files("train.txt", label_feature_dataset(np.random.default_rng(0)))
        code, _, err = run(capsys, "train", "--data", data, "--out", tmp_path / "m.json",
                           "--epochs", 0)
        assert code == 2
        assert "epochs must be ≥ 1" in err

    def test_parse_error_names_file(self, capsys, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("7 qid:1 1:0.5\n")
        code, _, err = run(capsys, "train", "--data", bad, "--out", tmp_path / "m.json")
        assert code == 2
        assert "bad.txt" in err and "label out of range" in err


class TestAdapt:
    def test_smart_separable(self, capsys, files, tmp_path):
        data = files("train.txt", separable_dataset())
        bg = tmp_path / "bg.json"
        save_model(LinearModel.zeros(5), bg)
        code, out, _ = run(capsys, "adapt", "--method", "smart", "--background", bg, "--data", data,
                           "--out", tmp_path / "s.json", "--rounds", 100, "--leaves", 4)
        assert code == 0
        assert float(value(out, "ave_ndcg")) >= 0.98
        assert json.loads((tmp_path / "s.json").read_text())["background"] == "bg.json"

    def test_boost_equal_labels(self, capsys, files, tmp_path):
        rng = np.random.default_rng(1)
        ds = Dataset(tuple(Query(f"q{i}", [2] * 5, rng.normal(size=(5, 3))) for i in range(6)), 3)
        data = files("eq.txt", ds)
        bg_model = LinearModel(rng.normal(size=3))
        save_model(bg_model, tmp_path / "bg.json")
        code, _, _ = run(capsys, "adapt", "--method", "boost", "--background", tmp_path / "bg.json",
                         "--data", data, "--out", tmp_path / "b.json", "--rounds", 5)
        assert code == 0
        X, _, _ = ds.stacked()
        np.testing.assert_array_equal(load_model(tmp_path / "b.json").predict(X), bg_model.predict(X))

    def test_trace(self, capsys, files, tmp_path):
        data = files("train.txt", separable_dataset(n_queries=5))
        save_model(LinearModel.zeros(5), tmp_path / "bg.json")
        code, out, _ = run(capsys, "adapt", "--method", "smart", "--background", tmp_path / "bg.json",
                           "--data", data, "--out", tmp_path / "s.json", "--rounds", 3, "--trace")
        assert code == 0
        assert [l.split("\t")[0] for l in out.splitlines()[:3]] == ["round=1", "round=2", "round=3"]

    def test_unknown_method(self, capsys, tmp_path):
        code, _, _ = run(capsys, "adapt", "--method", "forest", "--background", "x", "--data", "y",
                         "--out", tmp_path / "o.json")
        assert code == 2

    def test_width_mismatch(self, capsys, files, tmp_path):
        data = files("train.txt", separable_dataset(n_queries=3))
        save_model(LinearModel.zeros(2), tmp_path / "bg.json")
        code, _, err = run(capsys, "adapt", "--method", "boost", "--background", tmp_path / "bg.json",
                           "--data", data, "--out", tmp_path / "o.json")
        assert code == 2 and "feature count" in err


class TestInterpolate:
    def _valid(self, files):
        rng = np.random.default_rng(5)
        qs = []
        for i in range(10):
            labels = rng.integers(0, 5, size=8)
            X = rng.normal(size=(8, 2))
            X[:, 0] = labels
            qs.append(Query(f"v{i}", labels, X))
        return files("valid.txt", Dataset(tuple(qs), 2))

    def test_perfect_plus_adversarial(self, capsys, files, tmp_path):
        valid = self._valid(files)
        save_model(LinearModel([1.0, 0.0]), tmp_path / "good.json")
        save_model(LinearModel([-1.0, 0.0]), tmp_path / "bad.json")
        code, out, _ = run(capsys, "interpolate", "--models", tmp_path / "good.json",
                           tmp_path / "bad.json", "--valid", valid, "--out", tmp_path / "i.json")
        assert code == 0
        assert value(out, "ave_ndcg") == "1.000000"
        assert len(value(out, "alphas").split(",")) == 2

    def test_identical_components(self, capsys, files, tmp_path):
        valid = self._valid(files)
        m = LinearModel([0.3, -1.0])
        save_model(m, tmp_path / "a.json")
        code, out, _ = run(capsys, "interpolate", "--models", tmp_path / "a.json", tmp_path / "a.json",
                           "--valid", valid, "--out", tmp_path / "i.json")
        assert code == 0
        assert float(value(out, "ave_ndcg")) == pytest.approx(
            mean_ndcg(read_letor(valid), m).ave_ndcg, abs=1e-6)

    def test_lambdarank_optimizer(self, capsys, files, tmp_path):
        valid = self._valid(files)
        save_model(LinearModel([1.0, 0.0]), tmp_path / "a.json")
        save_model(LinearModel([0.0, 1.0]), tmp_path / "b.json")
        code, out, _ = run(capsys, "interpolate", "--models", tmp_path / "a.json", tmp_path / "b.json",
                           "--valid", valid, "--out", tmp_path / "i.json", "--optimizer", "lambdarank")
        assert code == 0 and float(value(out, "ave_ndcg")) >= 0.99

    def test_one_model(self, capsys, files, tmp_path):
        valid = self._valid(files)
        save_model(LinearModel([1.0, 0.0]), tmp_path / "a.json")
        code, _, _ = run(capsys, "interpolate", "--models", tmp_path / "a.json", "--valid", valid,
                         "--out", tmp_path / "i.json")
        assert code == 2

    def test_width_mismatch(self, capsys, files, tmp_path):
        valid = self._valid(files)
        save_model(LinearModel([1.0, 0.0]), tmp_path / "a.json")
        save_model(LinearModel([1.0, 0.0, 2.0]), tmp_path / "b.json")
        code, _, _ = run(capsys, "interpolate", "--models", tmp_path / "a.json", tmp_path / "b.json",
                         "--valid", valid, "--out", tmp_path / "i.json")
        assert code == 2


class TestAugment:
    def test_identical_background(self, capsys, files, tmp_path):
        ds = label_feature_dataset(np.random.default_rng(2), n_queries=4)
        ind = files("in.txt", ds)
        code, out, _ = run(capsys, "augment", "--in-domain", ind, "--background", ind,
                           "--out", tmp_path / "e2.txt", "--seeds", 4, "--k", 1, "--epsilon", 0.01)
        assert code == 0
        assert value(out, "accepted").split("\t")[0] == str(ds.document_count)

    def test_epsilon_zero_exact_duplicates_only(self, capsys, files, tmp_path):
        seeds = Dataset((Query("s", [1, 2, 3], [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]),), 2)
        background = Dataset((Query("b", [1, 1], [[2.0, 0.0], [1.0, 0.01]]),), 2)
        code, _, _ = run(capsys, "augment", "--in-domain", files("s.txt", seeds),
                         "--background", files("b.txt", background), "--out", tmp_path / "e2.txt",
                         "--seeds", 1, "--k", 1, "--epsilon", 0)
        assert code == 0
        # a positive multiple has the same direction, so cosine distance 0
        assert read_letor(tmp_path / "e2.txt").qids == ["aug-b-0"]

    def test_oracle_fixture(self, capsys, files, tmp_path):
        seeds, background = hand_fixture()
        code, _, _ = run(capsys, "augment", "--in-domain", files("s.txt", seeds),
                         "--background", files("b.txt", background), "--out", tmp_path / "e2.txt",
                         "--seeds", 2, "--k", 3, "--epsilon", 0.2, "--merged-out", tmp_path / "m.txt")
        assert code == 0
        expected = brute_force_accept(docs_of(seeds), docs_of(background), 3, 0.2)
        assert read_letor(tmp_path / "e2.txt").qids == expected
        merged = read_letor(tmp_path / "m.txt")
        assert merged.qids == ["s1", "s2", "aug-b1", "aug-b2"]

    def test_k_too_large(self, capsys, files, tmp_path):
        seeds = Dataset((Query("s", [1, 2], [[1.0, 0.0], [0.0, 1.0]]),), 2)
        path = files("s.txt", seeds)
        code, _, err = run(capsys, "augment", "--in-domain", path, "--background", path,
                           "--out", tmp_path / "e2.txt", "--seeds", 1, "--k", 3)
        assert code == 2 and "k=3" in err


class TestEvaluate:
    def test_perfect_model(self, capsys, files, tmp_path):
        data = files("d.txt", label_feature_dataset(np.random.default_rng(3), n_features=2))
        save_model(LinearModel([1.0, 0.0]), tmp_path / "model.json")
        code, out, _ = run(capsys, "evaluate", "--model", tmp_path / "model.json", "--data", data)
        assert code == 0
        assert out.splitlines() == ["model\tNDCG@1\tNDCG@3\tNDCG@10\tAveNDCG",
                                    "model\t1.0000\t1.0000\t1.0000\t1.0000"]

    def test_hand_computed(self, capsys, files, tmp_path):
        # ranking [0, 1, 2] puts the label-2 document last
        q = Query("q", [1, 0, 2], [[3.0], [2.0], [1.0]])
        data = files("d.txt", Dataset((q,), 1))
        save_model(LinearModel([1.0]), tmp_path / "m.json")
        code, out, _ = run(capsys, "evaluate", "--model", tmp_path / "m.json", "--data", data)
        assert code == 0
        n1 = 1.0 / 3.0
        n3 = (1 / np.log(2) + 3 / np.log(4)) / (3 / np.log(2) + 1 / np.log(3))
        ave = (n1 + (1 / np.log(2)) / (3 / np.log(2) + 1 / np.log(3)) + 8 * n3) / 10
        assert out.splitlines()[1] == f"m\t{n1:.4f}\t{n3:.4f}\t{n3:.4f}\t{ave:.4f}"

    def test_ttest_identical(self, capsys, files, tmp_path):
        data = files("d.txt", label_feature_dataset(np.random.default_rng(3), n_features=2))
        save_model(LinearModel([1.0, 0.5]), tmp_path / "a.json")
        save_model(LinearModel([1.0, 0.5]), tmp_path / "b.json")
        code, out, _ = run(capsys, "evaluate", "--model", tmp_path / "a.json", "--model",
                           tmp_path / "b.json", "--data", data, "--ttest-baseline", 0)
        assert code == 0
        lines = out.splitlines()
        assert lines[0].endswith("\tt\tp")
        assert lines[1].endswith("\t-\t-")
        assert lines[2].split("\t")[-1] == "1.0000"

    def test_all_undefined(self, capsys, files, tmp_path):
        data = files("d.txt", Dataset((Query("q", [0, 0], [[1.0], [2.0]]),), 1))
        save_model(LinearModel([1.0]), tmp_path / "m.json")
        code, _, err = run(capsys, "evaluate", "--model", tmp_path / "m.json", "--data", data)
        assert code == 3 and "no evaluable" in err


def small_spec(tmp_path, **overrides):
    from rankadapt.synth import ShiftProfile, write_shift
    profile = ShiftProfile(background_queries=20, in_domain_queries=8, valid_queries=6,
                           closed_test_queries=6, open_test_queries=6)
    experiment = {"output_dir": "out", "linear": {"epochs": 5},
                  "boost": {"rounds": 3}, "smart": {"rounds": 3, "leaves": 4},
                  "smart_reference": {"rounds": 3, "leaves": 4},
                  "powell": {"max_iterations": 2, "line_search_grid": 11},
                  "augment": {"seed_query_count": 2, "max_distance": 0.3}}
    experiment.update(overrides)
    return write_shift(str(tmp_path / "data"), 3, profile, experiment)


class TestExperiment:
    def test_tables_and_determinism(self, capsys, tmp_path):
        spec = small_spec(tmp_path)
        assert run(capsys, "experiment", "--spec", spec)[0] == 0
        out = tmp_path / "data" / "out"
        first = {p: (out / p).read_bytes() for p in ("closed.tsv", "open.tsv", "run.json")}
        closed = first["closed.tsv"].decode().splitlines()
        opened = first["open.tsv"].decode().splitlines()
        names = [l.split("\t")[0] for l in closed[1:]]
        assert names == ["Back.", "In-domain", "2W-Interp.", "3W-Interp.", "LambdaBoost",
                         "LambdaSMART", "LambdaSMART-NR"]
        assert [l.split("\t")[0] for l in opened[1:]] == names
        manifest = json.loads(first["run.json"])
        assert manifest["seed"] == 3 and "augment" in manifest
        assert run(capsys, "experiment", "--spec", spec)[0] == 0
        for p, content in first.items():
            assert (out / p).read_bytes() == content
        model = load_model(out / "models" / "interp3.json")
        assert len(model.components) == 3

    def test_methods_subset(self, capsys, tmp_path):
        spec = small_spec(tmp_path, methods=["baselines", "lambda-boost"])
        assert run(capsys, "experiment", "--spec", spec)[0] == 0
        rows = (tmp_path / "data" / "out" / "closed.tsv").read_text().splitlines()[1:]
        assert [r.split("\t")[0] for r in rows] == ["Back.", "In-domain", "LambdaBoost"]

    def test_feature_count_mismatch(self, capsys, tmp_path):
        spec = small_spec(tmp_path)
        bad = tmp_path / "data" / "open.test.txt"
        bad.write_text("1 qid:1 1:0.5\n0 qid:1 1:0.1\n")
        code, _, err = run(capsys, "experiment", "--spec", spec)
        assert code == 2
        assert "background.train.txt" in err and "open.test.txt" in err

    def test_stage_failure_named(self, capsys, tmp_path):
        spec = small_spec(tmp_path, augment={"seed_query_count": 500})
        code, _, err = run(capsys, "experiment", "--spec", spec)
        assert code == 2
        assert "stage 'augment' failed" in err

    def test_unknown_method(self, capsys, tmp_path):
        spec = small_spec(tmp_path, methods=["magic"])
        assert run(capsys, "experiment", "--spec", spec)[0] == 2


class TestSynth:
    def test_writes_spec(self, capsys, tmp_path):
        code, out, _ = run(capsys, "synth", "--profile", "shift", "--seed", 4, "--out", tmp_path / "s")
        assert code == 0
        spec = json.loads((tmp_path / "s" / "spec.json").read_text())
        assert spec["seed"] == 4 and spec["generator"]["profile"] == "shift"
        assert "reweight_sigma" in spec["generator"]["parameters"]
        for key in ("background_train", "in_domain_train", "validation", "closed_test", "open_test"):
            ds = read_letor(tmp_path / "s" / spec[key])
            assert ds.feature_count == spec["generator"]["parameters"]["n_features"]

    def test_byte_identical(self, capsys, tmp_path):
        run(capsys, "synth", "--seed", 4, "--out", tmp_path / "a")
        run(capsys, "synth", "--seed", 4, "--out", tmp_path / "b")
        for name in ("background.train.txt", "open.test.txt", "spec.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_unknown_profile(self, capsys, tmp_path):
        assert run(capsys, "synth", "--profile", "drift", "--out", tmp_path / "a")[0] == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "rankadapt", "train", "--data",
                           str(tmp_path / "missing.txt"), "--out", str(tmp_path / "m.json")],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "missing.txt" in proc.stderr
