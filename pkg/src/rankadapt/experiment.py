"""Closed/open test experiment runner.

An experiment spec is a JSON object naming five LETOR files (background
training data, in-domain training, validation, closed test, open test),
the adaptation methods to run, their configs, an output directory and a
master seed. Relative paths resolve against the spec file's directory.

The runner trains the background and in-domain linear rankers, runs the
requested adaptations, evaluates every model on both test sets and writes
``closed.tsv``, ``open.tsv``, ``run.json`` and the model files. Nothing
time- or host-dependent is written, so reruns are byte-identical.
"""

from __future__ import annotations

import contextlib
import json
import logging
import os
import platform
from dataclasses import asdict, dataclass, fields
from typing import Optional

import numpy as np

from . import __version__
from .augment import AugmentConfig, knn_expand, merge_datasets, regroup_by_source, select_seed_queries
from .boosting import BoostConfig, lambda_boost, lambda_smart
from .data import Dataset, read_letor
from .interpolation import InterpolatedModel, PowellConfig, optimize_weights_powell
from .linear import TrainConfig, train_linear_lambdarank
from .metrics import MetricsReport, NdcgConfig, mean_ndcg, tsv_header
from .modelio import save_model

logger = logging.getLogger(__name__)

METHODS = ("baselines", "interpolate-2way", "interpolate-3way", "lambda-boost", "lambda-smart")
DATA_KEYS = ("background_train", "in_domain_train", "validation", "closed_test", "open_test")


class SpecError(ValueError):
    """Invalid experiment spec or inconsistent input files."""


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


def _build(cls, d: Optional[dict], **defaults):
    d = dict(d or {})
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise SpecError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    for k, v in defaults.items():
        d.setdefault(k, v)
    if "ave_ndcg_range" in d:
        d["ave_ndcg_range"] = tuple(d["ave_ndcg_range"])
    try:
        return cls(**d)
    except (TypeError, ValueError) as e:
        raise SpecError(f"bad {cls.__name__}: {e}") from None


@dataclass(frozen=True)
class ExperimentSpec:
    background_train: str
    in_domain_train: str
    validation: str
    closed_test: str
    open_test: str
    output_dir: str
    seed: int = 0
    methods: tuple = METHODS
    linear: TrainConfig = TrainConfig()
    powell: PowellConfig = PowellConfig()
    boost: BoostConfig = BoostConfig()
    smart: BoostConfig = BoostConfig(randomize=True)
    # a second, non-randomized LambdaSMART row; None to skip it
    smart_reference: Optional[BoostConfig] = BoostConfig(randomize=False)
    augment: Optional[AugmentConfig] = None
    ndcg: NdcgConfig = NdcgConfig()

    @classmethod
    def from_dict(cls, d: dict, base_dir: str = ".") -> "ExperimentSpec":
        if not isinstance(d, dict):
            raise SpecError("spec must be a JSON object")
        missing = [k for k in DATA_KEYS if k not in d]
        if missing:
            raise SpecError(f"spec lacks {', '.join(missing)}")
        seed = int(d.get("seed", 0))
        paths = {k: os.path.normpath(os.path.join(base_dir, d[k])) for k in DATA_KEYS}
        methods = tuple(d.get("methods", METHODS))
        bad = [m for m in methods if m not in METHODS]
        if bad:
            raise SpecError(f"unknown methods {bad}; choose from {list(METHODS)}")
        ref = d.get("smart_reference", {})
        aug = d.get("augment")
        return cls(
            output_dir=os.path.normpath(os.path.join(base_dir, d.get("output_dir", "results"))),
            seed=seed,
            methods=methods,
            linear=_build(TrainConfig, d.get("linear"), seed=seed),
            powell=_build(PowellConfig, d.get("powell"), seed=seed),
            boost=_build(BoostConfig, d.get("boost"), seed=seed),
            smart=_build(BoostConfig, d.get("smart"), seed=seed, randomize=True),
            smart_reference=None if ref is None else _build(BoostConfig, ref, seed=seed,
                                                             randomize=False),
            augment=None if aug is None else _build(AugmentConfig, aug, seed=seed),
            ndcg=_build(NdcgConfig, d.get("ndcg")),
            **paths,
        )

    @classmethod
    def load(cls, path: str) -> "ExperimentSpec":
        with open(path, encoding="utf-8") as f:
            try:
                d = json.load(f)
            except json.JSONDecodeError as e:
                raise SpecError(f"{path}: not valid JSON ({e})") from None
        return cls.from_dict(d, os.path.dirname(os.path.abspath(path)))


@contextlib.contextmanager
def _stage(name: str):
    logger.info("stage %s", name)
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, e) from e


def load_inputs(spec: ExperimentSpec) -> dict:
    data = {k: read_letor(getattr(spec, k)) for k in DATA_KEYS}
    ref_key = DATA_KEYS[0]
    for k in DATA_KEYS[1:]:
        if data[k].feature_count != data[ref_key].feature_count:
            raise SpecError(
                f"feature count mismatch: {getattr(spec, ref_key)} has "
                f"{data[ref_key].feature_count}, {getattr(spec, k)} has {data[k].feature_count}")
    return data


@dataclass
class ExperimentResult:
    rows: list  # (name, closed MetricsReport, open MetricsReport)
    manifest: dict

    def table(self, which: str) -> str:
        idx = {"closed": 1, "open": 2}[which]
        lines = [tsv_header()] + [row[idx].tsv_row(row[0]) for row in self.rows]
        return "\n".join(lines) + "\n"

    def report(self, name: str, which: str) -> MetricsReport:
        idx = {"closed": 1, "open": 2}[which]
        for row in self.rows:
            if row[0] == name:
                return row[idx]
        raise KeyError(name)


def _cfg(c) -> Optional[dict]:
    if c is None:
        return None
    d = asdict(c)
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def run_experiment(spec: ExperimentSpec, write: bool = True) -> ExperimentResult:
    """Train, adapt and evaluate; write outputs to ``spec.output_dir`` when ``write``."""
    # input problems are usage errors, not stage failures
    data = load_inputs(spec)
    bg_train, in_train, valid = data["background_train"], data["in_domain_train"], data["validation"]
    models: list[tuple[str, str, object]] = []  # (row name, file stem, model)
    extra: dict = {}
    augmented = None

    with _stage("train-background"):
        background = train_linear_lambdarank(bg_train, spec.linear, spec.ndcg)
    with _stage("train-in-domain"):
        in_domain = train_linear_lambdarank(in_train, spec.linear, spec.ndcg)
    models += [("Back.", "background", background), ("In-domain", "in_domain", in_domain)]

    if "interpolate-2way" in spec.methods:
        with _stage("interpolate-2way"):
            comps = [background, in_domain]
            alphas = optimize_weights_powell(comps, valid, spec.ndcg, spec.powell)
            models.append(("2W-Interp.", "interp2", InterpolatedModel(comps, alphas)))
            extra["interp2_alphas"] = alphas.tolist()

    if "interpolate-3way" in spec.methods:
        with _stage("augment"):
            aug_cfg = spec.augment or AugmentConfig(max(1, len(in_train) // 4), seed=spec.seed)
            seeds = select_seed_queries(in_train, aug_cfg)
            expanded = knn_expand(seeds, bg_train, aug_cfg)
            extra["augment"] = {"config": _cfg(aug_cfg), "seed_queries": len(seeds),
                                "scanned": bg_train.document_count, "accepted": len(expanded)}
        with _stage("train-augmented"):
            aug_train = merge_datasets(in_train, regroup_by_source(expanded))
            augmented = train_linear_lambdarank(aug_train, spec.linear, spec.ndcg)
        with _stage("interpolate-3way"):
            comps = [background, in_domain, augmented]
            alphas = optimize_weights_powell(comps, valid, spec.ndcg, spec.powell)
            models.append(("3W-Interp.", "interp3", InterpolatedModel(comps, alphas)))
            extra["interp3_alphas"] = alphas.tolist()

    if "lambda-boost" in spec.methods:
        with _stage("lambda-boost"):
            models.append(("LambdaBoost", "lambda_boost",
                           lambda_boost(background, in_train, spec.boost, spec.ndcg)))

    if "lambda-smart" in spec.methods:
        with _stage("lambda-smart"):
            models.append(("LambdaSMART", "lambda_smart",
                           lambda_smart(background, in_train, spec.smart, spec.ndcg)))
        if spec.smart_reference is not None:
            with _stage("lambda-smart-reference"):
                models.append(("LambdaSMART-NR", "lambda_smart_nr",
                               lambda_smart(background, in_train, spec.smart_reference, spec.ndcg)))

    rows = []
    with _stage("evaluate"):
        for name, _, model in models:
            rows.append((name, mean_ndcg(data["closed_test"], model, spec.ndcg),
                         mean_ndcg(data["open_test"], model, spec.ndcg)))

    manifest = {
        "seed": spec.seed,
        "inputs": {k: os.path.relpath(getattr(spec, k), spec.output_dir) for k in DATA_KEYS},
        "methods": list(spec.methods),
        "configs": {"linear": _cfg(spec.linear), "powell": _cfg(spec.powell),
                    "boost": _cfg(spec.boost), "smart": _cfg(spec.smart),
                    "smart_reference": _cfg(spec.smart_reference), "ndcg": _cfg(spec.ndcg)},
        "rows": [name for name, _, _ in models],
        "validation_ave_ndcg": {name: round(mean_ndcg(valid, m, spec.ndcg).ave_ndcg, 12)
                                for name, _, m in models},
        "versions": {"rankadapt": __version__, "numpy": np.__version__,
                     "python": platform.python_version()},
    }
    manifest.update(extra)
    result = ExperimentResult(rows, manifest)

    if write:
        with _stage("write"):
            _write(spec, result, models, augmented)
    return result


def _write(spec: ExperimentSpec, result: ExperimentResult, models, augmented) -> None:
    out = spec.output_dir
    mdir = os.path.join(out, "models")
    os.makedirs(mdir, exist_ok=True)
    by_stem = {stem: m for _, stem, m in models}
    if augmented is not None:
        by_stem["augmented"] = augmented
    # components first so composite models can reference them by path
    order = ["background", "in_domain", "augmented"]
    for stem in order + [s for s in by_stem if s not in order]:
        if stem in by_stem:
            save_model(by_stem[stem], os.path.join(mdir, stem + ".json"))
    for which in ("closed", "open"):
        with open(os.path.join(out, f"{which}.tsv"), "w", encoding="utf-8") as f:
            f.write(result.table(which))
    with open(os.path.join(out, "run.json"), "w", encoding="utf-8") as f:
        json.dump(result.manifest, f, indent=1, sort_keys=True)
        f.write("\n")
