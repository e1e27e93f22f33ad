"""JSON model files.

Every file has ``kind`` ("linear", "ensemble" or "interpolated") and
``feature_count``. Nested models (an ensemble's ``background``, the
``components`` of an interpolation) are either inline objects or paths,
relative paths being resolved against the referencing file's directory.

Floats go through ``json``'s shortest round-trip repr, so a saved model
scores bit-identically after loading.
"""

from __future__ import annotations

import json
import os
from typing import Optional, Union

from .boosting import BoostedEnsemble, SingleFeature, Stage, TreeBasis
from .interpolation import InterpolatedModel
from .linear import LinearModel
from .scorer import Scorer
from .trees import RegressionTree


class ModelFormatError(ValueError):
    pass


def _ref(model: Scorer, base_dir: Optional[str], refs: bool):
    path = getattr(model, "source_path", None)
    if refs and path is not None:
        if base_dir is not None:
            path = os.path.relpath(os.path.abspath(path), os.path.abspath(base_dir))
        return path.replace(os.sep, "/")
    return model_to_dict(model, base_dir, refs)


def model_to_dict(model: Scorer, base_dir: Optional[str] = None, refs: bool = True) -> dict:
    """Serialize ``model``; nested models loaded from files are written as
    path references when ``refs`` is true."""
    if isinstance(model, LinearModel):
        return {"kind": "linear", "feature_count": model.feature_count,
                "weights": [float(w) for w in model.weights]}
    if isinstance(model, BoostedEnsemble):
        stages = []
        for st in model.stages:
            if isinstance(st.basis, SingleFeature):
                stages.append({"type": "feature", "feature_index": st.basis.feature_index,
                               "coefficient": float(st.coefficient)})
            else:
                stages.append({"type": "tree", "coefficient": float(st.coefficient),
                               "tree": st.basis.tree.to_dict()})
        return {"kind": "ensemble", "feature_count": model.feature_count,
                "background": _ref(model.background, base_dir, refs),
                "shrinkage": model.shrinkage, "stages": stages}
    if isinstance(model, InterpolatedModel):
        return {"kind": "interpolated", "feature_count": model.feature_count,
                "components": [_ref(c, base_dir, refs) for c in model.components],
                "alphas": [float(a) for a in model.alphas]}
    raise TypeError(f"cannot serialize {type(model).__name__}")


def _resolve(ref, base_dir: Optional[str]) -> Scorer:
    if isinstance(ref, dict):
        return model_from_dict(ref, base_dir)
    if isinstance(ref, str):
        path = ref if os.path.isabs(ref) or base_dir is None else os.path.join(base_dir, ref)
        return load_model(path)
    raise ModelFormatError(f"bad model reference {ref!r}")


def model_from_dict(d: dict, base_dir: Optional[str] = None) -> Scorer:
    try:
        kind = d["kind"]
        fc = int(d["feature_count"])
        if kind == "linear":
            model = LinearModel(d["weights"])
        elif kind == "ensemble":
            background = _resolve(d["background"], base_dir)
            stages = []
            for rec in d["stages"]:
                if rec["type"] == "feature":
                    stages.append(Stage(SingleFeature(int(rec["feature_index"])),
                                        float(rec["coefficient"])))
                elif rec["type"] == "tree":
                    tree = RegressionTree.from_dict(rec["tree"], fc)
                    stages.append(Stage(TreeBasis(tree), float(rec.get("coefficient", 1.0))))
                else:
                    raise ModelFormatError(f"unknown stage type {rec['type']!r}")
            model = BoostedEnsemble(background, stages, float(d["shrinkage"]))
        elif kind == "interpolated":
            model = InterpolatedModel([_resolve(c, base_dir) for c in d["components"]],
                                      d["alphas"])
        else:
            raise ModelFormatError(f"unknown model kind {kind!r}")
    except (KeyError, TypeError) as e:
        raise ModelFormatError(f"malformed model file: {e}") from None
    if model.feature_count != fc:
        raise ModelFormatError(f"declared feature_count {fc} but model has "
                               f"{model.feature_count}")
    return model


def dumps_model(model: Scorer, base_dir: Optional[str] = None, refs: bool = True) -> str:
    return json.dumps(model_to_dict(model, base_dir, refs), indent=1) + "\n"


def save_model(model: Scorer, path: Union[str, os.PathLike], refs: bool = True) -> None:
    path = os.fspath(path)
    text = dumps_model(model, os.path.dirname(os.path.abspath(path)), refs)
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
    model.source_path = path


def loads_model(text: str, base_dir: Optional[str] = None) -> Scorer:
    return model_from_dict(json.loads(text), base_dir)


def load_model(path: Union[str, os.PathLike]) -> Scorer:
    path = os.fspath(path)
    with open(path, encoding="utf-8") as f:
        try:
            d = json.load(f)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"{path}: not valid JSON ({e})") from None
    model = model_from_dict(d, os.path.dirname(os.path.abspath(path)))
    model.source_path = path
    return model
