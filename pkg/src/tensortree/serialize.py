"""JSON persistence for trees, ensembles and tensor-output models.

Models serialize to plain JSON documents: nodes as nested
``{"rule": ..., "left": ..., "right": ...}`` objects, leaves as fitted
model records, decompositions as ``weights``/``factors`` (and ``core``)
nested arrays.  Floats are written with Python's shortest round-trip
representation, so a load/save cycle reproduces predictions bit for bit,
and documents are dumped with sorted keys and fixed separators so equal
models produce byte-identical files.

Restored trees carry no training data: they predict and apply, but
cannot be pruned further.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .decomposition import CPDecomposition, TuckerDecomposition
from .ensemble import BoostedModel, ForestModel
from .leaf_models import FittedLeafModel
from .tensor_output import TensorOutputModel
from .tree import LeafNode, SplitNode, TensorTree
from .splitting import SplitRule

FORMAT = "tensortree-model"
VERSION = 1


def _decomp_to_dict(d) -> dict:
    if isinstance(d, CPDecomposition):
        return {
            "type": "cp",
            "weights": d.weights.tolist(),
            "factors": [f.tolist() for f in d.factors],
        }
    if isinstance(d, TuckerDecomposition):
        return {
            "type": "tucker",
            "core": d.core.tolist(),
            "factors": [f.tolist() for f in d.factors],
        }
    raise TypeError(f"not a decomposition: {type(d).__name__}")


def _decomp_from_dict(doc: dict):
    factors = tuple(np.asarray(f, dtype=np.float64) for f in doc["factors"])
    if doc["type"] == "cp":
        return CPDecomposition(weights=np.asarray(doc["weights"], dtype=np.float64), factors=factors)
    if doc["type"] == "tucker":
        return TuckerDecomposition(core=np.asarray(doc["core"], dtype=np.float64), factors=factors)
    raise ValueError(f"unknown decomposition type {doc['type']!r}")


def _leaf_model_to_dict(m: FittedLeafModel) -> dict:
    doc: dict[str, Any] = {
        "kind": m.kind,
        "feature_shape": list(m.feature_shape),
        "n_samples": m.n_samples,
        "fell_back": m.fell_back,
    }
    if m.kind == "mean":
        doc["mean"] = m.mean
    else:
        doc["intercept"] = m.intercept
        doc["coefficient"] = _decomp_to_dict(m.coefficient)
    return doc


def _leaf_model_from_dict(doc: dict) -> FittedLeafModel:
    kind = doc["kind"]
    model = FittedLeafModel(
        kind=kind,
        feature_shape=tuple(doc["feature_shape"]),
        n_samples=int(doc["n_samples"]),
        fell_back=bool(doc.get("fell_back", False)),
    )
    if kind == "mean":
        model.mean = float(doc["mean"])
    else:
        model.intercept = float(doc["intercept"])
        model.coefficient = _decomp_from_dict(doc["coefficient"])
    return model


def _node_to_dict(node) -> dict:
    if isinstance(node, LeafNode):
        return {
            "leaf": {
                "model": _leaf_model_to_dict(node.model),
                "n": node.n,
                "response_variance": node.response_variance,
                "model_mse": node.model_mse,
            }
        }
    return {
        "rule": {"coords": list(node.rule.coords), "threshold": node.rule.threshold},
        "left": _node_to_dict(node.left),
        "right": _node_to_dict(node.right),
    }


def _node_from_dict(doc: dict):
    if "leaf" in doc:
        leaf = doc["leaf"]
        return LeafNode(
            model=_leaf_model_from_dict(leaf["model"]),
            indices=None,
            n=int(leaf["n"]),
            response_variance=float(leaf["response_variance"]),
            model_mse=float(leaf["model_mse"]),
        )
    rule = SplitRule(
        coords=tuple(int(c) for c in doc["rule"]["coords"]),
        threshold=float(doc["rule"]["threshold"]),
    )
    return SplitNode(rule=rule, left=_node_from_dict(doc["left"]), right=_node_from_dict(doc["right"]))


def _tree_to_dict(t: TensorTree) -> dict:
    return {
        "kind": "tree",
        "feature_shape": list(t.feature_shape),
        "node": _node_to_dict(t.root),
    }


def _tree_from_dict(doc: dict) -> TensorTree:
    return TensorTree(
        root=_node_from_dict(doc["node"]),
        feature_shape=tuple(doc["feature_shape"]),
        config=None,
    )


def _boosting_to_dict(m: BoostedModel) -> dict:
    return {
        "kind": "boosting",
        "f0": m.base_value,
        "eta": m.learning_rate,
        "trees": [_tree_to_dict(t) for t in m.trees],
    }


def _boosting_from_dict(doc: dict) -> BoostedModel:
    trees = [_tree_from_dict(t) for t in doc["trees"]]
    return BoostedModel(float(doc["f0"]), float(doc["eta"]), trees)


def _forest_to_dict(m: ForestModel) -> dict:
    return {"kind": "forest", "trees": [_tree_to_dict(t) for t in m.trees]}


def _forest_from_dict(doc: dict) -> ForestModel:
    return ForestModel([_tree_from_dict(t) for t in doc["trees"]])


def _output_to_dict(m: TensorOutputModel) -> dict:
    doc: dict[str, Any] = {
        "kind": "tensor_output",
        "approach": m.kind,
        "output_shape": list(m.output_shape),
        "ensembles": [_boosting_to_dict(e) for e in m.ensembles],
    }
    if m.kind == "lowrank":
        doc["decomp"] = m.decomp_kind
        doc["output_factors"] = [f.tolist() for f in m.output_factors]
        if m.decomp_kind == "cp":
            doc["weights"] = m.weights.tolist()
        else:
            doc["core"] = m.core.tolist()
    return doc


def _output_from_dict(doc: dict) -> TensorOutputModel:
    ensembles = [_boosting_from_dict(e) for e in doc["ensembles"]]
    if doc["approach"] == "entrywise":
        return TensorOutputModel("entrywise", tuple(doc["output_shape"]), ensembles)
    weights = core = None
    if doc["decomp"] == "cp":
        weights = np.asarray(doc["weights"], dtype=np.float64)
    else:
        core = np.asarray(doc["core"], dtype=np.float64)
    return TensorOutputModel(
        "lowrank",
        tuple(doc["output_shape"]),
        ensembles,
        decomp_kind=doc["decomp"],
        weights=weights,
        core=core,
        output_factors=tuple(np.asarray(f, dtype=np.float64) for f in doc["output_factors"]),
    )


def model_to_dict(model) -> dict:
    """Serializable document for any fitted model type."""
    if isinstance(model, TensorTree):
        payload = _tree_to_dict(model)
    elif isinstance(model, BoostedModel):
        payload = _boosting_to_dict(model)
    elif isinstance(model, ForestModel):
        payload = _forest_to_dict(model)
    elif isinstance(model, TensorOutputModel):
        payload = _output_to_dict(model)
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return {"format": FORMAT, "version": VERSION, **payload}


def model_from_dict(doc: dict):
    """Inverse of :func:`model_to_dict`."""
    if doc.get("format") != FORMAT:
        raise ValueError("not a tensortree model document")
    kind = doc["kind"]
    if kind == "tree":
        return _tree_from_dict(doc)
    if kind == "boosting":
        return _boosting_from_dict(doc)
    if kind == "forest":
        return _forest_from_dict(doc)
    if kind == "tensor_output":
        return _output_from_dict(doc)
    raise ValueError(f"unknown model kind {kind!r}")


def dumps(model) -> str:
    """Canonical JSON text: sorted keys, fixed separators, trailing newline."""
    return json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":")) + "\n"


def loads(text: str):
    return model_from_dict(json.loads(text))


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(model))


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())
