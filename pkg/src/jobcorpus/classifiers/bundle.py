"""A trained classifier plus everything needed to score raw documents.

The bundle ties together the feature dictionary, the TF-IDF model, and one of
the two classifier families, and round-trips through a self-describing JSON
file.  Floats serialize via repr so a saved model predicts identically after
reload.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import LoadError
from ..taxonomy import CategoryCode
from ..tfidf import TfidfModel
from .features import Dictionary, FeatureVector, design_matrix, vectorize
from .forest import Forest, TreeNode, forest_predict
from .svm import SvmBinaryModel, SvmModel, svm_predict, svm_predict_batch

FORMAT_NAME = "jobcorpus-model"
FORMAT_VERSION = 1


@dataclass
class TextClassifier:
    kind: str  # "svm" or "rf"
    dictionary: Dictionary
    tfidf: TfidfModel
    svm: SvmModel | None = None
    forest: Forest | None = None

    @property
    def classes(self) -> tuple[CategoryCode, ...]:
        return self.svm.classes if self.kind == "svm" else self.forest.classes

    def vectorize(self, doc) -> FeatureVector:
        return vectorize(doc, self.dictionary, self.tfidf)

    def predict_vector(self, fv: FeatureVector) -> CategoryCode:
        if self.kind == "svm":
            return svm_predict(self.svm, fv)
        return forest_predict(self.forest, fv)

    def predict_doc(self, doc) -> CategoryCode:
        return self.predict_vector(self.vectorize(doc))

    def predict_docs(self, docs) -> list[CategoryCode]:
        vectors = [self.vectorize(d) for d in docs]
        if self.kind == "svm":
            X = design_matrix(vectors, len(self.dictionary))
            return svm_predict_batch(self.svm, X)
        return [forest_predict(self.forest, fv) for fv in vectors]


def _fv_to_json(fv: FeatureVector) -> dict:
    return {"cols": [int(c) for c in fv.cols], "vals": [float(v) for v in fv.vals]}


def _fv_from_json(obj: dict) -> FeatureVector:
    return FeatureVector(obj["cols"], obj["vals"])


def _tree_to_json(node: TreeNode) -> dict:
    if node.is_leaf:
        return {"k": node.klass}
    return {
        "f": node.feature,
        "t": node.threshold,
        "l": _tree_to_json(node.left),
        "r": _tree_to_json(node.right),
    }


def _tree_from_json(obj: dict) -> TreeNode:
    if "k" in obj:
        return TreeNode(klass=int(obj["k"]))
    return TreeNode(
        feature=int(obj["f"]),
        threshold=float(obj["t"]),
        left=_tree_from_json(obj["l"]),
        right=_tree_from_json(obj["r"]),
    )


def save_model(path, bundle: TextClassifier) -> None:
    payload: dict = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "kind": bundle.kind,
        "dictionary": {
            "tokens": list(bundle.dictionary.tokens),
            "min_count": bundle.dictionary.min_count,
        },
        "tfidf": {"n_docs": bundle.tfidf.n_docs, "df": dict(bundle.tfidf.df)},
    }
    if bundle.kind == "svm":
        svm = bundle.svm
        payload["svm"] = {
            "gamma": svm.gamma,
            "c": svm.c,
            "classes": [c.render() for c in svm.classes],
            "binaries": [
                {
                    "bias": b.bias,
                    "alphas": [float(a) for a in b.alphas],
                    "labels": [int(l) for l in b.labels],
                    "support_vectors": [_fv_to_json(sv) for sv in b.support_vectors],
                }
                for b in svm.binaries
            ],
        }
    elif bundle.kind == "rf":
        forest = bundle.forest
        payload["rf"] = {
            "seed": forest.seed,
            "num_trees": forest.num_trees,
            "bootstrap": forest.bootstrap,
            "feature_subsample": forest.feature_subsample,
            "max_depth": forest.max_depth,
            "min_samples_leaf": forest.min_samples_leaf,
            "classes": [c.render() for c in forest.classes],
            "trees": [_tree_to_json(t) for t in forest.trees],
        }
    else:
        raise LoadError(f"unknown model kind {bundle.kind!r}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False)
        fh.write("\n")


def load_model(path) -> TextClassifier:
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise LoadError(f"invalid JSON ({exc.msg})", path=path)
    if payload.get("format") != FORMAT_NAME:
        raise LoadError(f"not a {FORMAT_NAME} file", path=path)
    if payload.get("version") != FORMAT_VERSION:
        raise LoadError(f"unsupported model version {payload.get('version')!r}", path=path)
    dictionary = Dictionary(
        tokens=tuple(payload["dictionary"]["tokens"]),
        min_count=int(payload["dictionary"]["min_count"]),
    )
    tfidf = TfidfModel(
        n_docs=int(payload["tfidf"]["n_docs"]),
        df={str(k): int(v) for k, v in payload["tfidf"]["df"].items()},
    )
    kind = payload.get("kind")
    if kind == "svm":
        spec = payload["svm"]
        binaries = tuple(
            SvmBinaryModel(
                support_vectors=[_fv_from_json(o) for o in b["support_vectors"]],
                alphas=np.asarray(b["alphas"], dtype=np.float64),
                labels=np.asarray(b["labels"], dtype=np.int64),
                bias=float(b["bias"]),
                gamma=float(spec["gamma"]),
                c=float(spec["c"]),
            )
            for b in spec["binaries"]
        )
        svm = SvmModel(
            classes=tuple(CategoryCode.parse(c) for c in spec["classes"]),
            binaries=binaries,
            gamma=float(spec["gamma"]),
            c=float(spec["c"]),
        )
        return TextClassifier(kind="svm", dictionary=dictionary, tfidf=tfidf, svm=svm)
    if kind == "rf":
        spec = payload["rf"]
        forest = Forest(
            trees=[_tree_from_json(t) for t in spec["trees"]],
            classes=tuple(CategoryCode.parse(c) for c in spec["classes"]),
            num_trees=int(spec["num_trees"]),
            seed=int(spec["seed"]),
            bootstrap=bool(spec["bootstrap"]),
            feature_subsample=spec["feature_subsample"],
            max_depth=spec["max_depth"],
            min_samples_leaf=int(spec["min_samples_leaf"]),
        )
        return TextClassifier(kind="rf", dictionary=dictionary, tfidf=tfidf, forest=forest)
    raise LoadError(f"unknown model kind {kind!r}", path=path)
