"""Hold-out evaluation and hyperparameter grids for both classifier families.

The split is stratified per class at the configured ratio; classes with a
single example go entirely to training.  A grid cell that fails to train is
recorded with its error and the run continues.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..errors import ConfigError, JobcorpusError
from ..taxonomy import CategoryCode
from ..tfidf import TfidfModel, fit_tfidf
from .features import FeatureVector, build_dictionary, design_matrix, vectorize
from .forest import forest_predict, train_forest
from .svm import svm_predict_batch, train_svm


def evaluate(
    predict: Callable[[FeatureVector], CategoryCode],
    test: Sequence[tuple[FeatureVector, CategoryCode]],
) -> float:
    """Exact-match accuracy; empty test sets are a config error."""
    if not test:
        raise ConfigError("cannot evaluate on an empty test set")
    hits = sum(1 for fv, code in test if predict(fv) == code)
    return hits / len(test)


def stratified_split(
    labels: Sequence[CategoryCode], ratio: float, seed: int
) -> tuple[list[int], list[int]]:
    """Per-class index split; singleton classes go entirely to training."""
    if not (0.0 < ratio < 1.0):
        raise ConfigError(f"split ratio must be in (0, 1), got {ratio}")
    by_class: dict[CategoryCode, list[int]] = {}
    for idx, code in enumerate(labels):
        by_class.setdefault(code, []).append(idx)
    rng = random.Random(seed)
    train_idx: list[int] = []
    test_idx: list[int] = []
    for code in sorted(by_class):
        indices = by_class[code]
        if len(indices) < 2:
            train_idx.extend(indices)
            continue
        shuffled = indices[:]
        rng.shuffle(shuffled)
        n_train = min(len(indices) - 1, max(1, round(ratio * len(indices))))
        train_idx.extend(shuffled[:n_train])
        test_idx.extend(shuffled[n_train:])
    return sorted(train_idx), sorted(test_idx)


@dataclass
class GridCell:
    model_kind: str  # "svm" or "rf"
    param_name: str  # "gamma" or "trees"
    param_value: float
    min_count: int
    dict_size: int
    accuracy: float | None = None
    error: str | None = None


@dataclass
class GridReport:
    svm_cells: list[GridCell] = field(default_factory=list)
    rf_cells: list[GridCell] = field(default_factory=list)

    @property
    def winner(self) -> GridCell | None:
        scored = [c for c in self.svm_cells + self.rf_cells if c.accuracy is not None]
        if not scored:
            return None
        return min(
            scored,
            key=lambda c: (
                -c.accuracy,
                c.dict_size,
                c.param_value,
                0 if c.model_kind == "svm" else 1,
            ),
        )


def grid_search(
    corpus: Sequence[tuple],  # (Document, CategoryCode) pairs
    svm_gammas: Sequence[float] = (),
    rf_trees: Sequence[int] = (),
    min_counts: Sequence[int] = (1,),
    split_ratio: float = 0.7,
    seed: int = 0,
    svm_c: float = 1.0,
    tfidf: TfidfModel | None = None,
    rf_seed: int = 0,
) -> GridReport:
    """Accuracy for every (hyperparameter, dictionary cutoff) combination."""
    if not corpus:
        raise ConfigError("grid search needs a nonempty corpus")
    docs = [doc for doc, _ in corpus]
    labels = [code for _, code in corpus]
    train_idx, test_idx = stratified_split(labels, split_ratio, seed)
    if not test_idx:
        raise ConfigError("split produced an empty test set; corpus too small")
    train_docs = [docs[i] for i in train_idx]
    report = GridReport()
    for min_count in min_counts:
        dictionary = build_dictionary(train_docs, min_count=min_count)
        model = tfidf if tfidf is not None else fit_tfidf(train_docs)
        train = [(vectorize(docs[i], dictionary, model), labels[i]) for i in train_idx]
        test = [(vectorize(docs[i], dictionary, model), labels[i]) for i in test_idx]
        dim = len(dictionary)
        X_test = design_matrix([fv for fv, _ in test], dim)
        test_codes = [code for _, code in test]
        for gamma in svm_gammas:
            cell = GridCell("svm", "gamma", float(gamma), min_count, dim)
            try:
                svm = train_svm(train, gamma=gamma, c=svm_c, dim=dim)
                predictions = svm_predict_batch(svm, X_test)
                cell.accuracy = sum(
                    1 for got, want in zip(predictions, test_codes) if got == want
                ) / len(test_codes)
            except JobcorpusError as exc:
                cell.error = str(exc)
            report.svm_cells.append(cell)
        for trees in rf_trees:
            cell = GridCell("rf", "trees", float(trees), min_count, dim)
            try:
                forest = train_forest(train, num_trees=int(trees), seed=rf_seed, dim=dim)
                hits = sum(1 for fv, want in test if forest_predict(forest, fv) == want)
                cell.accuracy = hits / len(test)
            except JobcorpusError as exc:
                cell.error = str(exc)
            report.rf_cells.append(cell)
    return report
