"""From-scratch supervised classifiers over TF-IDF feature vectors."""

from .features import Dictionary, FeatureVector, build_dictionary, design_matrix, vectorize
from .svm import SvmBinaryModel, SvmModel, rbf_kernel, svm_predict, train_svm, train_svm_binary
from .forest import Forest, forest_predict, train_forest
from .grid import GridCell, GridReport, evaluate, grid_search, stratified_split
from .bundle import TextClassifier, load_model, save_model

__all__ = [
    "Dictionary",
    "FeatureVector",
    "build_dictionary",
    "design_matrix",
    "vectorize",
    "SvmBinaryModel",
    "SvmModel",
    "rbf_kernel",
    "svm_predict",
    "train_svm",
    "train_svm_binary",
    "Forest",
    "forest_predict",
    "train_forest",
    "GridCell",
    "GridReport",
    "evaluate",
    "grid_search",
    "stratified_split",
    "TextClassifier",
    "load_model",
    "save_model",
]
