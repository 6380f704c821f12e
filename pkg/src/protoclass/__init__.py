"""Prototype-cloud classifier with explainable IF-THEN rules.

Training is a single pass: per class, samples either found new data clouds
or are absorbed by the nearest one, driven by a recursively maintained
Cauchy density.  Inference is winner-takes-all over prototype similarities,
and neighbouring same-class clouds merge into mega clouds that back the
generated rule text.
"""

from .density import RunningStats, batch_density, density, typicality
from .errors import (
    DataError,
    DegenerateInputError,
    DimensionError,
    FormatError,
    ProtoclassError,
    StateError,
)
from .feature_space import (
    ANGLE_30_CHORD_SQ,
    NormalizationParams,
    angular_dissimilarity,
    euclidean_sq,
    fit_transform,
    minmax_normalize,
    standardize,
    transform,
)
from .harness import EvalReport, accuracy, evaluate, train_pipeline
from .inference import (
    Prediction,
    global_decision,
    local_decision,
    predict,
    predict_batch,
    similarity,
)
from .learner import ClassModel, DataCloud, Model, TrainingConfig, train
from .megaclouds import (
    MegaCloud,
    Rule,
    build_adjacency,
    export_viz,
    generate_rules,
    merge_megaclouds,
    parse_rule,
)
from .model_io import Dataset, load_model, read_features, save_model, write_features

__version__ = "0.1.0"

__all__ = [
    "ANGLE_30_CHORD_SQ",
    "ClassModel",
    "DataCloud",
    "DataError",
    "Dataset",
    "DegenerateInputError",
    "DimensionError",
    "EvalReport",
    "FormatError",
    "MegaCloud",
    "Model",
    "NormalizationParams",
    "Prediction",
    "ProtoclassError",
    "Rule",
    "RunningStats",
    "StateError",
    "TrainingConfig",
    "accuracy",
    "angular_dissimilarity",
    "batch_density",
    "build_adjacency",
    "density",
    "euclidean_sq",
    "evaluate",
    "export_viz",
    "fit_transform",
    "generate_rules",
    "global_decision",
    "load_model",
    "local_decision",
    "merge_megaclouds",
    "minmax_normalize",
    "parse_rule",
    "predict",
    "predict_batch",
    "read_features",
    "save_model",
    "similarity",
    "standardize",
    "train",
    "train_pipeline",
    "transform",
    "typicality",
    "write_features",
]
