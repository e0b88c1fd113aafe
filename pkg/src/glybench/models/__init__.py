from .base import FeaturePipeline, Predictor, log_targets
from .forest import RandomForestPredictor, RegressionTree
from .gpr import (
    DEFAULT_NUGGET,
    GprCore,
    GprPredictor,
    WeightedGprEnsemble,
    convex_combine,
    rbf_kernel,
    weighted_log_mean,
)
from .linear import KnnPredictor, NaivePredictor, RidgePredictor
from .registry import (
    REGISTRY_CSV_HEADER,
    ModelRegistryEntry,
    builtin_registry,
    registry_csv,
    resolve_models,
)
from .stacking import attach_stacked, fit_stacker, stack

__all__ = [
    "DEFAULT_NUGGET",
    "FeaturePipeline",
    "GprCore",
    "GprPredictor",
    "KnnPredictor",
    "ModelRegistryEntry",
    "NaivePredictor",
    "Predictor",
    "RandomForestPredictor",
    "RegressionTree",
    "REGISTRY_CSV_HEADER",
    "RidgePredictor",
    "WeightedGprEnsemble",
    "attach_stacked",
    "builtin_registry",
    "convex_combine",
    "fit_stacker",
    "log_targets",
    "rbf_kernel",
    "registry_csv",
    "resolve_models",
    "stack",
    "weighted_log_mean",
]
