"""Feature-based similarity models for cold-start item recommendation."""

from ._coldrec import (
    ColdrecError,
    EvalReport,
    FbsmModel,
    FeatureMatrix,
    Preferences,
    evaluate,
    gradcheck,
    load_features,
    run_cli,
    score,
    train_fbsm,
)

__all__ = [
    "ColdrecError",
    "EvalReport",
    "FbsmModel",
    "FeatureMatrix",
    "Preferences",
    "evaluate",
    "gradcheck",
    "load_features",
    "run_cli",
    "score",
    "train_fbsm",
]
