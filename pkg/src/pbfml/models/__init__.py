from .base import (
    DEFAULT_HYPERPARAMS,
    MODEL_KINDS,
    BaseModel,
    ModelSpec,
    fit,
    load_model,
    predict,
    save_model,
    score,
)

__all__ = [
    "DEFAULT_HYPERPARAMS",
    "MODEL_KINDS",
    "BaseModel",
    "ModelSpec",
    "fit",
    "load_model",
    "predict",
    "save_model",
    "score",
]
