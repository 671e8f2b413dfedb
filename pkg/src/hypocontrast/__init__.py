"""Contrast estimators for hypo-elliptic diffusions observed at high frequency."""
import jax

jax.config.update("jax_enable_x64", True)

from .model import (  # noqa: E402
    HypoClass,
    HypoModel,
    ModelClass,
    ModelError,
    ParamLayout,
    ParamVector,
    UnsupportedOrderError,
    evaluate_drift,
    evaluate_generator_term,
    hormander_rank_check,
)
from .builtins import get_model, known_models  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "HypoClass",
    "HypoModel",
    "ModelClass",
    "ModelError",
    "ParamLayout",
    "ParamVector",
    "UnsupportedOrderError",
    "evaluate_drift",
    "evaluate_generator_term",
    "hormander_rank_check",
    "get_model",
    "known_models",
]
