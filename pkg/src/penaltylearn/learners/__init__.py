"""Penalty predictors: unsupervised baselines, constant, linear, MLP and recurrent models."""

from .baselines import aic_penalty, bic_penalty, fit_constant
from .gradcheck import grad_check
from .linear import fit_linear_fista, soft_threshold
from .mlp import fit_mlp
from .models import (Constant, Linear, Mlp, ModelKindError, Preprocessing, Recurrent,
                     TrainConfig, load_model, log_predict, predict, save_model)
from .recurrent import fit_recurrent, recurrent_forward

__all__ = [
    "aic_penalty", "bic_penalty", "fit_constant", "grad_check", "fit_linear_fista",
    "soft_threshold", "fit_mlp", "Constant", "Linear", "Mlp", "ModelKindError",
    "Preprocessing", "Recurrent", "TrainConfig", "load_model", "log_predict", "predict",
    "save_model", "fit_recurrent", "recurrent_forward",
]
