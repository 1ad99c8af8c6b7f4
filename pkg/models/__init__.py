"""Модели: классификатор p(·|x), контекстная MLM и формат чекпоинтов."""

from .checkpoint import CheckpointError, FORMAT_VERSION, MAGIC
from .classifier import (
    ClassifierParams,
    ForwardTrace,
    backward,
    forward,
    init_classifier,
    input_gradients,
    load_classifier,
    loss_and_gradients,
    one_hot,
    param_gradients,
    predict,
    save_classifier,
    train_step,
)
from .mlm import (
    CandidateSet,
    MLMParams,
    init_mlm,
    load_mlm,
    log_probs_all,
    log_probs_at,
    predict_all,
    predict_position,
    pseudo_perplexity,
    save_mlm,
    token_log_probs,
    top_k_candidates,
    top_k_from_scores,
    train_mlm,
)

__all__ = [
    "CheckpointError",
    "FORMAT_VERSION",
    "MAGIC",
    "ClassifierParams",
    "ForwardTrace",
    "backward",
    "forward",
    "init_classifier",
    "input_gradients",
    "load_classifier",
    "loss_and_gradients",
    "one_hot",
    "param_gradients",
    "predict",
    "save_classifier",
    "train_step",
    "CandidateSet",
    "MLMParams",
    "init_mlm",
    "load_mlm",
    "log_probs_all",
    "log_probs_at",
    "predict_all",
    "predict_position",
    "pseudo_perplexity",
    "save_mlm",
    "token_log_probs",
    "top_k_candidates",
    "top_k_from_scores",
    "train_mlm",
]
