"""Численные примитивы: распределения, KL, заточка, проверка градиентов, Adam."""

from .probability import (
    Distribution,
    KL_FLOOR,
    is_distribution,
    softmax,
    log_softmax_rows,
    sharpen,
    kl_divergence,
    entropy,
    cross_entropy,
)
from .gradcheck import grad_check, numeric_gradient, relative_error
from .optim import Adam

__all__ = [
    "Distribution",
    "KL_FLOOR",
    "is_distribution",
    "softmax",
    "log_softmax_rows",
    "sharpen",
    "kl_divergence",
    "entropy",
    "cross_entropy",
    "grad_check",
    "numeric_gradient",
    "relative_error",
    "Adam",
]
