"""
Лоссы обучения: cross-entropy с отжигом обучающего сигнала (TSA) и
согласованность на возмущённых входах.

Оба лосса сводятся к KL(target || p(·|x)) с константной целью, поэтому
градиент по логитам в обоих случаях p − target, а дальше общий backward
классификатора.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np

from models.classifier import (
    ClassifierParams,
    add_scaled,
    backward,
    forward,
    one_hot,
    zero_gradients,
)
from numerics import kl_divergence
from perturb import Perturbation
from vocab import Sentence

from .models import TSA_SCHEDULES


@dataclass
class BatchLoss:
    loss: float
    grads: Dict[str, np.ndarray]
    # CE: доля примеров, прошедших TSA; согласованность: всегда 1
    kept_fraction: float = 1.0


def consistency_loss(q_sharp: np.ndarray, perturbed_prediction: np.ndarray) -> Tuple[float, np.ndarray]:
    """KL(q_sharp || p(x̂)) и градиент по логитам возмущённой ветки.

    q_sharp — константа: градиент в неё не идёт, ∂/∂logits = p − q.
    """
    q = np.asarray(q_sharp, dtype=np.float64)
    p = np.asarray(perturbed_prediction, dtype=np.float64)
    if q.shape != p.shape:
        raise ValueError(f"dimension mismatch: target {q.shape} vs prediction {p.shape}")
    return kl_divergence(q, p), p - q


def tsa_threshold(step: int, total_steps: int, C: int, schedule: str = "linear") -> float:
    """η(t) = 1/C + (1 − 1/C)·α(t/total), α: linear t, log 1−e^{−5t}, exp e^{5(t−1)}."""
    if C < 2:
        raise ValueError(f"TSA needs at least 2 classes, got {C}")
    if total_steps < 1 or not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    t = step / total_steps
    if schedule == "linear":
        alpha = t
    elif schedule == "log":
        alpha = 1.0 - math.exp(-5.0 * t)
    elif schedule == "exp":
        alpha = math.exp(5.0 * (t - 1.0))
    else:
        raise ValueError(f"Unknown TSA schedule: {schedule!r} (expected one of {', '.join(TSA_SCHEDULES)})")
    return 1.0 / C + (1.0 - 1.0 / C) * alpha


def supervised_loss_with_tsa(params: ClassifierParams, batch: Sequence[Tuple[Sentence, int]],
                             eta: float) -> BatchLoss:
    """Средний CE по примерам с p(истинный класс) ≤ η.

    Если отсеяны все — лосс 0 и нулевые градиенты.
    """
    if not batch:
        raise ValueError("empty labeled batch")
    grads = zero_gradients(params)
    kept = []
    for sentence, label in batch:
        probs, trace = forward(params, sentence)
        target = one_hot(label, params.C)
        if probs[label] <= eta:
            kept.append((probs, trace, target, label))

    if not kept:
        return BatchLoss(loss=0.0, grads=grads, kept_fraction=0.0)

    total = 0.0
    for probs, trace, target, label in kept:
        total += kl_divergence(target, probs)
        add_scaled(grads, backward(params, trace, probs - target).params, 1.0 / len(kept))
    return BatchLoss(loss=total / len(kept), grads=grads, kept_fraction=len(kept) / len(batch))


def consistency_batch_loss(params: ClassifierParams, perturbations: Sequence[Perturbation]) -> BatchLoss:
    """Средний KL(q || p(x̂)) по батчу возмущений, градиент только через x̂."""
    grads = zero_gradients(params)
    if not perturbations:
        return BatchLoss(loss=0.0, grads=grads)
    total = 0.0
    for pert in perturbations:
        probs, trace = forward(params, pert.perturbed)
        loss, dlogits = consistency_loss(pert.target, probs)
        total += loss
        add_scaled(grads, backward(params, trace, dlogits).params, 1.0 / len(perturbations))
    return BatchLoss(loss=total / len(perturbations), grads=grads)
