"""
VA_TR: виртуально-адверсариальная замена токенов.

Шаги для одного предложения x и множества позиций I:
  1. q = sharpen(p(·|x), T) — цель, константа
  2. один backward: g_{x_m} = ∂KL(q || p(·|x')) / ∂e(x_m) при x' = x
  3. для каждой m ∈ I независимо: кандидаты = top-k MLM в позиции m
     без исходного токена; выбор по стратегии (vat_d: argmax δ(x_m, v)ᵀ g_m)
  4. все замены применяются одновременно

Без заточки q = p(·|x), и при x' = x градиент KL равен нулю — скор
замены вырождается. Заточка делает первый порядок ненулевым.

Таблица скоров считается по всему словарю (один matvec на позицию) и
кэшируется: refinement пересобирает кандидатов, но скоры берёт отсюда
и backward больше не делает.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from models.classifier import ClassifierParams, forward, input_gradients
from models.mlm import MLMParams, log_probs_at, top_k_from_scores
from numerics import kl_divergence, sharpen
from vocab import Sentence, perturbation_budget

from .models import Perturbation, PerturbationConfig
from .strategies import get_selector


def select_indexes(M: int, tau: float, rng: np.random.Generator) -> np.ndarray:
    """Равномерная выборка позиций без возвращения, размер perturbation_budget(M, τ)."""
    n = perturbation_budget(M, tau)
    return np.sort(rng.choice(M, size=n, replace=False)).astype(np.int64)


def replacement_scores(g_m: np.ndarray, E: np.ndarray, x_m: int) -> np.ndarray:
    """score(v) = (E[v] − E[x_m])ᵀ g_m для всех v; score(x_m) = 0 ровно."""
    g_m = np.asarray(g_m, dtype=np.float64)
    if g_m.shape != (E.shape[1],):
        raise ValueError(f"gradient has shape {g_m.shape}, expected ({E.shape[1]},)")
    s = E @ g_m
    return s - s[x_m]


def sharpened_target(classifier: ClassifierParams, x: Sentence, T: float) -> np.ndarray:
    return sharpen(forward(classifier, x)[0], T)


def va_tr(
    classifier: ClassifierParams,
    mlm: MLMParams,
    x: Sentence,
    I: Sequence[int],
    config: PerturbationConfig,
    rng: Optional[np.random.Generator] = None,
) -> Perturbation:
    """Одновременная замена токенов x в позициях I (Alg. VA_TR).

    classifier и mlm — замороженные снимки, функция их не меняет.
    rng нужен только стратегиям uniform / sampling.
    """
    I = np.sort(np.asarray(I, dtype=np.int64))
    if I.size == 0:
        raise ValueError("va_tr: empty index set")
    if np.unique(I).size != I.size or I.min() < 0 or I.max() >= x.M:
        raise ValueError(f"va_tr: invalid index set {I.tolist()} for sentence of length {x.M}")

    selector = get_selector(config.strategy)

    q = sharpened_target(classifier, x, config.T)
    G = input_gradients(classifier, x, q)
    lp = log_probs_at(mlm, x, I)

    n = I.size
    table = np.empty((n, classifier.vocab_size))
    chosen = np.empty(n, dtype=np.int64)
    ranks = np.empty(n, dtype=np.int64)
    adv = np.empty(n)

    for row, m in enumerate(I):
        x_m = int(x.ids[m])
        table[row] = replacement_scores(G[m], classifier.E, x_m)
        cands = top_k_from_scores(lp[row], config.k, exclude=x_m, position=int(m))
        cand_scores = table[row][cands.token_ids]
        rank = selector.select_rank(cands, cand_scores, rng)
        ranks[row] = rank
        chosen[row] = cands.token_ids[rank]
        adv[row] = cand_scores[rank]

    x_hat = x.replace(I, chosen)
    return Perturbation(
        original=x,
        perturbed=x_hat,
        indexes=I,
        chosen_tokens=chosen,
        chosen_ranks=ranks,
        adversarial_scores=adv,
        gradients=G[I].copy(),
        score_table=table,
        original_log_probs=lp,
        target=q,
        backward_passes=1,
        mlm_forward_passes=1,
        history=[x_hat],
    )


def brute_force_oracle(
    classifier: ClassifierParams,
    x: Sentence,
    m: int,
    candidates: Sequence[int],
    T: float,
) -> np.ndarray:
    """Истинная дивергенция KL(sharpen(p(x), T) || p(x_v)) для каждой одиночной замены x_m → v.

    Полные прямые проходы, без линеаризации — оракул для проверки скора.
    """
    if not 0 <= m < x.M:
        raise ValueError(f"position {m} out of range for sentence of length {x.M}")
    q = sharpened_target(classifier, x, T)
    out = np.empty(len(candidates))
    for i, v in enumerate(candidates):
        x_v = x.replace([m], [int(v)])
        out[i] = kl_divergence(q, forward(classifier, x_v)[0])
    return out


def consistency_divergence(classifier: ClassifierParams, perturbation: Perturbation) -> float:
    """KL(q || p(·|x̂)) для готового возмущения — то, что минимизирует обучение."""
    return kl_divergence(perturbation.target, forward(classifier, perturbation.perturbed)[0])
