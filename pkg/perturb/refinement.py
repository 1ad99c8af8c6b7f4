"""
Итеративное уточнение возмущённого предложения (в духе mask-predict).

Одновременная замена нескольких токенов ломает беглость: соседние замены
выбирались независимо и могут давать дубли или слова не к месту.
Поэтому после VA_TR делаем S шагов:
  1. среди исходно возмущённых позиций I берём n_s с наименьшим
     ln p_mlm(x̂_m | контекст x̂) — самые "неестественные"
  2. для каждой пересобираем кандидатов по СУММЕ log-вероятностей
     MLM в контексте x̂ и в контексте оригинала x (исходный токен исключён)
  3. выбираем по той же стратегии, скоры δᵀg берём из кэша VA_TR

Число позиций на шаге линейно убывает: n_s = max(1, ceil(n0·(S−s+1)/(S+1))).

Backward больше не делается: скоры считаются относительно оригинала, и
градиент в оригинале от шагов refinement не зависит. Каждый шаг стоит
один прямой проход MLM по текущему предложению.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from models.classifier import ClassifierParams
from models.mlm import MLMParams, log_probs_all, top_k_from_scores
from vocab import Sentence

from .models import Perturbation, PerturbationConfig
from .search import select_indexes, va_tr
from .strategies import get_selector


@dataclass(frozen=True)
class RefinementSchedule:
    n0: int
    S: int
    counts: tuple


def refinement_counts(n0: int, S: int) -> RefinementSchedule:
    """Линейно убывающее число уточняемых позиций по шагам 1..S."""
    if n0 < 1:
        raise ValueError(f"n0 must be >= 1, got {n0}")
    if S < 0:
        raise ValueError(f"S must be >= 0, got {S}")
    # ceil(a / b) в целых числах, без ошибок округления float
    counts = tuple(max(1, -(-n0 * (S - s + 1) // (S + 1))) for s in range(1, S + 1))
    return RefinementSchedule(n0=n0, S=S, counts=counts)


def _lowest(token_lp: np.ndarray, I: np.ndarray, n: int) -> np.ndarray:
    n = min(n, I.size)
    # lexsort: главный ключ log-prob, при равенстве меньшая позиция
    order = np.lexsort((I, token_lp[I]))[:n]
    return np.sort(I[order])


def lowest_mlm_positions(mlm: MLMParams, x_hat: Sentence, I: Sequence[int], n: int) -> np.ndarray:
    """n позиций из I с наименьшим ln p_mlm(x̂_m | контекст x̂)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    I = np.asarray(I, dtype=np.int64)
    lp = log_probs_all(mlm, x_hat)
    token_lp = lp[np.arange(x_hat.M), x_hat.ids]
    return _lowest(token_lp, I, n)


def refine(
    mlm: MLMParams,
    perturbation: Perturbation,
    config: PerturbationConfig,
    rng: Optional[np.random.Generator] = None,
) -> Perturbation:
    """S шагов уточнения готового результата VA_TR (результат — новый объект)."""
    schedule = refinement_counts(perturbation.size, config.S)
    if not schedule.counts:
        return perturbation

    selector = get_selector(config.strategy)
    x = perturbation.original
    I = perturbation.indexes

    current = perturbation.perturbed
    chosen = perturbation.chosen_tokens.copy()
    ranks = perturbation.chosen_ranks.copy()
    adv = perturbation.adversarial_scores.copy()
    history: List[Sentence] = list(perturbation.history)
    mlm_passes = perturbation.mlm_forward_passes

    for n_s in schedule.counts:
        lp = log_probs_all(mlm, current)
        mlm_passes += 1
        token_lp = lp[np.arange(current.M), current.ids]
        positions = _lowest(token_lp, I, n_s)

        rows = np.searchsorted(I, positions)
        new_tokens = np.empty(positions.size, dtype=np.int64)
        for j, (m, row) in enumerate(zip(positions, rows)):
            summed = lp[m] + perturbation.original_log_probs[row]
            cands = top_k_from_scores(summed, config.k, exclude=int(x.ids[m]), position=int(m))
            cand_scores = perturbation.score_table[row][cands.token_ids]
            rank = selector.select_rank(cands, cand_scores, rng)
            new_tokens[j] = cands.token_ids[rank]
            ranks[row] = rank
            adv[row] = cand_scores[rank]

        chosen[rows] = new_tokens
        current = current.replace(positions, new_tokens)
        history.append(current)

    return Perturbation(
        original=x,
        perturbed=current,
        indexes=I,
        chosen_tokens=chosen,
        chosen_ranks=ranks,
        adversarial_scores=adv,
        gradients=perturbation.gradients,
        score_table=perturbation.score_table,
        original_log_probs=perturbation.original_log_probs,
        target=perturbation.target,
        backward_passes=perturbation.backward_passes,
        mlm_forward_passes=mlm_passes,
        history=history,
    )


def iterative_refinements(
    classifier: ClassifierParams,
    mlm: MLMParams,
    x: Sentence,
    config: PerturbationConfig,
    index_rng: Optional[np.random.Generator] = None,
    choice_rng: Optional[np.random.Generator] = None,
) -> Perturbation:
    """Выбор I, VA_TR и S шагов уточнения.

    index_rng — поток выбора позиций, choice_rng — поток стратегий
    uniform/sampling. Без явных генераторов оба выводятся из config.seed.
    """
    if index_rng is None or choice_rng is None:
        seq = np.random.SeedSequence(config.seed)
        idx_seq, choice_seq = seq.spawn(2)
        index_rng = index_rng or np.random.default_rng(idx_seq)
        choice_rng = choice_rng or np.random.default_rng(choice_seq)

    I = select_indexes(x.M, config.tau, index_rng)
    initial = va_tr(classifier, mlm, x, I, config, rng=choice_rng)
    return refine(mlm, initial, config, rng=choice_rng)
