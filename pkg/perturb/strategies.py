"""perturb.strategies

Стратегии выбора токена среди top-k кандидатов MLM.

Поддерживаются четыре стратегии:
  1. vat_d    — кандидат с максимальным адверсариальным скором δᵀg
  2. uniform  — равномерно случайный кандидат
  3. argmax   — самый вероятный по MLM (первый в списке)
  4. sampling — выборка пропорционально вероятностям MLM,
                перенормированным внутри множества кандидатов

Все стратегии получают одинаковые кандидаты и одинаковые позиции I —
различается только правило выбора. На этом держится парное сравнение
стратегий в абляции.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Dict, Optional

import numpy as np

from models.mlm import CandidateSet

from .models import (
    STRATEGIES,
    STRATEGY_ARGMAX,
    STRATEGY_SAMPLING,
    STRATEGY_UNIFORM,
    STRATEGY_VAT_D,
)


# ---------------------------------------------------------------------------
# Базовый класс
# ---------------------------------------------------------------------------

class CandidateSelector(ABC):
    """Абстрактное правило выбора: возвращает ранг кандидата (индекс в списке)."""

    name: str = ""

    @abstractmethod
    def select_rank(self, candidates: CandidateSet, scores: np.ndarray,
                    rng: Optional[np.random.Generator]) -> int:
        ...

    def select(self, candidates: CandidateSet, scores: np.ndarray,
               rng: Optional[np.random.Generator]) -> int:
        """Выбранный id токена."""
        return int(candidates.token_ids[self.select_rank(candidates, scores, rng)])

    @staticmethod
    def _require_rng(rng: Optional[np.random.Generator], name: str) -> np.random.Generator:
        if rng is None:
            raise ValueError(f"strategy {name!r} needs a random generator")
        return rng


# ---------------------------------------------------------------------------
# Реализации
# ---------------------------------------------------------------------------

class VatDSelector(CandidateSelector):
    """argmax δ(x_m, v)ᵀ g_m; при равенстве — меньший id токена."""

    name = STRATEGY_VAT_D

    def select_rank(self, candidates, scores, rng):
        scores = np.asarray(scores, dtype=np.float64)
        if scores.shape != candidates.token_ids.shape:
            raise ValueError(f"scores shape {scores.shape} != candidates shape {candidates.token_ids.shape}")
        best = np.flatnonzero(scores == scores.max())
        return int(best[np.argmin(candidates.token_ids[best])])


class UniformSelector(CandidateSelector):
    name = STRATEGY_UNIFORM

    def select_rank(self, candidates, scores, rng):
        rng = self._require_rng(rng, self.name)
        return int(rng.integers(len(candidates)))


class ArgmaxSelector(CandidateSelector):
    name = STRATEGY_ARGMAX

    def select_rank(self, candidates, scores, rng):
        return 0


class SamplingSelector(CandidateSelector):
    name = STRATEGY_SAMPLING

    def select_rank(self, candidates, scores, rng):
        rng = self._require_rng(rng, self.name)
        return int(rng.choice(len(candidates), p=candidates.probs()))


# ---------------------------------------------------------------------------
# Фабрика
# ---------------------------------------------------------------------------

_SELECTORS: Dict[str, CandidateSelector] = {
    STRATEGY_VAT_D: VatDSelector(),
    STRATEGY_UNIFORM: UniformSelector(),
    STRATEGY_ARGMAX: ArgmaxSelector(),
    STRATEGY_SAMPLING: SamplingSelector(),
}


def get_selector(strategy: str) -> CandidateSelector:
    """
    Стратегия по имени.

    Args:
        strategy: одно из 'vat_d', 'uniform', 'argmax', 'sampling'
    """
    try:
        return _SELECTORS[strategy]
    except KeyError:
        raise ValueError(f"Unknown candidate strategy: {strategy!r} (expected one of {', '.join(STRATEGIES)})")


def select_candidate(strategy: str, candidates: CandidateSet, scores: np.ndarray,
                     rng: Optional[np.random.Generator] = None) -> int:
    """Выбранный id токена по стратегии."""
    if len(candidates) == 0:
        raise ValueError("empty candidate set")
    return get_selector(strategy).select(candidates, scores, rng)
