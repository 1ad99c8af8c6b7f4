"""
Модели данных возмущения: конфигурация поиска и результат VA_TR / refinement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from vocab import Sentence, Vocab, decode


# ---------------------------------------------------------------------------
# Стратегии выбора кандидата
# ---------------------------------------------------------------------------

STRATEGY_VAT_D = "vat_d"
STRATEGY_UNIFORM = "uniform"
STRATEGY_ARGMAX = "argmax"
STRATEGY_SAMPLING = "sampling"

STRATEGIES = (STRATEGY_VAT_D, STRATEGY_UNIFORM, STRATEGY_ARGMAX, STRATEGY_SAMPLING)


# ---------------------------------------------------------------------------
# Конфигурация
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerturbationConfig:
    """Гиперпараметры поиска замен.

    tau — доля заменяемых позиций, k — размер top-k MLM, T — температура
    заточки цели (одна и та же для поиска и для лосса согласованности),
    S — число шагов refinement (0 — только VA_TR).
    """

    tau: float = 0.25
    k: int = 10
    T: float = 0.5
    strategy: str = STRATEGY_VAT_D
    S: int = 3
    seed: int = 0

    def errors(self) -> List[str]:
        errors: List[str] = []
        if not 0.0 < self.tau <= 1.0:
            errors.append("perturb.tau must be in (0, 1]")
        if self.k < 1:
            errors.append("perturb.k must be >= 1")
        if self.T <= 0:
            errors.append("perturb.T must be positive")
        if self.strategy not in STRATEGIES:
            errors.append(f"perturb.strategy must be one of {', '.join(STRATEGIES)}")
        if self.S < 0:
            errors.append("perturb.S must be >= 0")
        return errors

    def validate(self) -> None:
        errors = self.errors()
        if errors:
            raise ValueError("Configuration errors:\n" + "\n".join(f"  - {e}" for e in errors))


# ---------------------------------------------------------------------------
# Результат
# ---------------------------------------------------------------------------

@dataclass
class Perturbation:
    """Возмущённое предложение и всё, что нужно для анализа и refinement.

    Массивы chosen_* и строки gradients / score_table / original_log_probs
    выровнены с indexes (отсортированы по позиции).
    """

    original: Sentence
    perturbed: Sentence
    indexes: np.ndarray                 # |I|, позиции по возрастанию
    chosen_tokens: np.ndarray           # |I|
    chosen_ranks: np.ndarray            # |I|, ранг в списке кандидатов (0: самый вероятный по MLM)
    adversarial_scores: np.ndarray      # |I|, δ(x_m, x̂_m)ᵀ g_m выбранного токена
    gradients: np.ndarray               # |I| × d, g_{x_m}
    score_table: np.ndarray             # |I| × |V|, δ(x_m, v)ᵀ g_m для всего словаря
    original_log_probs: np.ndarray      # |I| × |V|, ln p_mlm(v | контекст оригинала)
    target: np.ndarray                  # C, заточенное предсказание на оригинале
    backward_passes: int = 0
    mlm_forward_passes: int = 0
    # Предложение после каждого шага: [после VA_TR, после шага 1, …]
    history: List[Sentence] = field(default_factory=list)

    @property
    def size(self) -> int:
        return int(self.indexes.size)

    def row_of(self, position: int) -> int:
        """Номер строки кэшей для позиции предложения."""
        rows = np.flatnonzero(self.indexes == position)
        if rows.size == 0:
            raise KeyError(f"position {position} is not perturbed")
        return int(rows[0])

    def to_record(self, vocab: Vocab, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """Запись для дампа возмущений (без тяжёлых кэшей)."""
        record: Dict[str, Any] = {
            "original_text": decode(self.original, vocab),
            "perturbed_text": decode(self.perturbed, vocab),
            "indexes": [int(i) for i in self.indexes],
            "chosen_ranks": [int(r) for r in self.chosen_ranks],
            "adversarial_scores": [float(s) for s in self.adversarial_scores],
        }
        if extra:
            record.update(extra)
        return record
