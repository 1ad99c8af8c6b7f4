"""
Анализ возмущений: распределение рангов выбранных кандидатов и парные
сравнения стратегий.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy.stats import binomtest

from .models import Perturbation


def rank_histogram(perturbations: Sequence[Perturbation], k: int) -> List[int]:
    """Сколько раз выбран кандидат каждого ранга 0..k−1 (по всем позициям всех возмущений)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    counts = np.zeros(k, dtype=np.int64)
    for p in perturbations:
        if p.chosen_ranks.size and p.chosen_ranks.max() >= k:
            raise ValueError(f"chosen rank {int(p.chosen_ranks.max())} exceeds top-k size {k}")
        counts += np.bincount(p.chosen_ranks, minlength=k)
    return [int(c) for c in counts]


def sign_test(wins: int, n: int) -> float:
    """p-value одностороннего биномиального теста H1: P(выигрыш) > 1/2."""
    if n < 1:
        raise ValueError("sign test needs at least one non-tied pair")
    if not 0 <= wins <= n:
        raise ValueError(f"wins={wins} must be in [0, {n}]")
    return float(binomtest(wins, n, p=0.5, alternative="greater").pvalue)


@dataclass(frozen=True)
class PairedComparison:
    mean_a: float
    mean_b: float
    wins: int
    losses: int
    ties: int
    p_value: float


def paired_comparison(a: Sequence[float], b: Sequence[float]) -> PairedComparison:
    """Парный знаковый тест "a больше b" (ничьи отбрасываются)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise ValueError("paired comparison needs two non-empty samples of equal length")
    wins = int(np.sum(a > b))
    losses = int(np.sum(a < b))
    ties = int(a.size - wins - losses)
    p = sign_test(wins, wins + losses) if wins + losses else 1.0
    return PairedComparison(float(a.mean()), float(b.mean()), wins, losses, ties, p)
