"""
Арифметика дискретной окрестности: расстояние Хэмминга и бюджет замен.
"""

from __future__ import annotations

import math

import numpy as np

from .models import Sentence


def hamming(a: Sentence, b: Sentence) -> int:
    """Число позиций с разными токенами; предложения одной длины."""
    if a.M != b.M:
        raise ValueError(f"hamming: length mismatch {a.M} vs {b.M}")
    return int(np.count_nonzero(a.ids != b.ids))


def perturbation_budget(M: int, tau: float) -> int:
    """|I| = max(1, floor(τ·M)).

    При floor(τ·M) = 0 (короткие предложения) бюджет всё равно 1 —
    это единственный случай, когда доля замен превышает τ.
    """
    if M < 1:
        raise ValueError(f"sentence length must be >= 1, got {M}")
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    return max(1, math.floor(tau * M))
