"""Поиск виртуально-адверсариальных замен токенов и их уточнение."""

from .models import (
    STRATEGIES,
    STRATEGY_ARGMAX,
    STRATEGY_SAMPLING,
    STRATEGY_UNIFORM,
    STRATEGY_VAT_D,
    Perturbation,
    PerturbationConfig,
)
from .strategies import CandidateSelector, get_selector, select_candidate
from .search import (
    brute_force_oracle,
    consistency_divergence,
    replacement_scores,
    select_indexes,
    sharpened_target,
    va_tr,
)
from .refinement import (
    RefinementSchedule,
    iterative_refinements,
    lowest_mlm_positions,
    refine,
    refinement_counts,
)
from .batch import perturb_batch
from .analysis import PairedComparison, paired_comparison, rank_histogram, sign_test

__all__ = [
    "STRATEGIES",
    "STRATEGY_ARGMAX",
    "STRATEGY_SAMPLING",
    "STRATEGY_UNIFORM",
    "STRATEGY_VAT_D",
    "Perturbation",
    "PerturbationConfig",
    "CandidateSelector",
    "get_selector",
    "select_candidate",
    "brute_force_oracle",
    "consistency_divergence",
    "replacement_scores",
    "select_indexes",
    "sharpened_target",
    "va_tr",
    "RefinementSchedule",
    "iterative_refinements",
    "lowest_mlm_positions",
    "refine",
    "refinement_counts",
    "perturb_batch",
    "PairedComparison",
    "paired_comparison",
    "rank_histogram",
    "sign_test",
]
