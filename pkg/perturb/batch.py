"""
Возмущение батча предложений против одного замороженного снимка.

Генераторы для каждого предложения выводятся ДО раздачи воркерам, поэтому
результат не зависит от числа потоков и порядка их завершения.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from config.settings import settings
from models.classifier import ClassifierParams
from models.mlm import MLMParams
from utils.logger import logger
from utils.seeding import spawn
from vocab import Sentence

from .models import Perturbation, PerturbationConfig
from .refinement import iterative_refinements


def perturb_batch(
    classifier: ClassifierParams,
    mlm: MLMParams,
    sentences: Sequence[Sentence],
    config: PerturbationConfig,
    index_rng: np.random.Generator,
    choice_rng: np.random.Generator,
    workers: Optional[int] = None,
) -> List[Perturbation]:
    """iterative_refinements для каждого предложения, в порядке входа.

    Все задачи завершаются до возврата: вызывающий код может сразу
    менять параметры классификатора.
    """
    if not sentences:
        return []
    workers = settings.MAX_PERTURB_WORKERS if workers is None else workers
    index_rngs = spawn(index_rng, len(sentences))
    choice_rngs = spawn(choice_rng, len(sentences))

    def run(i: int) -> Perturbation:
        return iterative_refinements(classifier, mlm, sentences[i], config,
                                     index_rng=index_rngs[i], choice_rng=choice_rngs[i])

    if workers <= 1 or len(sentences) == 1:
        return [run(i) for i in range(len(sentences))]

    logger.debug(f"Perturbing {len(sentences)} sentences with {workers} workers")
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(run, range(len(sentences))))
