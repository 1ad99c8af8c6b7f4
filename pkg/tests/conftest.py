"""Общие фикстуры: маленькие модели и случайные предложения.

Размеры подобраны так, чтобы статистические тесты на сотнях прогонов
укладывались в секунды.
"""

from __future__ import annotations

from typing import List

import numpy as np
import pytest

from data import SynthSpec, generate
from models import ClassifierParams, MLMParams, init_classifier, init_mlm, train_mlm
from vocab import PAD_ID, Sentence, Vocab, build_vocab, encode

SMALL_VOCAB = 40
SMALL_CLASSES = 3


def random_sentence(rng: np.random.Generator, vocab_size: int, length: int) -> Sentence:
    """Предложение без <pad> (id от 2: pad и unk пропускаем)."""
    return Sentence.of(rng.integers(2, vocab_size, size=length).tolist())


def random_classifier(vocab_size: int = SMALL_VOCAB, C: int = SMALL_CLASSES, seed: int = 0,
                      d: int = 6, d_a: int = 4, h: int = 8) -> ClassifierParams:
    """Классификатор со случайными смещениями: при нулевых смещениях
    p(·|x) на маленьких эмбеддингах почти равномерно и градиенты вырождаются."""
    params = init_classifier(vocab_size, d=d, d_a=d_a, h=h, C=C, seed=seed)
    rng = np.random.default_rng(seed + 10_000)
    params.b_a[:] = rng.normal(size=params.d_a)
    params.b_1[:] = rng.normal(size=params.h)
    params.b_2[:] = rng.normal(size=params.C)
    params.E[PAD_ID] = 0.0
    return params


def random_mlm(vocab_size: int = SMALL_VOCAB, seed: int = 0, w: int = 2) -> MLMParams:
    mlm = init_mlm(vocab_size, w=w, d_m=6, h_m=8, seed=seed)
    rng = np.random.default_rng(seed + 20_000)
    mlm.b_o[:] = rng.normal(size=vocab_size)
    return mlm.freeze()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def classifier() -> ClassifierParams:
    return random_classifier()


@pytest.fixture
def mlm() -> MLMParams:
    return random_mlm()


@pytest.fixture
def sentences(rng) -> List[Sentence]:
    return [random_sentence(rng, SMALL_VOCAB, int(rng.integers(4, 14))) for _ in range(12)]


# ---------------------------------------------------------------------------
# Маленькая синтетическая задача (для обучения и CLI)
# ---------------------------------------------------------------------------

TINY_SPEC = SynthSpec(num_classes=3, keyword_pool_size=6, filler_pool_size=20,
                      min_len=5, max_len=9, keyword_rate=0.4, label_noise=0.0, seed=7)


@pytest.fixture(scope="session")
def tiny_corpus():
    return generate(TINY_SPEC, 240)


@pytest.fixture(scope="session")
def tiny_vocab(tiny_corpus) -> Vocab:
    return build_vocab(ex.text for ex in tiny_corpus)


@pytest.fixture(scope="session")
def tiny_task(tiny_corpus, tiny_vocab):
    """(labeled, unlabeled, dev) в закодированном виде."""
    encoded = [(encode(ex.text, tiny_vocab), ex.label) for ex in tiny_corpus]
    return encoded[:30], [s for s, _ in encoded[30:150]], encoded[150:]


@pytest.fixture(scope="session")
def tiny_mlm(tiny_corpus, tiny_vocab) -> MLMParams:
    corpus = [encode(ex.text, tiny_vocab) for ex in tiny_corpus]
    return train_mlm(corpus, len(tiny_vocab), epochs=3, lr=1e-2, seed=3, w=2, d_m=8, h_m=16, batch_size=64)
