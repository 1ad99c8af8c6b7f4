"""
Именованные потоки случайности от одного корневого seed.

Зачем:
- Сравнение стратегий выбора кандидатов (vat_d / uniform / ...) должно быть
  парным: одинаковый порядок данных, одинаковая инициализация, одинаковые
  позиции I. Если бы все компоненты тянули числа из одного генератора,
  стратегия sampling (которая тратит случайные числа) сдвигала бы порядок
  батчей относительно vat_d (которая их не тратит).
- Поэтому каждый компонент получает свой генератор:
  SeedSequence([root_seed, crc32(name)]). Имя стабильно между запусками
  и версиями Python (в отличие от hash()).
"""

from __future__ import annotations

import zlib

import numpy as np


# Имена потоков проекта (rng() принимает и любые другие)
STREAM_DATA = "data"
STREAM_SPLIT = "split"
STREAM_INIT = "init"
STREAM_MLM = "mlm"
STREAM_LABELED_ORDER = "labeled-order"
STREAM_UNLABELED_ORDER = "unlabeled-order"
STREAM_INDEX_SELECTION = "index-selection"
STREAM_SAMPLING = "sampling-strategy"
STREAM_PROBE = "probe"


def stream_key(name: str) -> int:
    """Стабильный 32-битный ключ имени потока."""
    return zlib.crc32(name.encode("utf-8")) & 0xFFFFFFFF


class SeedStreams:
    """Фабрика независимых генераторов numpy по именам."""

    def __init__(self, root_seed: int):
        if root_seed < 0:
            raise ValueError("seed must be non-negative")
        self.root_seed = int(root_seed)

    def sequence(self, name: str) -> np.random.SeedSequence:
        return np.random.SeedSequence([self.root_seed, stream_key(name)])

    def rng(self, name: str) -> np.random.Generator:
        """Новый генератор потока `name`.

        Повторный вызов с тем же именем вернёт генератор с тем же состоянием —
        это удобно для воспроизведения, но компонент должен держать свой
        генератор сам, а не запрашивать его на каждый шаг.
        """
        return np.random.default_rng(self.sequence(name))

    def child_seed(self, name: str) -> int:
        """Целочисленный seed для API, которые принимают int (init моделей)."""
        return int(self.sequence(name).generate_state(1, dtype=np.uint32)[0])


def spawn(rng: np.random.Generator, n: int) -> list[np.random.Generator]:
    """n независимых генераторов из текущего состояния rng.

    Нужен для раздачи работы по потокам: генераторы порождаются ДО
    диспетчеризации, поэтому результат не зависит от числа воркеров.
    """
    seeds = rng.integers(0, 2**63 - 1, size=n, dtype=np.int64)
    return [np.random.default_rng(int(s)) for s in seeds]
