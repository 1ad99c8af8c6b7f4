"""
Модели данных словаря и предложения.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np


# Служебные токены всегда занимают первые два id
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
PAD_ID = 0
UNK_ID = 1


# ---------------------------------------------------------------------------
# Словарь
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Vocab:
    """Упорядоченный список уникальных токенов; id = позиция в списке.

    Неизменяемый после построения: один и тот же объект разделяют
    классификатор, MLM и воркеры возмущения.
    """

    tokens: Tuple[str, ...]
    index: Dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.tokens) < 2 or self.tokens[PAD_ID] != PAD_TOKEN or self.tokens[UNK_ID] != UNK_TOKEN:
            raise ValueError(f"vocab must start with {PAD_TOKEN!r}, {UNK_TOKEN!r}")
        index = {tok: i for i, tok in enumerate(self.tokens)}
        if len(index) != len(self.tokens):
            raise ValueError("vocab tokens must be unique")
        object.__setattr__(self, "index", index)

    @property
    def pad_id(self) -> int:
        return PAD_ID

    @property
    def unk_id(self) -> int:
        return UNK_ID

    def __len__(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self.index.get(token, UNK_ID)

    def fingerprint(self) -> str:
        """Короткий sha1 списка токенов — для проверки совместимости чекпоинтов."""
        h = hashlib.sha1("\n".join(self.tokens).encode("utf-8"))
        return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# Предложение
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sentence:
    """Последовательность id токенов длины M ≥ 1.

    ids хранится как read-only np.ndarray int64: предложения используются
    как ключи кэшей и разделяются между потоками.
    """

    ids: np.ndarray

    def __post_init__(self):
        arr = np.array(self.ids, dtype=np.int64, copy=True).reshape(-1)
        if arr.size == 0:
            raise ValueError("empty sentence")
        if np.any(arr < 0):
            raise ValueError("token ids must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "ids", arr)

    @classmethod
    def of(cls, ids: Sequence[int]) -> "Sentence":
        return cls(np.asarray(ids, dtype=np.int64))

    @property
    def M(self) -> int:
        return int(self.ids.size)

    def __len__(self) -> int:
        return self.M

    def __eq__(self, other) -> bool:
        if not isinstance(other, Sentence):
            return NotImplemented
        return self.ids.shape == other.ids.shape and bool(np.array_equal(self.ids, other.ids))

    def __hash__(self) -> int:
        return hash(self.ids.tobytes())

    def replace(self, positions: Sequence[int], tokens: Sequence[int]) -> "Sentence":
        """Новое предложение с заменой токенов на указанных позициях (одновременно)."""
        arr = self.ids.copy()
        arr[np.asarray(positions, dtype=np.int64)] = np.asarray(tokens, dtype=np.int64)
        return Sentence(arr)

    def check_vocab(self, vocab_size: int) -> None:
        if int(self.ids.max()) >= vocab_size:
            raise ValueError(f"token id {int(self.ids.max())} out of range for vocabulary of size {vocab_size}")

    def to_list(self) -> List[int]:
        return [int(i) for i in self.ids]
