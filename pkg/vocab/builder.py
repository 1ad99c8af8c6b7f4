"""
Построение словаря, токенизация и файл словаря.

Токенизация — по пробельным символам, без нормализации регистра:
модели игрушечные, сабворды не добавляют покрытия алгоритмов.
"""

from __future__ import annotations

from collections import Counter
from pathlib import Path
from typing import Iterable, List

from utils.logger import logger

from .models import PAD_TOKEN, UNK_TOKEN, Sentence, Vocab


def tokenize(text: str) -> List[str]:
    return text.split()


def build_vocab(corpus: Iterable[str], min_freq: int = 1, max_size: int = 2048) -> Vocab:
    """Словарь из корпуса текстов.

    Порядок: по убыванию частоты, при равенстве — лексикографически.
    <pad> и <unk> всегда первые и входят в max_size.
    """
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    if max_size < 2:
        raise ValueError("max_size must be >= 2")

    texts = list(corpus)
    if not texts:
        raise ValueError("empty corpus")

    counts: Counter[str] = Counter()
    for text in texts:
        counts.update(tokenize(text))
    for special in (PAD_TOKEN, UNK_TOKEN):
        counts.pop(special, None)

    kept = [tok for tok, c in counts.items() if c >= min_freq]
    kept.sort(key=lambda tok: (-counts[tok], tok))
    kept = kept[: max_size - 2]

    vocab = Vocab(tokens=(PAD_TOKEN, UNK_TOKEN, *kept))
    logger.debug(
        f"Vocabulary built: {len(vocab)} tokens "
        f"({len(counts)} distinct in corpus, min_freq={min_freq}, max_size={max_size})"
    )
    return vocab


def encode(text: str, vocab: Vocab) -> Sentence:
    """Текст → Sentence; незнакомые слова → <unk>."""
    tokens = tokenize(text)
    if not tokens:
        raise ValueError("empty sentence")
    return Sentence.of([vocab.id_of(tok) for tok in tokens])


def decode(sentence: Sentence, vocab: Vocab) -> str:
    sentence.check_vocab(len(vocab))
    return " ".join(vocab.tokens[int(i)] for i in sentence.ids)


# ---------------------------------------------------------------------------
# Файл словаря: один токен на строку, номер строки = id
# ---------------------------------------------------------------------------

def save_vocab(vocab: Vocab, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for tok in vocab.tokens:
            fh.write(tok + "\n")


def load_vocab(path: str | Path) -> Vocab:
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        tokens = [line.rstrip("\n") for line in fh]
    if tokens and tokens[-1] == "":
        tokens.pop()
    if len(tokens) < 2 or tokens[0] != PAD_TOKEN or tokens[1] != UNK_TOKEN:
        raise ValueError(f"{path}: vocabulary file must start with {PAD_TOKEN} and {UNK_TOKEN} lines")
    return Vocab(tokens=tuple(tokens))
