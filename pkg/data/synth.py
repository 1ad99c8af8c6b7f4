"""
Генератор синтетического корпуса, разбиение на выборки и keyword-оракул.

Корпус заменяет настоящие тематические датасеты: структура задачи известна
(ключевые слова класса + общий шум), сложность регулируется keyword_rate и
label_noise, а потолок точности измеряется оракулом.
"""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from storage import dumps, loads
from utils.logger import logger

from .models import Example, SynthSpec, Split


def _draw_example(spec: SynthSpec, i: int, seq: np.random.SeedSequence,
                  keywords: Sequence[Sequence[str]], filler: Sequence[str]) -> Example:
    rng = np.random.default_rng(seq)
    c = int(rng.integers(spec.num_classes))
    length = int(rng.integers(spec.min_len, spec.max_len + 1))
    from_keywords = rng.random(length) < spec.keyword_rate
    kw_idx = rng.integers(spec.keyword_pool_size, size=length)
    fill_idx = rng.integers(spec.filler_pool_size, size=length)
    tokens = [keywords[c][k] if is_kw else filler[f] for is_kw, k, f in zip(from_keywords, kw_idx, fill_idx)]

    label = c
    if spec.label_noise > 0 and rng.random() < spec.label_noise:
        # случайный ДРУГОЙ класс
        label = int((c + 1 + rng.integers(spec.num_classes - 1)) % spec.num_classes)
    return Example(uid=f"ex{i:06d}", text=" ".join(tokens), label=label)


def generate(spec: SynthSpec, n_total: int) -> List[Example]:
    """n_total примеров; у каждого свой seed, выведенный из spec.seed."""
    spec.validate()
    if n_total < spec.num_classes:
        raise ValueError(f"n_total={n_total} must be >= number of classes {spec.num_classes}")

    keywords = [spec.keyword_pool(c) for c in range(spec.num_classes)]
    filler = spec.filler_pool()
    seqs = np.random.SeedSequence(spec.seed).spawn(n_total)
    corpus = [_draw_example(spec, i, seq, keywords, filler) for i, seq in enumerate(seqs)]
    logger.debug(f"Generated {n_total} synthetic examples ({spec.num_classes} classes)")
    return corpus


def split(corpus: Sequence[Example], n_labeled_per_class: int, n_unlabeled: int,
          n_dev: int, seed: int) -> Split:
    """Непересекающиеся labeled (ровно n на класс) / unlabeled / dev, остаток в test."""
    if n_labeled_per_class < 1:
        raise ValueError("n_labeled_per_class must be >= 1")
    if n_unlabeled < 0 or n_dev < 1:
        raise ValueError("n_unlabeled must be >= 0 and n_dev >= 1")

    rng = np.random.default_rng(seed)
    order = [corpus[i] for i in rng.permutation(len(corpus))]

    by_class: Dict[int, List[Example]] = defaultdict(list)
    for ex in order:
        by_class[ex.label].append(ex)
    classes = sorted(by_class)

    labeled: List[Example] = []
    for c in classes:
        if len(by_class[c]) < n_labeled_per_class:
            raise ValueError(
                f"insufficient data: class {c} has {len(by_class[c])} examples, "
                f"{n_labeled_per_class} labeled requested"
            )
        labeled.extend(by_class[c][:n_labeled_per_class])

    taken = {ex.uid for ex in labeled}
    rest = [ex for ex in order if ex.uid not in taken]
    if len(rest) < n_unlabeled + n_dev:
        raise ValueError(
            f"insufficient data: {len(rest)} examples left after labeled, "
            f"{n_unlabeled} unlabeled + {n_dev} dev requested"
        )
    return Split(
        labeled=labeled,
        unlabeled=rest[:n_unlabeled],
        dev=rest[n_unlabeled:n_unlabeled + n_dev],
        test=rest[n_unlabeled + n_dev:],
    )


class KeywordOracle:
    """Предсказывает класс с наибольшим числом ключевых слов; при равенстве — меньший id."""

    def __init__(self, spec: SynthSpec):
        self.spec = spec
        self._class_of: Dict[str, int] = {
            token: c for c in range(spec.num_classes) for token in spec.keyword_pool(c)
        }

    def predict(self, text: str) -> int:
        counts = np.zeros(self.spec.num_classes, dtype=np.int64)
        for token in text.split():
            c = self._class_of.get(token)
            if c is not None:
                counts[c] += 1
        return int(np.argmax(counts))

    def accuracy(self, corpus: Sequence[Example]) -> float:
        if not corpus:
            raise ValueError("cannot evaluate on an empty dataset")
        return sum(self.predict(ex.text) == ex.label for ex in corpus) / len(corpus)


# Поля происхождения рядом с параметрами генератора; load_spec их отбрасывает
PROVENANCE_FIELDS = ("config_hash",)


def save_spec(spec: SynthSpec, path: str | Path, config_hash: Optional[str] = None) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = spec.to_dict()
    if config_hash is not None:
        data["config_hash"] = config_hash
    path.write_bytes(dumps(data, sort_keys=True) + b"\n")


def load_spec(path: str | Path) -> SynthSpec:
    data = loads(Path(path).read_bytes())
    for name in PROVENANCE_FIELDS:
        data.pop(name, None)
    spec = SynthSpec.from_dict(data)
    spec.validate()
    return spec
