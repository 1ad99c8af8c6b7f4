"""
Модели данных корпуса: пример, параметры синтетического генератора, разбиение.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Tuple


@dataclass(frozen=True)
class Example:
    """Размеченный текст. uid уникален в пределах корпуса."""

    uid: str
    text: str
    label: int


@dataclass(frozen=True)
class SynthSpec:
    """Параметры синтетической задачи тематической классификации.

    Каждая позиция предложения берётся из пула ключевых слов класса с
    вероятностью keyword_rate, иначе из общего пула наполнителей.
    Пулы не пересекаются по построению (разные префиксы токенов).
    """

    num_classes: int = 5
    # Отдельное ключевое слово (0.3/40) вероятнее наполнителя (0.7/200) только
    # в контексте своего класса, в среднем по корпусу наоборот
    keyword_pool_size: int = 40
    filler_pool_size: int = 200
    min_len: int = 8
    max_len: int = 24
    keyword_rate: float = 0.3
    label_noise: float = 0.02
    seed: int = 0

    def errors(self) -> List[str]:
        errors: List[str] = []
        if self.num_classes < 2:
            errors.append("synth.num_classes must be >= 2")
        if self.keyword_pool_size < 1:
            errors.append("synth.keyword_pool_size must be >= 1")
        if self.filler_pool_size < 1:
            errors.append("synth.filler_pool_size must be >= 1")
        if self.min_len < 1:
            errors.append("synth.min_len must be >= 1")
        if self.max_len < self.min_len:
            errors.append("synth.max_len must be >= synth.min_len")
        if not 0.0 <= self.keyword_rate <= 1.0:
            errors.append("synth.keyword_rate must be in [0, 1]")
        if not 0.0 <= self.label_noise < 0.5:
            errors.append("synth.label_noise must be in [0, 0.5)")
        if self.seed < 0:
            errors.append("synth.seed must be non-negative")
        return errors

    def validate(self) -> None:
        errors = self.errors()
        if errors:
            raise ValueError("Configuration errors:\n" + "\n".join(f"  - {e}" for e in errors))

    def keyword_pool(self, c: int) -> Tuple[str, ...]:
        return tuple(f"topic{c}_{j:03d}" for j in range(self.keyword_pool_size))

    def filler_pool(self) -> Tuple[str, ...]:
        return tuple(f"w{j:04d}" for j in range(self.filler_pool_size))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SynthSpec":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown synth spec fields: {', '.join(unknown)}")
        return cls(**data)


@dataclass
class Split:
    labeled: List[Example]
    unlabeled: List[Example]
    dev: List[Example]
    test: List[Example]

    def partitions(self) -> Dict[str, List[Example]]:
        return {"labeled": self.labeled, "unlabeled": self.unlabeled, "dev": self.dev, "test": self.test}

    def sizes(self) -> Dict[str, int]:
        return {name: len(part) for name, part in self.partitions().items()}
