"""
Модели данных обучения: конфигурация, состояние и журнал метрик.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

from models.classifier import ClassifierParams
from numerics import Adam
from perturb import PerturbationConfig

TSA_SCHEDULES = ("linear", "log", "exp")


class TrainingDivergedError(RuntimeError):
    """Лосс или градиент стал не конечным."""


@dataclass(frozen=True)
class TrainingConfig:
    lr: float = 5e-3
    total_steps: int = 800
    labeled_batch: int = 8
    unlabeled_batch: int = 24
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    # False: чистый CE-бейзлайн, MLM не нужна
    consistency: bool = True
    # Брать батч согласованности из текстов размеченной выборки (метки не используются)
    consistency_on_labeled: bool = False
    tsa_enabled: bool = True
    tsa_schedule: str = "linear"
    eval_every: int = 50
    # Сколько предложений идёт в пробу mean_kl_adv / mean_kl_uniform_probe
    probe_size: int = 32
    seed: int = 0

    def errors(self) -> List[str]:
        errors: List[str] = []
        if self.lr <= 0:
            errors.append("train.lr must be positive")
        if self.total_steps < 1:
            errors.append("train.total_steps must be >= 1")
        if self.labeled_batch < 1:
            errors.append("train.labeled_batch must be >= 1")
        if self.unlabeled_batch < 1:
            errors.append("train.unlabeled_batch must be >= 1")
        if self.eval_every < 1:
            errors.append("train.eval_every must be >= 1")
        if self.probe_size < 0:
            errors.append("train.probe_size must be >= 0")
        if self.tsa_schedule not in TSA_SCHEDULES:
            errors.append(f"tsa.schedule must be one of {', '.join(TSA_SCHEDULES)}")
        if self.seed < 0:
            errors.append("seed must be non-negative")
        errors.extend(self.perturbation.errors())
        return errors

    def validate(self) -> None:
        errors = self.errors()
        if errors:
            raise ValueError("Configuration errors:\n" + "\n".join(f"  - {e}" for e in errors))


@dataclass
class MetricsRecord:
    """Запись одной точки оценки. Лоссы и доля TSA — средние с прошлой оценки."""

    step: int
    ce_loss: float
    consistency_loss: float
    tsa_threshold: float
    tsa_kept_fraction: float
    dev_accuracy: float
    best_dev_accuracy: float
    mean_kl_adv: Optional[float]
    mean_kl_uniform_probe: Optional[float]
    chosen_rank_histogram: List[int]

    def to_dict(self) -> Dict[str, Any]:
        return {"record": "eval", **asdict(self)}


@dataclass
class MetricsLog:
    header: Dict[str, Any] = field(default_factory=dict)
    records: List[MetricsRecord] = field(default_factory=list)

    def append(self, record: MetricsRecord) -> None:
        if not 0.0 <= record.dev_accuracy <= 1.0:
            raise ValueError(f"dev accuracy {record.dev_accuracy} outside [0, 1]")
        if self.records and record.step <= self.records[-1].step:
            raise ValueError("metrics records must have increasing steps")
        self.records.append(record)

    @property
    def best_dev_accuracy(self) -> float:
        return max((r.dev_accuracy for r in self.records), default=0.0)

    def to_records(self) -> List[Dict[str, Any]]:
        return [r.to_dict() for r in self.records]


@dataclass
class TrainState:
    step: int
    params: ClassifierParams
    optimizer: Adam
    best_params: ClassifierParams
    best_dev_accuracy: float = -1.0
    best_step: int = 0

    # Накопители между точками оценки
    ce_sum: float = 0.0
    consistency_sum: float = 0.0
    kept_sum: float = 0.0
    window_steps: int = 0
    rank_counts: Optional[List[int]] = None

    def reset_window(self, k: int) -> None:
        self.ce_sum = 0.0
        self.consistency_sum = 0.0
        self.kept_sum = 0.0
        self.window_steps = 0
        self.rank_counts = [0] * k
