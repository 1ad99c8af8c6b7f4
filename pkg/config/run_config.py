"""
Конфигурация эксперимента (RunConfig).

Формат файла — плоский key=value с точечными секциями, тот же синтаксис,
что у .env (комментарии через #), поэтому читаем его python-dotenv:

    seed=3
    perturb.tau=0.25
    perturb.strategy=vat_d
    train.total_steps=800

Приоритет: флаг командной строки > файл > значение по умолчанию.
Разрешённый конфиг пишется заголовком в журнал метрик, а его хэш —
в каждый артефакт (чекпоинты, дамп возмущений, сводка абляции).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

from dotenv import dotenv_values

from data.models import SynthSpec
from perturb.models import PerturbationConfig
from storage import dumps
from training.models import TrainingConfig

CE_ONLY = "ce-only"


def _parse_bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value in ("true", "1", "yes"):
        return True
    if value in ("false", "0", "no"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


_PARSERS: Dict[type, Callable[[str], Any]] = {
    int: lambda raw: int(raw.strip()),
    float: lambda raw: float(raw.strip()),
    bool: _parse_bool,
    str: lambda raw: raw.strip(),
}

_synth = SynthSpec()
_perturb = PerturbationConfig()
_train = TrainingConfig()

# Ключ → (тип, значение по умолчанию)
FIELDS: Dict[str, Tuple[type, Any]] = {
    "seed": (int, 0),

    "synth.num_classes": (int, _synth.num_classes),
    "synth.keyword_pool_size": (int, _synth.keyword_pool_size),
    "synth.filler_pool_size": (int, _synth.filler_pool_size),
    "synth.min_len": (int, _synth.min_len),
    "synth.max_len": (int, _synth.max_len),
    "synth.keyword_rate": (float, _synth.keyword_rate),
    "synth.label_noise": (float, _synth.label_noise),
    "synth.n_total": (int, 3000),

    "split.labeled_per_class": (int, 10),
    "split.unlabeled": (int, 1000),
    "split.dev": (int, 200),

    "vocab.min_freq": (int, 1),
    "vocab.max_size": (int, 2048),

    "mlm.epochs": (int, 20),
    "mlm.lr": (float, 1e-2),
    "mlm.window": (int, 3),
    "mlm.dim": (int, 32),
    "mlm.hidden": (int, 64),
    "mlm.batch_size": (int, 128),

    "model.d": (int, 32),
    "model.d_a": (int, 16),
    "model.h": (int, 64),

    "perturb.tau": (float, _perturb.tau),
    "perturb.k": (int, _perturb.k),
    "perturb.T": (float, _perturb.T),
    "perturb.strategy": (str, _perturb.strategy),
    "perturb.S": (int, _perturb.S),

    "train.lr": (float, _train.lr),
    "train.total_steps": (int, _train.total_steps),
    "train.labeled_batch": (int, _train.labeled_batch),
    "train.unlabeled_batch": (int, _train.unlabeled_batch),
    "train.eval_every": (int, _train.eval_every),
    "train.probe_size": (int, _train.probe_size),
    "train.consistency": (bool, _train.consistency),
    "train.consistency_on_labeled": (bool, _train.consistency_on_labeled),

    "tsa.enabled": (bool, _train.tsa_enabled),
    "tsa.schedule": (str, _train.tsa_schedule),

    "paths.data": (str, ""),
    "paths.mlm": (str, ""),
    "paths.checkpoint": (str, ""),
    "paths.metrics": (str, ""),
    "paths.out": (str, ""),
}


@dataclass
class RunConfig:
    """Полностью разрешённый конфиг: плоский словарь по точечным ключам."""

    values: Dict[str, Any] = field(default_factory=lambda: {k: d for k, (_, d) in FIELDS.items()})
    # Ошибки разбора копятся и выдаются вместе с ошибками валидации
    parse_errors: List[str] = field(default_factory=list)

    # ------------------------------------------------------------------
    @classmethod
    def load(cls, path: Optional[str | Path] = None,
             overrides: Optional[Dict[str, Any]] = None) -> "RunConfig":
        """Значения по умолчанию ← файл ← overrides, затем validate()."""
        config = cls()
        if path is not None:
            path = Path(path)
            if not path.is_file():
                raise ValueError(f"config file not found: {path}")
            for key, raw in dotenv_values(path).items():
                config.set(key, raw if raw is not None else "")
        for key, value in (overrides or {}).items():
            if value is not None:
                config.set(key, value)
        config.validate()
        return config

    def set(self, key: str, value: Any) -> None:
        if key not in FIELDS:
            self.parse_errors.append(f"{key}: unknown configuration key")
            return
        kind, _ = FIELDS[key]
        if isinstance(value, str):
            try:
                value = _PARSERS[kind](value)
            except ValueError:
                self.parse_errors.append(f"{key}: expected {kind.__name__}, got {value!r}")
                return
        elif kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        elif not isinstance(value, kind):
            self.parse_errors.append(f"{key}: expected {kind.__name__}, got {value!r}")
            return
        self.values[key] = value

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    # ------------------------------------------------------------------
    def with_strategy(self, strategy: str) -> "RunConfig":
        """Копия конфига с другой стратегией; 'ce-only' выключает согласованность."""
        copy = RunConfig(values=dict(self.values))
        if strategy == CE_ONLY:
            copy.values["train.consistency"] = False
        else:
            copy.values["train.consistency"] = True
            copy.values["perturb.strategy"] = strategy
        return copy

    def section(self, name: str) -> Dict[str, Any]:
        prefix = name + "."
        return {k[len(prefix):]: v for k, v in self.values.items() if k.startswith(prefix)}

    def synth_spec(self) -> SynthSpec:
        s = self.section("synth")
        s.pop("n_total")
        return SynthSpec(**s, seed=self["seed"])

    def perturbation(self) -> PerturbationConfig:
        return PerturbationConfig(**self.section("perturb"), seed=self["seed"])

    def training(self) -> TrainingConfig:
        t = self.section("train")
        return TrainingConfig(
            **t,
            perturbation=self.perturbation(),
            tsa_enabled=self["tsa.enabled"],
            tsa_schedule=self["tsa.schedule"],
            seed=self["seed"],
        )

    @property
    def strategy_label(self) -> str:
        return self["perturb.strategy"] if self["train.consistency"] else CE_ONLY

    # ------------------------------------------------------------------
    def errors(self) -> List[str]:
        errors = list(self.parse_errors)
        if errors:
            return errors
        if self["seed"] < 0:
            return ["seed must be non-negative"]
        errors.extend(self.synth_spec().errors())
        errors.extend(self.training().errors())
        if self["synth.n_total"] < self["synth.num_classes"]:
            errors.append("synth.n_total must be >= synth.num_classes")
        for key in ("split.labeled_per_class", "split.dev", "vocab.min_freq", "vocab.max_size",
                    "mlm.epochs", "mlm.window", "mlm.dim", "mlm.hidden", "mlm.batch_size",
                    "model.d", "model.d_a", "model.h"):
            if self[key] < 1:
                errors.append(f"{key} must be >= 1")
        if self["split.unlabeled"] < 0:
            errors.append("split.unlabeled must be >= 0")
        if self["mlm.lr"] <= 0:
            errors.append("mlm.lr must be positive")
        return errors

    def validate(self) -> None:
        errors = self.errors()
        if errors:
            raise ValueError("Configuration errors:\n" + "\n".join(f"  - {e}" for e in errors))

    def to_dict(self) -> Dict[str, Any]:
        return {k: self.values[k] for k in sorted(self.values)}

    def config_hash(self) -> str:
        """sha256 канонического JSON без paths.* (первые 16 hex)."""
        experiment = {k: v for k, v in self.to_dict().items() if not k.startswith("paths.")}
        return hashlib.sha256(dumps(experiment, sort_keys=True)).hexdigest()[:16]
