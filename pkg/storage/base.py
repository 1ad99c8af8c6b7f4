"""Базовый интерфейс для сохранения результатов.

Команды CLI пишут три вида построчных записей:
- лог метрик обучения (заголовок с конфигом + одна запись на точку оценки)
- дамп возмущений (одна запись на предложение)
- сводку абляции (одна запись на ячейку стратегия/S + агрегаты)

Чтобы команды не знали про формат хранения, запись вынесена в интерфейс
RecordSink.

Как использовать:
    with JsonLinesSink(path) as sink:
        sink.write({"step": 10, ...})

Если понадобится другой формат (БД, parquet) — новый класс RecordSink,
команды не меняются.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Any, Dict


class RecordSink(ABC):
    """Абстракция для построчной записи структурированных записей."""

    @abstractmethod
    def open(self) -> None:
        """Инициализация ресурсов (файл, соединение с БД, и т.д.)."""

    @abstractmethod
    def write(self, record: Dict[str, Any]) -> None:
        """Сохранить одну запись."""

    @abstractmethod
    def close(self) -> None:
        """Финализация и закрытие ресурсов."""

    @property
    @abstractmethod
    def output_path(self) -> str:
        """Путь к результирующему файлу/идентификатору (для логов)."""

    # ------------------------------------------------------------------
    def __enter__(self) -> "RecordSink":
        self.open()
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()
