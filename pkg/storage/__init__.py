"""Модуль сохранения результатов.

Зачем он нужен:
- Команды CLI пишут построчные записи (метрики, дамп возмущений, сводки).
- Логика записи вынесена в отдельный слой (sink), команды ничего не знают
  про формат хранения.

По умолчанию используется JsonLinesSink — потоковая запись в JSONL.
"""

from .base import RecordSink
from .codec import dumps, loads
from .jsonl import JsonLinesSink, iter_records, read_records

__all__ = [
    "RecordSink",
    "JsonLinesSink",
    "dumps",
    "loads",
    "iter_records",
    "read_records",
]
