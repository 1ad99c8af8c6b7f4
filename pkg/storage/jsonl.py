"""Потоковая запись структурированных записей в JSONL-файл.

Почему JSONL, а не один JSON-массив:
- метрики пишутся по ходу обучения, файл читаем даже после падения прогона
- записи легко грепать, сравнивать diff'ом и перегонять в pandas/БД

Формат: одна запись — одна строка компактного JSON (см. storage/codec.py).
Каждой записи можно добавить общие поля (config_hash) через `extra`,
чтобы провенанс был у каждой строки, а не только у заголовка.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

from utils.logger import logger

from .base import RecordSink
from .codec import dumps, loads


class JsonLinesSink(RecordSink):
    """Пишет записи в один JSONL-файл, flush после каждой записи."""

    def __init__(self, path: str | Path, *, extra: Optional[Dict[str, Any]] = None):
        self._filepath = Path(path)
        self._extra = dict(extra or {})
        self._fh = None  # type: ignore[assignment]
        self.total_records = 0

    # ------------------------------------------------------------------
    @property
    def output_path(self) -> str:
        return str(self._filepath)

    # ------------------------------------------------------------------
    def open(self) -> None:
        self._filepath.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self._filepath.open("wb")
        logger.info(f"Streaming records -> {self._filepath}")

    # ------------------------------------------------------------------
    def write(self, record: Dict[str, Any]) -> None:
        if self._fh is None:
            raise RuntimeError("JsonLinesSink is not opened")

        data = {**record, **self._extra} if self._extra else record
        self._fh.write(dumps(data) + b"\n")
        self._fh.flush()
        self.total_records += 1

    # ------------------------------------------------------------------
    def close(self) -> None:
        if self._fh is None:
            return
        self._fh.close()
        self._fh = None
        logger.info(f"Output file closed: {self._filepath} ({self.total_records} records)")


def iter_records(path: str | Path) -> Iterator[Dict[str, Any]]:
    """Чтение JSONL построчно, пустые строки пропускаем."""
    with Path(path).open("rb") as fh:
        for raw_line in fh:
            line = raw_line.strip()
            if line:
                yield loads(line)


def read_records(path: str | Path) -> List[Dict[str, Any]]:
    return list(iter_records(path))
