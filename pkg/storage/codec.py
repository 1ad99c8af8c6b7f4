"""Сериализация структурированных записей в JSON.

Пытаемся использовать orjson (быстрее). Если его нет — работаем на stdlib json.
numpy-скаляры и массивы приводим к обычным типам здесь, чтобы вызывающий код
мог отдавать в запись то, что у него есть (np.float64, np.int64, ndarray).
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np


def _default(obj: Any) -> Any:
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"Type is not JSON serializable: {type(obj).__name__}")


try:
    import orjson

    def dumps(obj: Any, *, sort_keys: bool = False) -> bytes:
        # Компактный JSON, по строке на запись.
        option = orjson.OPT_SERIALIZE_NUMPY | orjson.OPT_NON_STR_KEYS
        if sort_keys:
            option |= orjson.OPT_SORT_KEYS
        return orjson.dumps(obj, default=_default, option=option)

    def loads(data: bytes | str) -> Any:
        return orjson.loads(data)

except ImportError:  # pragma: no cover
    def dumps(obj: Any, *, sort_keys: bool = False) -> bytes:
        return json.dumps(
            obj, ensure_ascii=False, default=_default, sort_keys=sort_keys, separators=(",", ":")
        ).encode("utf-8")

    def loads(data: bytes | str) -> Any:
        return json.loads(data)
