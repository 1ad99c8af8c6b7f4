"""
Бинарный формат чекпоинтов (общий для классификатора и MLM).

Раскладка файла:
    b"VATD"                       magic, 4 байта
    uint32 LE                     версия формата (= FORMAT_VERSION)
    uint32 LE + UTF-8 JSON        метаданные: kind, размерности, seed,
                                  отпечаток словаря, config_hash и список
                                  массивов [{name, shape}] в порядке записи
    float64 LE, row-major         все массивы подряд в порядке из метаданных

Без сжатия и без pickle; load(save(p)) воспроизводит массивы бит-в-бит.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from storage.codec import dumps, loads

MAGIC = b"VATD"
FORMAT_VERSION = 1

KIND_CLASSIFIER = "classifier"
KIND_MLM = "mlm"

_U32 = struct.Struct("<I")
_DTYPE = np.dtype("<f8")


class CheckpointError(RuntimeError):
    """Файл не является совместимым чекпоинтом (magic, версия, вид, усечение)."""


def write_checkpoint(
    path: str | Path,
    kind: str,
    metadata: Dict[str, Any],
    arrays: Sequence[Tuple[str, np.ndarray]],
) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    meta = dict(metadata)
    meta["kind"] = kind
    meta["arrays"] = [{"name": name, "shape": list(np.shape(arr))} for name, arr in arrays]
    meta_bytes = dumps(meta, sort_keys=True)

    with path.open("wb") as fh:
        fh.write(MAGIC)
        fh.write(_U32.pack(FORMAT_VERSION))
        fh.write(_U32.pack(len(meta_bytes)))
        fh.write(meta_bytes)
        for _, arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype=_DTYPE).tobytes(order="C"))


def _take(buf: memoryview, offset: int, n: int, what: str) -> Tuple[memoryview, int]:
    if offset + n > len(buf):
        raise CheckpointError(f"incompatible checkpoint: truncated while reading {what}")
    return buf[offset:offset + n], offset + n


def read_checkpoint(path: str | Path, expected_kind: str) -> Tuple[Dict[str, Any], Dict[str, np.ndarray]]:
    """Чтение чекпоинта. Возвращает (метаданные, {имя: массив})."""
    path = Path(path)
    buf = memoryview(path.read_bytes())

    raw, off = _take(buf, 0, len(MAGIC), "magic")
    if bytes(raw) != MAGIC:
        raise CheckpointError(f"incompatible checkpoint: bad magic in {path}")

    raw, off = _take(buf, off, _U32.size, "version")
    (version,) = _U32.unpack(raw)
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"incompatible checkpoint: format version {version}, expected {FORMAT_VERSION}"
        )

    raw, off = _take(buf, off, _U32.size, "metadata length")
    (meta_len,) = _U32.unpack(raw)
    raw, off = _take(buf, off, meta_len, "metadata")
    try:
        meta = loads(bytes(raw))
    except Exception as exc:
        raise CheckpointError(f"incompatible checkpoint: unreadable metadata ({exc!r})") from exc

    kind = meta.get("kind")
    if kind != expected_kind:
        raise CheckpointError(f"incompatible checkpoint: kind {kind!r}, expected {expected_kind!r}")

    arrays: Dict[str, np.ndarray] = {}
    specs: List[Dict[str, Any]] = meta.get("arrays", [])
    for spec in specs:
        shape = tuple(int(s) for s in spec["shape"])
        n = int(np.prod(shape, dtype=np.int64)) * _DTYPE.itemsize
        raw, off = _take(buf, off, n, f"array {spec['name']!r}")
        arrays[spec["name"]] = np.frombuffer(raw, dtype=_DTYPE).reshape(shape).astype(np.float64)

    if off != len(buf):
        raise CheckpointError(f"incompatible checkpoint: {len(buf) - off} trailing bytes")

    return meta, arrays
