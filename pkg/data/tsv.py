"""
Чтение и запись размеченного корпуса в TSV: одна строка = "label<TAB>text".

Метки: если в файле все метки — целые литералы, они и есть id классов;
иначе строки отображаются в плотные id в порядке первого появления.
Общий label_map позволяет согласовать отображение между файлами выборок.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .models import Example


def _parse_lines(path: Path) -> List[Tuple[int, str, str]]:
    rows: List[Tuple[int, str, str]] = []
    with path.open("r", encoding="utf-8", newline="") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            label, sep, text = line.partition("\t")
            if not sep:
                raise ValueError(f"{path}:{lineno}: malformed line, expected 'label<TAB>text'")
            if not label or not text.strip():
                raise ValueError(f"{path}:{lineno}: malformed line, empty label or text")
            rows.append((lineno, label, text))
    return rows


def _is_int_literal(label: str) -> bool:
    return label.isascii() and label.isdigit()


def load_tsv(path: str | Path, label_map: Optional[Dict[str, int]] = None) -> List[Example]:
    """Корпус из TSV.

    label_map (если передан) дополняется новыми строковыми метками на месте.
    """
    path = Path(path)
    rows = _parse_lines(path)
    integer_labels = not label_map and all(_is_int_literal(label) for _, label, _ in rows)

    corpus: List[Example] = []
    mapping = label_map if label_map is not None else {}
    for lineno, label, text in rows:
        if integer_labels:
            class_id = int(label)
        else:
            if label not in mapping:
                mapping[label] = len(mapping)
            class_id = mapping[label]
        corpus.append(Example(uid=f"{path.stem}:{lineno}", text=text, label=class_id))
    return corpus


def save_tsv(corpus: Sequence[Example], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        for ex in corpus:
            if "\t" in ex.text or "\n" in ex.text or "\r" in ex.text:
                raise ValueError(f"example {ex.uid}: text contains tab or newline")
            fh.write(f"{ex.label}\t{ex.text}\n")
