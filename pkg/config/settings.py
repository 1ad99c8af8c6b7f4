"""
Модуль настроек процесса.
Загружает и валидирует переменные окружения из .env файла.

Здесь только то, что относится к окружению запуска (логирование, прогресс-бар,
параллелизм, каталог вывода). Гиперпараметры эксперимента живут в
config/run_config.py (RunConfig) — их нужно сохранять вместе с результатами,
а переменные окружения в провенанс не попадают.
"""

import logging
import os
from pathlib import Path
from typing import List
from dotenv import load_dotenv


# Загружаем переменные из .env файла (ищем рядом с корнем проекта)
_env_path = Path(__file__).parent.parent / '.env'
load_dotenv(_env_path)


def _get_bool(key: str, default: str = 'false') -> bool:
    """Безопасное чтение булевой переменной окружения."""
    return os.getenv(key, default).strip().lower() == 'true'


def _get_int(key: str, default: str = '0') -> int:
    """Безопасное чтение целочисленной переменной окружения."""
    return int(os.getenv(key, default).strip())


class Settings:
    """
    Класс для хранения и валидации настроек процесса.

    Все значения вычисляются в __init__, чтобы тесты могли создать
    отдельный экземпляр после monkeypatch переменных окружения.
    """

    def __init__(self):
        # --- Logging ---
        self.LOG_LEVEL: str = os.getenv('LOG_LEVEL', 'INFO').strip().upper()

        # --- Performance & progress ---
        self.SHOW_PROGRESS_BAR: bool = _get_bool('SHOW_PROGRESS_BAR', 'false')
        self.SHOW_PERFORMANCE_METRICS: bool = _get_bool('SHOW_PERFORMANCE_METRICS', 'false')

        # Потоки для возмущения предложений одного батча (1: без пула)
        self.MAX_PERTURB_WORKERS: int = _get_int('MAX_PERTURB_WORKERS', '1')

        # --- Output ---
        self.OUTPUT_DIR: str = os.getenv('OUTPUT_DIR', 'output').strip()

    # ------------------------------------------------------------------
    def validate(self) -> None:
        """Валидация настроек процесса. Бросает ValueError при ошибках."""
        errors: List[str] = []

        if logging.getLevelName(self.LOG_LEVEL) == f"Level {self.LOG_LEVEL}":
            errors.append("LOG_LEVEL must be one of DEBUG, INFO, WARNING, ERROR, CRITICAL")

        if self.MAX_PERTURB_WORKERS <= 0:
            errors.append("MAX_PERTURB_WORKERS must be positive")

        if not self.OUTPUT_DIR:
            errors.append("OUTPUT_DIR must be set")

        if errors:
            raise ValueError("Configuration errors:\n" + "\n".join(f"  - {e}" for e in errors))

    # ------------------------------------------------------------------
    def display(self) -> None:
        """Вывод текущих настроек в читаемом виде (в stderr, stdout занят записями)."""
        import sys

        out = sys.stderr
        print("=" * 80, file=out)
        print("PROCESS SETTINGS", file=out)
        print("=" * 80, file=out)
        print(f"  Log level            : {self.LOG_LEVEL}", file=out)
        print(f"  Show progress bar    : {self.SHOW_PROGRESS_BAR}", file=out)
        print(f"  Performance metrics  : {self.SHOW_PERFORMANCE_METRICS}", file=out)
        print(f"  Perturb workers      : {self.MAX_PERTURB_WORKERS}", file=out)
        print(f"  Output directory     : {self.OUTPUT_DIR}", file=out)
        print("=" * 80, file=out)


# Единственный экземпляр настроек для использования во всех модулях
settings = Settings()
