"""
Модуль для логирования событий приложения.

Использует стандартный logging для совместимости с tqdm (пишем в stderr,
чтобы не ломать прогресс-бар и структурированные записи в stdout).
"""

import logging
import os
import sys


def _setup_logger(name: str = "vatd") -> logging.Logger:
    """
    Настройка и возврат логгера.

    Все сообщения пишутся в stderr: stdout у CLI занят JSON-записями
    (cmd_eval, сводная таблица абляции), их читают скрипты.
    """
    log = logging.getLogger(name)

    if log.handlers:
        # Логгер уже настроен (защита от повторного вызова при переимпорте)
        return log

    # Уровень читаем напрямую из env, а не из settings:
    # settings сам может захотеть что-то залогировать при импорте.
    level = os.getenv("LOG_LEVEL", "INFO").strip().upper()
    log.setLevel(level if isinstance(logging.getLevelName(level), int) else logging.INFO)

    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(logging.DEBUG)

    formatter = logging.Formatter(
        fmt="[%(asctime)s] [%(levelname)s] %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
    handler.setFormatter(formatter)
    log.addHandler(handler)

    return log


# Глобальный экземпляр логгера
logger = _setup_logger()
