"""Утилиты приложения."""
from .logger import logger
from .timer import timer, PerformanceTimer
from .seeding import SeedStreams, spawn

__all__ = ['logger', 'timer', 'PerformanceTimer', 'SeedStreams', 'spawn']
