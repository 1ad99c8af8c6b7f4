"""
Замеры времени этапов: эпохи MLM, возмущение батча, оценка на dev,
обучение целиком, возмущение корпуса.

    from utils.timer import timer

    with timer.measure("perturb_batch"):
        perts = perturb_batch(...)

    timer.totals()        # {"perturb_batch": (calls, total_ms), ...}
    timer.log_totals()    # сводка по меткам в лог

Каждый замер копится в totals() всегда; в лог отдельные замеры попадают
только при SHOW_PERFORMANCE_METRICS=true.
"""

import time
from contextlib import contextmanager
from typing import Dict, Iterator, Optional, Tuple

from config.settings import settings
from utils.logger import logger


class PerformanceTimer:
    """Таймер с накоплением (число вызовов, сумма мс) по меткам."""

    def __init__(self, show_metrics: bool = False):
        self.show_metrics = show_metrics
        self._started: Dict[str, float] = {}
        self._totals: Dict[str, Tuple[int, float]] = {}

    def start(self, label: str) -> None:
        self._started[label] = time.perf_counter()

    def end(self, label: str) -> Optional[float]:
        """Миллисекунды с момента start(label); None, если замер не начат."""
        started = self._started.pop(label, None)
        if started is None:
            logger.debug(f"Timer '{label}' ended without start")
            return None

        elapsed_ms = (time.perf_counter() - started) * 1000.0
        calls, total = self._totals.get(label, (0, 0.0))
        self._totals[label] = (calls + 1, total + elapsed_ms)
        if self.show_metrics:
            logger.info(f"⏱  [{label}] completed in {elapsed_ms:.4f} ms")
        return elapsed_ms

    @contextmanager
    def measure(self, label: str) -> Iterator[None]:
        self.start(label)
        try:
            yield
        finally:
            self.end(label)

    def totals(self) -> Dict[str, Tuple[int, float]]:
        return dict(self._totals)

    def totals_ms(self) -> Dict[str, float]:
        """Суммарное время по меткам, мс (для итоговых записей команд)."""
        return {label: round(total, 3) for label, (_, total) in self._totals.items()}

    def log_totals(self) -> None:
        if not self.show_metrics or not self._totals:
            return
        for label, (calls, total) in sorted(self._totals.items(), key=lambda kv: -kv[1][1]):
            logger.info(f"⏱  [{label}] {calls} calls, {total:.1f} ms total, {total / calls:.3f} ms/call")

    def reset(self) -> None:
        self._started.clear()
        self._totals.clear()


timer = PerformanceTimer(show_metrics=settings.SHOW_PERFORMANCE_METRICS)
