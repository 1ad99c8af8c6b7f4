"""
Adam для словаря именованных параметров.

Параметры моделей хранятся как dict[str, np.ndarray] (см. models/*),
поэтому и состояние оптимизатора — словари тех же форм. Обновление
in-place: снимки для воркеров возмущения делаются копией ДО шага.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional

import numpy as np


@dataclass
class Adam:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    # Состояние
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    def step(
        self,
        params: Dict[str, np.ndarray],
        grads: Dict[str, np.ndarray],
        lr: Optional[float] = None,
        frozen: Iterable[str] = (),
    ) -> None:
        """Один шаг Adam. Параметры без градиента и имена из frozen не трогаем.

        Неконечный градиент: FloatingPointError с именем параметра, веса не меняются.
        """
        lr = self.lr if lr is None else lr
        frozen = set(frozen)

        for name, g in grads.items():
            if not np.all(np.isfinite(g)):
                bad = int(np.size(g) - np.count_nonzero(np.isfinite(g)))
                raise FloatingPointError(
                    f"non-finite gradient for '{name}' ({bad} entries) at optimizer step {self.t + 1}"
                )

        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t

        for name, g in grads.items():
            if name in frozen:
                continue
            if name not in self.m:
                self.m[name] = np.zeros_like(params[name])
                self.v[name] = np.zeros_like(params[name])

            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)

            if lr != 0.0:
                params[name] -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
