"""
Проверка аналитических градиентов центральными конечными разностями.

Все градиенты моделей (classifier, mlm) написаны руками, поэтому каждый
backward проверяется этим харнессом в тестах. Сравнение покомпонентное,
возвращается худшая относительная ошибка.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

DEFAULT_EPS = 1e-5

# Знаменатель относительной ошибки не опускается ниже этого значения,
# иначе почти нулевые компоненты дают шум вместо сигнала.
REL_FLOOR = 1e-8


def numeric_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    """(f(x + εe_i) − f(x − εe_i)) / 2ε для каждой координаты x (любой формы)."""
    x = np.array(x, dtype=np.float64, copy=True)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    gflat = grad.reshape(-1)

    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + eps
        f_plus = float(f(x))
        flat[i] = orig - eps
        f_minus = float(f(x))
        flat[i] = orig

        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            raise FloatingPointError(f"grad_check: non-finite f at coordinate {i}")
        gflat[i] = (f_plus - f_minus) / (2.0 * eps)

    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    a = np.asarray(analytic, dtype=np.float64)
    b = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), REL_FLOOR)
    return np.abs(a - b) / denom


def grad_check(
    f: Callable[[np.ndarray], float],
    x: np.ndarray,
    analytic_grad: np.ndarray,
    eps: float = DEFAULT_EPS,
) -> float:
    """Максимальная относительная ошибка аналитического градиента.

    Args:
        f: скалярная функция; получает массив той же формы, что x
           (функция не должна хранить ссылку на него — массив мутируется)
        x: точка проверки
        analytic_grad: проверяемый градиент той же формы
        eps: шаг конечных разностей
    """
    x = np.asarray(x, dtype=np.float64)
    analytic = np.asarray(analytic_grad, dtype=np.float64)
    if analytic.shape != x.shape:
        raise ValueError(f"grad_check: gradient shape {analytic.shape} != x shape {x.shape}")

    base = float(f(np.array(x, copy=True)))
    if not np.isfinite(base):
        raise FloatingPointError("grad_check: non-finite f at x")

    numeric = numeric_gradient(f, x, eps)
    if numeric.size == 0:
        return 0.0
    return float(relative_error(analytic, numeric).max())
