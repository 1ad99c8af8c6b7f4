"""
Примитивы над векторами вероятностей, общие для всех модулей.

Distribution в коде — это обычный одномерный np.ndarray float64, который
удовлетворяет инварианту: все элементы ≥ 0, сумма = 1 с точностью 1e-9.
Отдельный класс-обёртка не заводим: распределения постоянно участвуют
в векторной арифметике (p - q в backward), и обёртка только мешала бы.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

# Псевдоним типа распределения
Distribution = np.ndarray

# Нижняя граница второго аргумента KL. Заточенные (почти one-hot) цели
# дают p → 0 на "чужих" классах, без клампа лосс уходит в inf.
KL_FLOOR = 1e-12

# Допуск нормировки распределения
NORM_ATOL = 1e-9


def _as_vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {arr.shape}")
    return arr


def is_distribution(p, atol: float = NORM_ATOL) -> bool:
    """Проверка инварианта Distribution."""
    arr = np.asarray(p, dtype=np.float64)
    return bool(
        arr.ndim == 1
        and arr.size > 0
        and np.all(np.isfinite(arr))
        and np.all(arr >= 0.0)
        and abs(arr.sum() - 1.0) <= atol
    )


def softmax(logits, mask: Optional[np.ndarray] = None) -> Distribution:
    """Численно устойчивый softmax.

    mask (bool, та же длина): позиции с False получают вероятность ровно 0,
    как если бы их логит был −inf. Сам −inf во входе не допускается.
    """
    z = _as_vector(logits, "logits")
    if not np.all(np.isfinite(z)):
        raise FloatingPointError("softmax: non-finite logits")

    if mask is None:
        shifted = z - z.max()
        e = np.exp(shifted)
        return e / e.sum()

    mask = np.asarray(mask, dtype=bool)
    if mask.shape != z.shape:
        raise ValueError(f"softmax: mask shape {mask.shape} != logits shape {z.shape}")
    if not mask.any():
        raise ValueError("softmax: mask excludes every entry")

    out = np.zeros_like(z)
    zm = z[mask]
    e = np.exp(zm - zm.max())
    out[mask] = e / e.sum()
    return out


def log_softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Построчный log-softmax для матрицы логитов (MLM, батчи)."""
    z = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise FloatingPointError("log_softmax: non-finite logits")
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def sharpen(p, T: float) -> Distribution:
    """Заточка распределения температурой T: p^(1/T) / ||p^(1/T)||_1.

    T < 1 понижает энтропию, argmax сохраняется (поэлементная монотонная
    степень). Считаем в лог-пространстве, чтобы малые T не давали underflow
    всех компонент в ноль.
    """
    if T <= 0:
        raise ValueError(f"sharpen: temperature must be positive, got {T}")
    arr = _as_vector(p, "p")
    if T == 1.0:
        return arr.copy()

    positive = arr > 0.0
    if not positive.any():
        raise ValueError("sharpen: p has no positive entries")

    scaled = np.full_like(arr, -np.inf)
    scaled[positive] = np.log(arr[positive]) / T
    out = np.zeros_like(arr)
    out[positive] = np.exp(scaled[positive] - scaled[positive].max())
    return out / out.sum()


def kl_divergence(q, p) -> float:
    """KL(q || p) = Σ q_i ln(q_i / p_i), натуральный логарифм.

    Соглашения: 0·ln(0/·) = 0; p клампится снизу на KL_FLOOR.
    q — "цель" (заточенное предсказание на оригинале), p — предсказание
    на возмущённом входе.
    """
    qa = _as_vector(q, "q")
    pa = _as_vector(p, "p")
    if qa.shape != pa.shape:
        raise ValueError(f"kl_divergence: dimension mismatch {qa.shape} vs {pa.shape}")

    support = qa > 0.0
    ps = np.maximum(pa[support], KL_FLOOR)
    value = float(np.sum(qa[support] * np.log(qa[support] / ps)))
    # Округление может дать -1e-17 на совпадающих входах
    return max(value, 0.0)


def entropy(p) -> float:
    """Энтропия Шеннона в натах (0·ln 0 = 0)."""
    arr = _as_vector(p, "p")
    nz = arr[arr > 0.0]
    return float(-np.sum(nz * np.log(nz)))


def cross_entropy(p, label: int) -> float:
    """−ln p[label] с тем же клампом, что и у KL."""
    arr = _as_vector(p, "p")
    if not 0 <= label < arr.size:
        raise ValueError(f"cross_entropy: label {label} out of range for {arr.size} classes")
    return float(-np.log(max(arr[label], KL_FLOOR)))
