"""
Обучаемый классификатор p(·|x) с ручным backprop.

Архитектура (фиксирована):
    a_m    = v_aᵀ tanh(W_a E[x_m] + b_a)          скор позиции
    α      = softmax_m(a)  (pad-позиции → 0)      attention-пулинг
    pooled = Σ_m α_m E[x_m]
    hidden = ReLU(W_1 pooled + b_1)
    logits = W_2 hidden + b_2
    p      = softmax(logits)

Почему attention, а не mean-пулинг: при среднем градиент по e(x_m) одинаков
для всех позиций, и скор замены теряет зависимость от позиции.

Все лоссы, которые нам нужны, имеют вид KL(target || p) с константной целью:
- согласованность: target = заточенное предсказание на оригинале
- cross-entropy:   target = one-hot метки (энтропия one-hot = 0, KL = CE)
Поэтому backward принимает dlogits = p − target и обслуживает оба случая.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from numerics import Adam, kl_divergence, softmax
from utils.logger import logger
from vocab import PAD_ID, Sentence

from .checkpoint import KIND_CLASSIFIER, CheckpointError, read_checkpoint, write_checkpoint

# Порядок полей = порядок массивов в чекпоинте
PARAM_NAMES: Tuple[str, ...] = ("E", "W_a", "b_a", "v_a", "W_1", "b_1", "W_2", "b_2")

DEFAULT_DIM = 32
DEFAULT_ATTN_DIM = 16
DEFAULT_HIDDEN = 64


# ---------------------------------------------------------------------------
# Параметры и трасса прямого прохода
# ---------------------------------------------------------------------------

@dataclass
class ClassifierParams:
    E: np.ndarray       # |V| × d, строка PAD_ID всегда нулевая
    W_a: np.ndarray     # d_a × d
    b_a: np.ndarray     # d_a
    v_a: np.ndarray     # d_a
    W_1: np.ndarray     # h × d
    b_1: np.ndarray     # h
    W_2: np.ndarray     # C × h
    b_2: np.ndarray     # C
    seed: int = 0

    @property
    def vocab_size(self) -> int:
        return int(self.E.shape[0])

    @property
    def d(self) -> int:
        return int(self.E.shape[1])

    @property
    def d_a(self) -> int:
        return int(self.W_a.shape[0])

    @property
    def h(self) -> int:
        return int(self.W_1.shape[0])

    @property
    def C(self) -> int:
        return int(self.W_2.shape[0])

    def arrays(self) -> Dict[str, np.ndarray]:
        """Словарь имя → массив (ссылки, не копии) — для оптимизатора."""
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "ClassifierParams":
        """Замороженный снимок для воркеров возмущения."""
        return ClassifierParams(**{n: a.copy() for n, a in self.arrays().items()}, seed=self.seed)

    def dims(self) -> Dict[str, int]:
        return {"vocab_size": self.vocab_size, "d": self.d, "d_a": self.d_a, "h": self.h, "C": self.C}

    def validate(self) -> None:
        V, d = self.E.shape
        expected = {
            "W_a": (self.d_a, d), "b_a": (self.d_a,), "v_a": (self.d_a,),
            "W_1": (self.h, d), "b_1": (self.h,),
            "W_2": (self.C, self.h), "b_2": (self.C,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"classifier param {name} has shape {getattr(self, name).shape}, expected {shape}")
        for name, arr in self.arrays().items():
            if not np.all(np.isfinite(arr)):
                raise FloatingPointError(f"classifier param {name} contains non-finite values")


@dataclass
class ForwardTrace:
    """Кэши прямого прохода для backward."""

    ids: np.ndarray          # M
    mask: np.ndarray         # M, True на реальных токенах
    emb: np.ndarray          # M × d
    u: np.ndarray            # M × d_a, tanh(W_a e + b_a)
    scores: np.ndarray       # M, a_m
    alpha: np.ndarray        # M
    pooled: np.ndarray       # d
    z1: np.ndarray           # h, до ReLU
    hidden: np.ndarray       # h
    logits: np.ndarray       # C
    probs: np.ndarray        # C


@dataclass
class ClassifierGrads:
    params: Dict[str, np.ndarray]          # градиенты по всем PARAM_NAMES
    inputs: np.ndarray                      # M × d, ∂loss/∂e(x_m) по позициям


# ---------------------------------------------------------------------------
# Инициализация
# ---------------------------------------------------------------------------

def _glorot(rng: np.random.Generator, fan_out: int, fan_in: int, shape) -> np.ndarray:
    s = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-s, s, size=shape)


def init_classifier(
    vocab_size: int,
    d: int = DEFAULT_DIM,
    d_a: int = DEFAULT_ATTN_DIM,
    h: int = DEFAULT_HIDDEN,
    C: int = 2,
    seed: int = 0,
) -> ClassifierParams:
    """Glorot-uniform для матриц (s = sqrt(6/(fan_in+fan_out))), нулевые смещения."""
    for name, value in (("vocab_size", vocab_size), ("d", d), ("d_a", d_a), ("h", h), ("C", C)):
        if value < 1:
            raise ValueError(f"classifier dimension {name} must be >= 1, got {value}")

    rng = np.random.default_rng(seed)
    E = _glorot(rng, d, vocab_size, (vocab_size, d))
    E[PAD_ID] = 0.0
    params = ClassifierParams(
        E=E,
        W_a=_glorot(rng, d_a, d, (d_a, d)),
        b_a=np.zeros(d_a),
        v_a=_glorot(rng, 1, d_a, (d_a,)),
        W_1=_glorot(rng, h, d, (h, d)),
        b_1=np.zeros(h),
        W_2=_glorot(rng, C, h, (C, h)),
        b_2=np.zeros(C),
        seed=seed,
    )
    return params


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------

def forward_embedded(params: ClassifierParams, emb: np.ndarray, mask: np.ndarray,
                     ids: Optional[np.ndarray] = None) -> Tuple[np.ndarray, ForwardTrace]:
    """Прямой проход от матрицы эмбеддингов M × d.

    Нужен отдельно от forward(): проверка градиента по входу возмущает
    эмбеддинг конкретной позиции, а не строку таблицы E.
    """
    if not mask.any():
        raise ValueError("sentence has no real (non-pad) tokens")

    u = np.tanh(emb @ params.W_a.T + params.b_a)
    scores = u @ params.v_a
    alpha = softmax(scores, mask=mask)
    pooled = alpha @ emb
    z1 = params.W_1 @ pooled + params.b_1
    hidden = np.maximum(z1, 0.0)
    logits = params.W_2 @ hidden + params.b_2
    probs = softmax(logits)

    trace = ForwardTrace(
        ids=ids if ids is not None else np.zeros(emb.shape[0], dtype=np.int64),
        mask=mask, emb=emb, u=u, scores=scores, alpha=alpha,
        pooled=pooled, z1=z1, hidden=hidden, logits=logits, probs=probs,
    )
    return probs, trace


def forward(params: ClassifierParams, sentence: Sentence) -> Tuple[np.ndarray, ForwardTrace]:
    """p(·|x) и трасса для backward."""
    sentence.check_vocab(params.vocab_size)
    ids = sentence.ids
    mask = ids != PAD_ID
    emb = params.E[ids]
    return forward_embedded(params, emb, mask, ids=ids)


def predict(params: ClassifierParams, sentence: Sentence) -> np.ndarray:
    return forward(params, sentence)[0]


def backward(params: ClassifierParams, trace: ForwardTrace, dlogits: np.ndarray,
             with_params: bool = True) -> ClassifierGrads:
    """Точный backprop от ∂loss/∂logits.

    with_params=False пропускает градиенты по весам (для поиска замен
    нужен только ∂/∂e(x_m)).
    """
    dlogits = np.asarray(dlogits, dtype=np.float64)
    if dlogits.shape != trace.logits.shape:
        raise ValueError(f"dlogits shape {dlogits.shape} != logits shape {trace.logits.shape}")

    # logits = W_2 hidden + b_2
    dhidden = params.W_2.T @ dlogits
    # ReLU
    dz1 = dhidden * (trace.z1 > 0.0)
    # z1 = W_1 pooled + b_1
    dpooled = params.W_1.T @ dz1

    # pooled = Σ α_m e_m
    dalpha = trace.emb @ dpooled
    # softmax по позициям; на pad-позициях α = 0, значит и dscores = 0
    dscores = trace.alpha * (dalpha - trace.alpha @ dalpha)
    # a_m = v_aᵀ u_m, u_m = tanh(W_a e_m + b_a)
    dpre = np.outer(dscores, params.v_a) * (1.0 - trace.u * trace.u)

    demb = trace.alpha[:, None] * dpooled[None, :] + dpre @ params.W_a
    demb[~trace.mask] = 0.0

    grads: Dict[str, np.ndarray] = {}
    if with_params:
        dE = np.zeros_like(params.E)
        np.add.at(dE, trace.ids, demb)
        dE[PAD_ID] = 0.0
        grads = {
            "E": dE,
            "W_a": dpre.T @ trace.emb,
            "b_a": dpre.sum(axis=0),
            "v_a": trace.u.T @ dscores,
            "W_1": np.outer(dz1, trace.pooled),
            "b_1": dz1,
            "W_2": np.outer(dlogits, trace.hidden),
            "b_2": dlogits.copy(),
        }
    return ClassifierGrads(params=grads, inputs=demb)


def input_gradients(params: ClassifierParams, sentence: Sentence, target: np.ndarray) -> np.ndarray:
    """g_{x_m} = ∂KL(target || p(·|x')) / ∂e(x_m) при x' = x, по всем позициям (M × d).

    target — константа (градиент в неё не идёт). Один вызов = один backward.
    """
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (params.C,):
        raise ValueError(f"target has shape {target.shape}, expected ({params.C},)")
    probs, trace = forward(params, sentence)
    return backward(params, trace, probs - target, with_params=False).inputs


def loss_and_gradients(params: ClassifierParams, sentence: Sentence,
                       target: np.ndarray) -> Tuple[float, np.ndarray, Dict[str, np.ndarray]]:
    """(KL(target || p), p, градиенты по параметрам) для одного примера."""
    probs, trace = forward(params, sentence)
    grads = backward(params, trace, probs - target).params
    return kl_divergence(target, probs), probs, grads


def param_gradients(params: ClassifierParams, sentence: Sentence,
                    target: np.ndarray) -> Dict[str, np.ndarray]:
    return loss_and_gradients(params, sentence, target)[2]


def one_hot(label: int, C: int) -> np.ndarray:
    if not 0 <= label < C:
        raise ValueError(f"label {label} out of range for {C} classes")
    t = np.zeros(C)
    t[label] = 1.0
    return t


# ---------------------------------------------------------------------------
# Шаг оптимизатора
# ---------------------------------------------------------------------------

def zero_gradients(params: ClassifierParams) -> Dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in params.arrays().items()}


def add_scaled(acc: Dict[str, np.ndarray], grads: Dict[str, np.ndarray], scale: float) -> None:
    for name, g in grads.items():
        acc[name] += scale * g


def apply_gradients(params: ClassifierParams, grads: Dict[str, np.ndarray],
                    optimizer: Adam, lr: float) -> None:
    """Шаг Adam по готовым (уже усреднённым) градиентам, затем обнуление строки pad."""
    optimizer.step(params.arrays(), grads, lr=lr)
    params.E[PAD_ID] = 0.0


def train_step(params: ClassifierParams, batch: Sequence[Tuple[Sentence, np.ndarray]],
               optimizer: Adam, lr: float) -> float:
    """Один шаг по батчу пар (предложение, цель). Градиенты усредняются по батчу.

    Возвращает средний лосс батча ДО шага.
    """
    if not batch:
        raise ValueError("train_step: empty batch")
    acc = zero_gradients(params)
    total = 0.0
    for sentence, target in batch:
        loss, _, grads = loss_and_gradients(params, sentence, target)
        total += loss
        add_scaled(acc, grads, 1.0 / len(batch))
    apply_gradients(params, acc, optimizer, lr)
    return total / len(batch)


# ---------------------------------------------------------------------------
# Чекпоинт
# ---------------------------------------------------------------------------

def save_classifier(params: ClassifierParams, path: str | Path,
                    extra: Optional[Dict[str, Any]] = None) -> None:
    metadata = {**params.dims(), "seed": params.seed, **(extra or {})}
    write_checkpoint(path, KIND_CLASSIFIER, metadata, [(n, a) for n, a in params.arrays().items()])
    logger.debug(f"Classifier checkpoint saved: {path}")


def load_classifier(path: str | Path) -> Tuple[ClassifierParams, Dict[str, Any]]:
    meta, arrays = read_checkpoint(path, KIND_CLASSIFIER)
    missing = [n for n in PARAM_NAMES if n not in arrays]
    if missing:
        raise CheckpointError(f"incompatible checkpoint: missing arrays {missing}")
    params = ClassifierParams(**{n: arrays[n] for n in PARAM_NAMES}, seed=int(meta.get("seed", 0)))
    params.validate()
    return params, meta
