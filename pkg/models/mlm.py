"""
Замороженная маскированная языковая модель на контекстном окне.

Позицию m модель предсказывает по конкатенации эмбеддингов 2w соседей
(m−w..m−1, m+1..m+w), сам токен x_m в окно не входит. Это и есть режим
"без маскирования": соседи остаются нетронутыми, а собственный токен
модель не видит по построению. Слоты за границами предложения заполняются
эмбеддингом <pad>.

    ctx    = [E_m[x_{m−w}], …, E_m[x_{m−1}], E_m[x_{m+1}], …, E_m[x_{m+w}]]
    hidden = tanh(W_c ctx + b_c)
    logits = W_o hidden + b_o

MLM обучается один раз на корпусе задачи и дальше только читается:
после train_mlm() массивы помечаются read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from numerics import Adam, KL_FLOOR, log_softmax_rows
from utils.logger import logger
from utils.timer import timer
from vocab import PAD_ID, Sentence

from .checkpoint import KIND_MLM, CheckpointError, read_checkpoint, write_checkpoint

PARAM_NAMES: Tuple[str, ...] = ("E_m", "W_c", "b_c", "W_o", "b_o")

DEFAULT_WINDOW = 3
DEFAULT_DIM = 32
DEFAULT_HIDDEN = 64


# ---------------------------------------------------------------------------
# Модели данных
# ---------------------------------------------------------------------------

@dataclass
class MLMParams:
    E_m: np.ndarray     # |V| × d_m
    W_c: np.ndarray     # h_m × 2w·d_m
    b_c: np.ndarray     # h_m
    W_o: np.ndarray     # |V| × h_m
    b_o: np.ndarray     # |V|
    w: int = DEFAULT_WINDOW
    seed: int = 0
    # Средний CE по корпусу после каждой эпохи (в чекпоинт уходит в метаданные)
    train_losses: List[float] = field(default_factory=list)

    @property
    def vocab_size(self) -> int:
        return int(self.E_m.shape[0])

    @property
    def d_m(self) -> int:
        return int(self.E_m.shape[1])

    @property
    def h_m(self) -> int:
        return int(self.W_c.shape[0])

    def arrays(self) -> Dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def freeze(self) -> "MLMParams":
        for arr in self.arrays().values():
            arr.setflags(write=False)
        return self

    def fingerprint(self) -> bytes:
        """Байтовый снимок всех весов — для проверки, что MLM не менялась."""
        return b"".join(np.ascontiguousarray(a).tobytes() for a in self.arrays().values())


@dataclass(frozen=True)
class CandidateSet:
    """top-k кандидатов на замену в позиции m, по убыванию log-вероятности.

    При равных скорах раньше идёт меньший id токена.
    """

    position: int
    token_ids: np.ndarray
    log_probs: np.ndarray

    def __len__(self) -> int:
        return int(self.token_ids.size)

    def probs(self) -> np.ndarray:
        """Вероятности, перенормированные внутри множества кандидатов."""
        z = self.log_probs - self.log_probs.max()
        e = np.exp(z)
        return e / e.sum()


# ---------------------------------------------------------------------------
# Инициализация и прямой проход
# ---------------------------------------------------------------------------

def init_mlm(vocab_size: int, w: int = DEFAULT_WINDOW, d_m: int = DEFAULT_DIM,
             h_m: int = DEFAULT_HIDDEN, seed: int = 0) -> MLMParams:
    for name, value in (("vocab_size", vocab_size), ("w", w), ("d_m", d_m), ("h_m", h_m)):
        if value < 1:
            raise ValueError(f"MLM dimension {name} must be >= 1, got {value}")

    rng = np.random.default_rng(seed)
    ctx_dim = 2 * w * d_m

    def glorot(fan_out: int, fan_in: int, shape):
        s = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-s, s, size=shape)

    return MLMParams(
        E_m=glorot(d_m, vocab_size, (vocab_size, d_m)),
        W_c=glorot(h_m, ctx_dim, (h_m, ctx_dim)),
        b_c=np.zeros(h_m),
        W_o=glorot(vocab_size, h_m, (vocab_size, h_m)),
        b_o=np.zeros(vocab_size),
        w=w,
        seed=seed,
    )


def context_ids(ids: np.ndarray, w: int) -> np.ndarray:
    """M × 2w матрица id соседей; за границами — PAD_ID. Центр не входит."""
    M = ids.size
    offsets = np.concatenate([np.arange(-w, 0), np.arange(1, w + 1)])
    pos = np.arange(M)[:, None] + offsets[None, :]
    inside = (pos >= 0) & (pos < M)
    out = np.full(pos.shape, PAD_ID, dtype=np.int64)
    out[inside] = ids[pos[inside]]
    return out


def _hidden(mlm: MLMParams, ctx: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    flat = mlm.E_m[ctx].reshape(ctx.shape[0], -1)
    return flat, np.tanh(flat @ mlm.W_c.T + mlm.b_c)


def log_probs_all(mlm: MLMParams, sentence: Sentence) -> np.ndarray:
    """M × |V| log-вероятности для всех позиций за один проход."""
    sentence.check_vocab(mlm.vocab_size)
    ctx = context_ids(sentence.ids, mlm.w)
    _, hidden = _hidden(mlm, ctx)
    return log_softmax_rows(hidden @ mlm.W_o.T + mlm.b_o)


predict_all = log_probs_all


def log_probs_at(mlm: MLMParams, sentence: Sentence, positions: Sequence[int]) -> np.ndarray:
    """log-вероятности только для выбранных позиций (len × |V|)."""
    positions = np.asarray(positions, dtype=np.int64)
    if positions.size and (positions.min() < 0 or positions.max() >= sentence.M):
        raise ValueError(f"position out of range for sentence of length {sentence.M}")
    sentence.check_vocab(mlm.vocab_size)
    ctx = context_ids(sentence.ids, mlm.w)[positions]
    _, hidden = _hidden(mlm, ctx)
    return log_softmax_rows(hidden @ mlm.W_o.T + mlm.b_o)


def predict_position(mlm: MLMParams, sentence: Sentence, m: int) -> np.ndarray:
    """Распределение по словарю в позиции m (без маскирования x_m)."""
    if not 0 <= m < sentence.M:
        raise ValueError(f"position {m} out of range for sentence of length {sentence.M}")
    return np.exp(log_probs_at(mlm, sentence, [m])[0])


# ---------------------------------------------------------------------------
# Кандидаты и перплексия
# ---------------------------------------------------------------------------

def top_k_from_scores(scores: np.ndarray, k: int, exclude: int, position: int) -> CandidateSet:
    """top-k по вектору скоров над словарём.

    Исключаются исходный токен и <pad>: pad маскируется классификатором,
    то есть замена на него — это удаление, а не замена. Поэтому кандидатов
    не больше |V| − 2, и k сверх этого отвергается.
    """
    V = scores.size
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > V - 2:
        raise ValueError(
            f"k={k} exceeds the {V - 2} available candidates "
            f"(vocabulary size {V} minus <pad> and the original token)"
        )

    ids = np.arange(V)
    allowed = (ids != exclude) & (ids != PAD_ID)
    cand = ids[allowed]
    cand_scores = scores[allowed]
    # lexsort: главный ключ последний; при равенстве скоров меньший id первым
    order = np.lexsort((cand, -cand_scores))[:k]
    return CandidateSet(position=int(position), token_ids=cand[order].copy(), log_probs=cand_scores[order].copy())


def top_k_candidates(mlm: MLMParams, sentence: Sentence, m: int, k: int, exclude: int) -> CandidateSet:
    """k самых вероятных по MLM токенов в позиции m, кроме exclude."""
    if not 0 <= m < sentence.M:
        raise ValueError(f"position {m} out of range for sentence of length {sentence.M}")
    return top_k_from_scores(log_probs_at(mlm, sentence, [m])[0], k, exclude, m)


def token_log_probs(mlm: MLMParams, sentence: Sentence) -> np.ndarray:
    """ln p_mlm(x_m | контекст m) для каждой позиции (без клампа)."""
    lp = log_probs_all(mlm, sentence)
    return lp[np.arange(sentence.M), sentence.ids]


def pseudo_perplexity(mlm: MLMParams, sentence: Sentence) -> float:
    """exp(среднего −ln p_mlm(x_m | контекст)), вероятности клампятся на 1e-12."""
    lp = np.maximum(token_log_probs(mlm, sentence), np.log(KL_FLOOR))
    return float(np.exp(-lp.mean()))


# ---------------------------------------------------------------------------
# Обучение
# ---------------------------------------------------------------------------

def _gather_examples(corpus: Sequence[Sentence], w: int) -> Tuple[np.ndarray, np.ndarray]:
    ctx = [context_ids(s.ids, w) for s in corpus]
    targets = [s.ids for s in corpus]
    return np.concatenate(ctx, axis=0), np.concatenate(targets)


def _batch_loss_and_grads(mlm: MLMParams, ctx: np.ndarray,
                          targets: np.ndarray) -> Tuple[float, Dict[str, np.ndarray]]:
    B = targets.size
    flat, hidden = _hidden(mlm, ctx)
    logp = log_softmax_rows(hidden @ mlm.W_o.T + mlm.b_o)
    loss = float(-logp[np.arange(B), targets].mean())

    dlogits = np.exp(logp)
    dlogits[np.arange(B), targets] -= 1.0
    dlogits /= B

    dhidden = dlogits @ mlm.W_o
    dpre = dhidden * (1.0 - hidden * hidden)
    dflat = dpre @ mlm.W_c

    dE = np.zeros_like(mlm.E_m)
    np.add.at(dE, ctx.reshape(-1), dflat.reshape(-1, mlm.d_m))

    grads = {
        "E_m": dE,
        "W_c": dpre.T @ flat,
        "b_c": dpre.sum(axis=0),
        "W_o": dlogits.T @ hidden,
        "b_o": dlogits.sum(axis=0),
    }
    return loss, grads


def corpus_loss(mlm: MLMParams, corpus: Sequence[Sentence]) -> float:
    ctx, targets = _gather_examples(corpus, mlm.w)
    _, hidden = _hidden(mlm, ctx)
    logp = log_softmax_rows(hidden @ mlm.W_o.T + mlm.b_o)
    return float(-logp[np.arange(targets.size), targets].mean())


def train_mlm(
    corpus: Sequence[Sentence],
    vocab_size: int,
    epochs: int = 20,
    lr: float = 1e-2,
    seed: int = 0,
    *,
    w: int = DEFAULT_WINDOW,
    d_m: int = DEFAULT_DIM,
    h_m: int = DEFAULT_HIDDEN,
    batch_size: int = 128,
    show_progress: bool = False,
) -> MLMParams:
    """Предобучение MLM кросс-энтропией (Adam), затем заморозка.

    Каждая позиция каждого предложения — отдельный пример. Порядок
    минибатчей детерминирован seed'ом.
    """
    if not corpus:
        raise ValueError("empty corpus")
    if epochs < 1:
        raise ValueError("epochs must be >= 1")

    mlm = init_mlm(vocab_size, w=w, d_m=d_m, h_m=h_m, seed=seed)
    ctx, targets = _gather_examples(corpus, w)
    if targets.max() >= vocab_size:
        raise ValueError(f"corpus contains token id {int(targets.max())} >= vocab size {vocab_size}")

    rng = np.random.default_rng(seed + 1)
    opt = Adam(lr=lr)
    n = targets.size
    logger.info(f"MLM pretraining: {len(corpus)} sentences, {n} positions, {epochs} epochs, window w={w}")

    epoch_iter = range(epochs)
    if show_progress:
        try:
            from tqdm import tqdm
            epoch_iter = tqdm(epoch_iter, desc="MLM pretraining", unit="epoch")
        except ImportError:
            logger.warning("tqdm not installed, progress bar disabled")

    for epoch in epoch_iter:
        with timer.measure("mlm_epoch"):
            order = rng.permutation(n)
            for start in range(0, n, batch_size):
                idx = order[start:start + batch_size]
                _, grads = _batch_loss_and_grads(mlm, ctx[idx], targets[idx])
                opt.step(mlm.arrays(), grads)
            loss = corpus_loss(mlm, corpus)
        mlm.train_losses.append(loss)
        logger.debug(f"MLM epoch {epoch + 1}/{epochs}: loss={loss:.4f}")

    logger.info(f"MLM pretraining done: final loss={mlm.train_losses[-1]:.4f}")
    return mlm.freeze()


# ---------------------------------------------------------------------------
# Чекпоинт
# ---------------------------------------------------------------------------

def save_mlm(mlm: MLMParams, path: str | Path, extra: Optional[Dict[str, Any]] = None) -> None:
    metadata = {
        "vocab_size": mlm.vocab_size, "w": mlm.w, "d_m": mlm.d_m, "h_m": mlm.h_m,
        "seed": mlm.seed, "train_losses": list(mlm.train_losses), **(extra or {}),
    }
    write_checkpoint(path, KIND_MLM, metadata, [(n, a) for n, a in mlm.arrays().items()])
    logger.debug(f"MLM checkpoint saved: {path}")


def load_mlm(path: str | Path) -> Tuple[MLMParams, Dict[str, Any]]:
    meta, arrays = read_checkpoint(path, KIND_MLM)
    missing = [n for n in PARAM_NAMES if n not in arrays]
    if missing:
        raise CheckpointError(f"incompatible checkpoint: missing arrays {missing}")
    w = int(meta["w"])
    if arrays["W_c"].shape[1] != 2 * w * arrays["E_m"].shape[1]:
        raise CheckpointError("incompatible checkpoint: window size does not match W_c")
    mlm = MLMParams(
        **{n: arrays[n] for n in PARAM_NAMES},
        w=w,
        seed=int(meta.get("seed", 0)),
        train_losses=[float(x) for x in meta.get("train_losses", [])],
    )
    return mlm.freeze(), meta
