"""
Цикл обучения: CE с TSA на размеченном батче + согласованность на
возмущённом неразмеченном батче, веса 1:1, один шаг Adam.

Порядок на каждом шаге:
  1. η = tsa_threshold(step), размеченный батч → CE по оставшимся примерам
  2. снимок параметров; возмущение батча согласованности против снимка
     (все воркеры завершаются до шага оптимизатора)
  3. KL(q || p(x̂)) с константной q, среднее по своему батчу
  4. сумма лоссов, сумма градиентов, шаг Adam

Вся случайность — из именованных потоков SeedStreams(config.seed), поэтому
два прогона с одинаковыми конфигом и seed дают одинаковый журнал метрик,
а прогоны с разными стратегиями видят одинаковые батчи и позиции I.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.settings import settings
from models.classifier import ClassifierParams, add_scaled, apply_gradients, predict, save_classifier
from models.mlm import MLMParams
from numerics import Adam
from perturb import (
    STRATEGY_UNIFORM,
    Perturbation,
    consistency_divergence,
    perturb_batch,
    rank_histogram,
)
from storage import RecordSink
from utils.logger import logger
from utils.seeding import (
    STREAM_INDEX_SELECTION,
    STREAM_LABELED_ORDER,
    STREAM_PROBE,
    STREAM_SAMPLING,
    STREAM_UNLABELED_ORDER,
    SeedStreams,
)
from utils.timer import timer
from vocab import Sentence

from .losses import consistency_batch_loss, supervised_loss_with_tsa, tsa_threshold
from .models import MetricsLog, MetricsRecord, TrainingConfig, TrainingDivergedError, TrainState

LabeledSet = Sequence[Tuple[Sentence, int]]


class BatchCycler:
    """Бесконечный поток батчей индексов с перемешиванием на каждой эпохе.

    Батч больше выборки добирается из следующей эпохи.
    """

    def __init__(self, n: int, batch_size: int, rng: np.random.Generator):
        if n < 1:
            raise ValueError("cannot draw batches from an empty set")
        self._n = n
        self._batch_size = batch_size
        self._rng = rng
        self._order = rng.permutation(n)
        self._pos = 0

    def next(self) -> np.ndarray:
        out: List[int] = []
        while len(out) < self._batch_size:
            if self._pos == self._n:
                self._order = self._rng.permutation(self._n)
                self._pos = 0
            take = min(self._batch_size - len(out), self._n - self._pos)
            out.extend(self._order[self._pos:self._pos + take].tolist())
            self._pos += take
        return np.asarray(out, dtype=np.int64)


def evaluate(params: ClassifierParams, dataset: LabeledSet) -> float:
    """Доля примеров с argmax p(·|x) == метка."""
    if not dataset:
        raise ValueError("cannot evaluate on an empty dataset")
    correct = sum(int(np.argmax(predict(params, s)) == label) for s, label in dataset)
    return correct / len(dataset)


def _probe_divergences(
    params: ClassifierParams,
    mlm: MLMParams,
    probe: Sequence[Sentence],
    config: TrainingConfig,
    streams: SeedStreams,
) -> Tuple[float, float]:
    """Средний KL(q || p(x̂)) для стратегии из конфига и для uniform на тех же позициях."""

    def run(strategy: str) -> float:
        # Свежие генераторы при каждом вызове: одинаковые I на каждой оценке и у обеих стратегий
        rng = np.random.default_rng(streams.sequence(STREAM_PROBE))
        pconf = replace(config.perturbation, strategy=strategy)
        index_rng, choice_rng = (np.random.default_rng(s) for s in rng.integers(0, 2**63 - 1, size=2))
        perts = perturb_batch(params, mlm, probe, pconf, index_rng, choice_rng)
        return float(np.mean([consistency_divergence(params, p) for p in perts]))

    return run(config.perturbation.strategy), run(STRATEGY_UNIFORM)


def _iter_steps(total: int):
    steps = range(1, total + 1)
    if settings.SHOW_PROGRESS_BAR:
        try:
            from tqdm import tqdm
            return tqdm(steps, desc="Training", unit="step")
        except ImportError:
            logger.warning("tqdm not installed, progress bar disabled")
    return steps


def train(
    config: TrainingConfig,
    labeled: LabeledSet,
    unlabeled: Sequence[Sentence],
    dev: LabeledSet,
    *,
    params: ClassifierParams,
    mlm: Optional[MLMParams] = None,
    sink: Optional[RecordSink] = None,
    header: Optional[Dict[str, Any]] = None,
    checkpoint_path: Optional[str | Path] = None,
    checkpoint_extra: Optional[Dict[str, Any]] = None,
) -> Tuple[ClassifierParams, MetricsLog]:
    """Обучение классификатора; возвращает (лучший по dev снимок, журнал метрик).

    params изменяются на месте. Если задан sink, заголовок и записи оценок
    пишутся в него по ходу обучения; если задан checkpoint_path, лучший
    снимок сохраняется туда при каждом улучшении (с checkpoint_extra в
    метаданных).
    """
    config.validate()
    if not labeled:
        raise ValueError("labeled set is empty")
    if not dev:
        raise ValueError("dev set is empty")
    if config.consistency and mlm is None:
        raise ValueError("MLM checkpoint required")
    if mlm is not None and mlm.vocab_size != params.vocab_size:
        raise ValueError(f"MLM vocabulary size {mlm.vocab_size} != classifier vocabulary size {params.vocab_size}")

    pconf = config.perturbation
    streams = SeedStreams(config.seed)
    labeled_batches = BatchCycler(len(labeled), config.labeled_batch, streams.rng(STREAM_LABELED_ORDER))

    pool: Sequence[Sentence] = []
    if config.consistency:
        if unlabeled and not config.consistency_on_labeled:
            pool = unlabeled
        else:
            pool = [s for s, _ in labeled]
            logger.info("Consistency batch drawn from labeled inputs (labels unused)")
    pool_batches = BatchCycler(len(pool), config.unlabeled_batch, streams.rng(STREAM_UNLABELED_ORDER)) if pool else None
    index_rng = streams.rng(STREAM_INDEX_SELECTION)
    choice_rng = streams.rng(STREAM_SAMPLING)
    probe = list(pool[:config.probe_size]) if pool else []

    log = MetricsLog(header=dict(header or {}))
    if sink is not None:
        sink.write({"record": "header", **log.header})

    state = TrainState(step=0, params=params, optimizer=Adam(lr=config.lr), best_params=params.copy())
    state.reset_window(pconf.k)
    mode = f"consistency/{pconf.strategy}" if config.consistency else "ce-only"
    logger.info(
        f"Training [{mode}]: {config.total_steps} steps, labeled={len(labeled)}, "
        f"consistency pool={len(pool)}, dev={len(dev)}"
    )

    for step in _iter_steps(config.total_steps):
        eta = tsa_threshold(step - 1, config.total_steps, params.C, config.tsa_schedule) if config.tsa_enabled else 1.0
        batch = [labeled[i] for i in labeled_batches.next()]
        sup = supervised_loss_with_tsa(params, batch, eta)

        cons_loss = 0.0
        grads = sup.grads
        if pool_batches is not None:
            snapshot = params.copy()
            xs = [pool[i] for i in pool_batches.next()]
            with timer.measure("perturb_batch"):
                perts: List[Perturbation] = perturb_batch(snapshot, mlm, xs, pconf, index_rng, choice_rng)
            cons = consistency_batch_loss(params, perts)
            cons_loss = cons.loss
            add_scaled(grads, cons.grads, 1.0)
            for i, c in enumerate(rank_histogram(perts, pconf.k)):
                state.rank_counts[i] += c

        total = sup.loss + cons_loss
        if not np.isfinite(total):
            raise TrainingDivergedError(
                f"non-finite loss at step {step}: ce={sup.loss!r}, consistency={cons_loss!r}"
            )
        try:
            apply_gradients(params, grads, state.optimizer, config.lr)
        except FloatingPointError as exc:
            raise TrainingDivergedError(f"step {step}: {exc}") from exc

        state.step = step
        state.ce_sum += sup.loss
        state.consistency_sum += cons_loss
        state.kept_sum += sup.kept_fraction
        state.window_steps += 1

        if step % config.eval_every == 0 or step == config.total_steps:
            record = _evaluate_point(state, config, dev, mlm, probe, streams, eta)
            log.append(record)
            if sink is not None:
                sink.write(record.to_dict())
            if record.dev_accuracy > state.best_dev_accuracy:
                state.best_dev_accuracy = record.dev_accuracy
                state.best_step = step
                state.best_params = params.copy()
                if checkpoint_path is not None:
                    save_classifier(state.best_params, checkpoint_path, extra={
                        **(checkpoint_extra or {}), "step": step, "dev_accuracy": record.dev_accuracy,
                    })
            state.reset_window(pconf.k)

    logger.info(f"Training done: best dev accuracy {state.best_dev_accuracy:.4f} at step {state.best_step}")
    return state.best_params, log


def _evaluate_point(
    state: TrainState,
    config: TrainingConfig,
    dev: LabeledSet,
    mlm: Optional[MLMParams],
    probe: Sequence[Sentence],
    streams: SeedStreams,
    eta: float,
) -> MetricsRecord:
    with timer.measure("evaluate"):
        accuracy = evaluate(state.params, dev)
        kl_adv = kl_uniform = None
        if mlm is not None and probe:
            kl_adv, kl_uniform = _probe_divergences(state.params, mlm, probe, config, streams)

    n = max(state.window_steps, 1)
    record = MetricsRecord(
        step=state.step,
        ce_loss=state.ce_sum / n,
        consistency_loss=state.consistency_sum / n,
        tsa_threshold=eta,
        tsa_kept_fraction=state.kept_sum / n,
        dev_accuracy=accuracy,
        best_dev_accuracy=max(accuracy, state.best_dev_accuracy),
        mean_kl_adv=kl_adv,
        mean_kl_uniform_probe=kl_uniform,
        chosen_rank_histogram=list(state.rank_counts or []),
    )
    logger.info(
        f"step {record.step}: ce={record.ce_loss:.4f} cons={record.consistency_loss:.4f} "
        f"kept={record.tsa_kept_fraction:.2f} dev={record.dev_accuracy:.4f}"
    )
    return record
