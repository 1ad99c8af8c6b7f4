"""
Команды CLI: генерация данных, предобучение MLM, обучение, оценка, возмущение.

Каждая команда принимает разрешённый RunConfig и явные пути, возвращает
итоговую запись (dict), которую main.py печатает в stdout одной строкой JSON.
Ошибки пробрасываются: ValueError — ошибка валидации (код 1), остальное —
ошибка выполнения (код 2).

Раскладка каталога данных:
    <data>/labeled.tsv, unlabeled.tsv, dev.tsv, test.tsv, spec.json
Словарь хранится рядом с чекпоинтом: <checkpoint>.vocab.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config.run_config import RunConfig
from config.settings import settings
from data import KeywordOracle, generate, load_tsv, save_spec, save_tsv, split
from data.models import Example
from models.checkpoint import CheckpointError
from models.classifier import ClassifierParams, init_classifier, load_classifier, predict
from models.mlm import MLMParams, load_mlm, pseudo_perplexity, save_mlm, train_mlm
from numerics import kl_divergence
from perturb import perturb_batch, rank_histogram
from perturb.search import consistency_divergence
from storage import JsonLinesSink
from training import evaluate, train
from utils.logger import logger
from utils.seeding import (
    STREAM_DATA,
    STREAM_INDEX_SELECTION,
    STREAM_INIT,
    STREAM_MLM,
    STREAM_SAMPLING,
    STREAM_SPLIT,
    SeedStreams,
)
from utils.timer import timer
from vocab import Sentence, Vocab, build_vocab, encode, load_vocab, save_vocab

PARTITIONS = ("labeled", "unlabeled", "dev", "test")
SPEC_FILE = "spec.json"


# ---------------------------------------------------------------------------
# Вспомогательное
# ---------------------------------------------------------------------------

def vocab_path_for(checkpoint: str | Path) -> Path:
    return Path(f"{checkpoint}.vocab")


def require_path(value: Optional[str | Path], what: str) -> Path:
    if not value:
        raise ValueError(f"{what} is required")
    return Path(value)


def require_file(value: Optional[str | Path], what: str) -> Path:
    path = require_path(value, what)
    if not path.is_file():
        raise ValueError(f"{what} not found: {path}")
    return path


@dataclass
class DataDir:
    labeled: List[Example]
    unlabeled: List[Example]
    dev: List[Example]
    test: List[Example]
    labels: Dict[str, int]

    @property
    def num_classes(self) -> int:
        return max(ex.label for ex in [*self.labeled, *self.dev]) + 1


def load_data_dir(data_dir: str | Path) -> DataDir:
    """Все четыре выборки; unlabeled и test могут отсутствовать."""
    data_dir = Path(data_dir)
    labels: Dict[str, int] = {}
    parts: Dict[str, List[Example]] = {}
    for name in PARTITIONS:
        path = data_dir / f"{name}.tsv"
        if path.is_file():
            parts[name] = load_tsv(path, label_map=labels)
        elif name in ("labeled", "dev"):
            raise ValueError(f"data file not found: {path}")
        else:
            parts[name] = []
    return DataDir(**parts, labels=labels)


def encode_labeled(examples: Sequence[Example], vocab: Vocab) -> List[Tuple[Sentence, int]]:
    return [(encode(ex.text, vocab), ex.label) for ex in examples]


def load_mlm_with_vocab(path: str | Path) -> Tuple[MLMParams, Vocab, Dict[str, Any]]:
    mlm, meta = load_mlm(path)
    vocab = load_vocab(vocab_path_for(path))
    _check_vocab(vocab, meta, path, mlm.vocab_size)
    return mlm, vocab, meta


def load_classifier_with_vocab(path: str | Path) -> Tuple[ClassifierParams, Vocab, Dict[str, Any]]:
    params, meta = load_classifier(path)
    vocab = load_vocab(vocab_path_for(path))
    _check_vocab(vocab, meta, path, params.vocab_size)
    return params, vocab, meta


def _check_vocab(vocab: Vocab, meta: Dict[str, Any], path: str | Path, vocab_size: int) -> None:
    expected = meta.get("vocab_fingerprint")
    if len(vocab) != vocab_size or (expected is not None and expected != vocab.fingerprint()):
        raise CheckpointError(f"incompatible checkpoint: {path} does not match its vocabulary file")


# ---------------------------------------------------------------------------
# gen-data
# ---------------------------------------------------------------------------

def cmd_gen_data(config: RunConfig, out_dir: str | Path) -> Dict[str, Any]:
    """Синтетический корпус → четыре TSV и spec.json."""
    out_dir = require_path(out_dir, "output directory (--out)")
    streams = SeedStreams(config["seed"])
    spec = replace(config.synth_spec(), seed=streams.child_seed(STREAM_DATA))

    corpus = generate(spec, config["synth.n_total"])
    parts = split(
        corpus,
        n_labeled_per_class=config["split.labeled_per_class"],
        n_unlabeled=config["split.unlabeled"],
        n_dev=config["split.dev"],
        seed=streams.child_seed(STREAM_SPLIT),
    )
    for name, examples in parts.partitions().items():
        save_tsv(examples, out_dir / f"{name}.tsv")
    save_spec(spec, out_dir / SPEC_FILE, config_hash=config.config_hash())

    oracle = KeywordOracle(spec)
    ceiling = oracle.accuracy(parts.test) if parts.test else oracle.accuracy(parts.dev)
    logger.info(f"Data written to {out_dir}: {parts.sizes()}, keyword oracle accuracy {ceiling:.4f}")
    return {
        "record": "gen-data",
        "out": str(out_dir),
        "sizes": parts.sizes(),
        "oracle_accuracy": ceiling,
        "config_hash": config.config_hash(),
    }


# ---------------------------------------------------------------------------
# pretrain-mlm
# ---------------------------------------------------------------------------

def cmd_pretrain_mlm(config: RunConfig, data_dir: str | Path, out: str | Path) -> Dict[str, Any]:
    """Словарь по labeled+unlabeled, предобучение MLM, чекпоинт + файл словаря."""
    data = load_data_dir(require_path(data_dir, "data directory (--data)"))
    out = require_path(out, "MLM checkpoint path (--out)")
    texts = [ex.text for ex in [*data.labeled, *data.unlabeled]]
    vocab = build_vocab(texts, min_freq=config["vocab.min_freq"], max_size=config["vocab.max_size"])
    corpus = [encode(t, vocab) for t in texts]

    mlm = train_mlm(
        corpus,
        len(vocab),
        epochs=config["mlm.epochs"],
        lr=config["mlm.lr"],
        seed=SeedStreams(config["seed"]).child_seed(STREAM_MLM),
        w=config["mlm.window"],
        d_m=config["mlm.dim"],
        h_m=config["mlm.hidden"],
        batch_size=config["mlm.batch_size"],
        show_progress=settings.SHOW_PROGRESS_BAR,
    )
    save_mlm(mlm, out, extra={"vocab_fingerprint": vocab.fingerprint(), "config_hash": config.config_hash()})
    save_vocab(vocab, vocab_path_for(out))
    return {
        "record": "pretrain-mlm",
        "checkpoint": str(out),
        "vocab_size": len(vocab),
        "final_loss": mlm.train_losses[-1],
        "config_hash": config.config_hash(),
    }


# ---------------------------------------------------------------------------
# train / eval
# ---------------------------------------------------------------------------

def cmd_train(
    config: RunConfig,
    data_dir: str | Path,
    checkpoint: str | Path,
    metrics_out: str | Path,
    mlm_path: Optional[str | Path] = None,
) -> Dict[str, Any]:
    """Обучение; лучший по dev чекпоинт и журнал метрик (JSONL)."""
    tconf = config.training()
    if tconf.consistency and not mlm_path:
        raise ValueError("MLM checkpoint required")
    data = load_data_dir(require_path(data_dir, "data directory (--data)"))
    checkpoint = require_path(checkpoint, "checkpoint path (--checkpoint)")
    metrics_out = require_path(metrics_out, "metrics path (--metrics-out)")

    mlm: Optional[MLMParams] = None
    if mlm_path:
        mlm, vocab, _ = load_mlm_with_vocab(require_file(mlm_path, "MLM checkpoint"))
    else:
        texts = [ex.text for ex in [*data.labeled, *data.unlabeled]]
        vocab = build_vocab(texts, min_freq=config["vocab.min_freq"], max_size=config["vocab.max_size"])

    C = data.num_classes
    if C < 2:
        raise ValueError("training data must contain at least 2 classes")
    labeled = encode_labeled(data.labeled, vocab)
    dev = encode_labeled(data.dev, vocab)
    unlabeled = [encode(ex.text, vocab) for ex in data.unlabeled] if tconf.consistency else []

    params = init_classifier(
        len(vocab), d=config["model.d"], d_a=config["model.d_a"], h=config["model.h"], C=C,
        seed=SeedStreams(config["seed"]).child_seed(STREAM_INIT),
    )

    config_hash = config.config_hash()
    header = {"config": config.to_dict(), "config_hash": config_hash, "strategy": config.strategy_label}
    extra = {"config_hash": config_hash, "vocab_fingerprint": vocab.fingerprint(), "labels": data.labels}
    save_vocab(vocab, vocab_path_for(checkpoint))
    timer.reset()
    with JsonLinesSink(metrics_out, extra={"config_hash": config_hash}) as sink:
        with timer.measure("train"):
            _, log = train(tconf, labeled, unlabeled, dev, params=params, mlm=mlm, sink=sink,
                           header=header, checkpoint_path=checkpoint, checkpoint_extra=extra)
    timer.log_totals()

    best = max(log.records, key=lambda r: r.dev_accuracy)
    return {
        "record": "train",
        "strategy": config.strategy_label,
        "best_dev_accuracy": best.dev_accuracy,
        "best_step": best.step,
        "checkpoint": str(checkpoint),
        "metrics": str(metrics_out),
        "timing_ms": timer.totals_ms(),
        "config_hash": config_hash,
    }


def cmd_eval(checkpoint: str | Path, data_path: str | Path) -> Dict[str, Any]:
    """Точность чекпоинта на TSV-файле — одна структурированная запись."""
    params, vocab, meta = load_classifier_with_vocab(require_file(checkpoint, "classifier checkpoint"))
    examples = load_tsv(require_file(data_path, "data file"), label_map=dict(meta.get("labels") or {}))
    if any(ex.label >= params.C for ex in examples):
        raise ValueError(f"data file has labels outside the classifier's {params.C} classes")
    accuracy = evaluate(params, encode_labeled(examples, vocab))
    return {
        "record": "eval",
        "accuracy": accuracy,
        "n": len(examples),
        "checkpoint": str(checkpoint),
        "config_hash": meta.get("config_hash"),
    }


# ---------------------------------------------------------------------------
# perturb
# ---------------------------------------------------------------------------

def cmd_perturb(
    config: RunConfig,
    classifier_path: str | Path,
    mlm_path: str | Path,
    input_path: str | Path,
    out: str | Path,
) -> Dict[str, Any]:
    """Возмущение каждого предложения входного TSV; дамп по одной записи на строку."""
    params, vocab, _ = load_classifier_with_vocab(require_file(classifier_path, "classifier checkpoint"))
    mlm, mlm_vocab, _ = load_mlm_with_vocab(require_file(mlm_path, "MLM checkpoint"))
    if vocab.fingerprint() != mlm_vocab.fingerprint():
        raise CheckpointError("incompatible checkpoints: classifier and MLM vocabularies differ")
    out = require_path(out, "dump path (--out)")

    pconf = config.perturbation()
    pconf.validate()
    examples = load_tsv(require_file(input_path, "input file"))
    sentences = [encode(ex.text, vocab) for ex in examples]

    streams = SeedStreams(config["seed"])
    with timer.measure("perturb_corpus"):
        perts = perturb_batch(params, mlm, sentences, pconf,
                              streams.rng(STREAM_INDEX_SELECTION), streams.rng(STREAM_SAMPLING))

    config_hash = config.config_hash()
    kl_after: List[float] = []
    ppl_trace: List[List[float]] = []
    with JsonLinesSink(out, extra={"config_hash": config_hash}) as sink:
        for ex, x, pert in zip(examples, sentences, perts):
            before = kl_divergence(pert.target, predict(params, x))
            after = consistency_divergence(params, pert)
            trace = [pseudo_perplexity(mlm, s) for s in pert.history]
            kl_after.append(after)
            ppl_trace.append(trace)
            sink.write(pert.to_record(vocab, extra={
                "uid": ex.uid,
                "kl_before_after": [before, after],
                "perplexity_original": pseudo_perplexity(mlm, x),
                "perplexity_trace": trace,
                "backward_passes": pert.backward_passes,
                "mlm_forward_passes": pert.mlm_forward_passes,
            }))

    return {
        "record": "perturb",
        "n": len(perts),
        "strategy": pconf.strategy,
        "refine_steps": pconf.S,
        "mean_kl_after": float(np.mean(kl_after)) if kl_after else 0.0,
        "mean_perplexity_trace": np.mean(ppl_trace, axis=0).tolist() if ppl_trace else [],
        "rank_histogram": rank_histogram(perts, pconf.k),
        "out": str(out),
        "config_hash": config_hash,
    }
