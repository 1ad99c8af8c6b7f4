import math

import numpy as np
import pytest

import training.loop as loop_module
from models import init_classifier, load_classifier, one_hot, param_gradients, predict
from numerics import grad_check, kl_divergence, softmax
from perturb import PerturbationConfig, va_tr
from storage import JsonLinesSink, read_records
from training import (
    BatchCycler,
    BatchLoss,
    MetricsLog,
    MetricsRecord,
    TrainingConfig,
    TrainingDivergedError,
    consistency_batch_loss,
    consistency_loss,
    evaluate,
    supervised_loss_with_tsa,
    train,
    tsa_threshold,
)
from vocab import Sentence


# ---------------------------------------------------------------------------
# TSA
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("schedule", ["linear", "log", "exp"])
def test_tsa_endpoints(schedule):
    start = tsa_threshold(0, 100, 4, schedule)
    end = tsa_threshold(100, 100, 4, schedule)
    assert end == pytest.approx(1.0)
    assert 0.25 <= start < end
    if schedule != "exp":
        assert start == pytest.approx(0.25)


def test_tsa_linear_halfway():
    assert tsa_threshold(50, 100, 4) == pytest.approx(0.625)


def test_tsa_schedules_are_monotone():
    for schedule in ("linear", "log", "exp"):
        values = [tsa_threshold(t, 40, 3, schedule) for t in range(41)]
        assert all(a <= b for a, b in zip(values, values[1:]))
    assert tsa_threshold(10, 100, 2, "log") > tsa_threshold(10, 100, 2, "linear") > tsa_threshold(10, 100, 2, "exp")


@pytest.mark.parametrize("args", [(0, 10, 1, "linear"), (11, 10, 3, "linear"), (-1, 10, 3, "linear"),
                                  (5, 10, 3, "cosine")])
def test_tsa_rejects_invalid(args):
    with pytest.raises(ValueError):
        tsa_threshold(*args)


def test_tsa_masks_confident_examples(classifier, sentences):
    batch = [(s, i % classifier.C) for i, s in enumerate(sentences[:6])]
    p_true = np.array([predict(classifier, s)[y] for s, y in batch])
    eta = float(np.median(p_true))
    kept = [(s, y) for (s, y), p in zip(batch, p_true) if p <= eta]

    result = supervised_loss_with_tsa(classifier, batch, eta)
    expected = np.mean([-math.log(predict(classifier, s)[y]) for s, y in kept])
    assert result.loss == pytest.approx(expected)
    assert result.kept_fraction == pytest.approx(len(kept) / len(batch))

    reference = {n: np.zeros_like(a) for n, a in classifier.arrays().items()}
    for s, y in kept:
        for name, g in param_gradients(classifier, s, one_hot(y, classifier.C)).items():
            reference[name] += g / len(kept)
    for name in reference:
        np.testing.assert_allclose(result.grads[name], reference[name], atol=1e-12)


def test_tsa_dropping_everything_contributes_nothing(classifier, sentences):
    result = supervised_loss_with_tsa(classifier, [(sentences[0], 0), (sentences[1], 1)], eta=0.0)
    assert result.loss == 0.0
    assert result.kept_fraction == 0.0
    assert all(np.all(g == 0.0) for g in result.grads.values())
    with pytest.raises(ValueError):
        supervised_loss_with_tsa(classifier, [], eta=1.0)


# ---------------------------------------------------------------------------
# Согласованность
# ---------------------------------------------------------------------------

def test_consistency_loss_gradient_wrt_logits():
    q = np.array([0.7, 0.2, 0.1])
    z = np.array([0.3, -0.2, 0.5])
    loss, grad = consistency_loss(q, softmax(z))
    assert loss == pytest.approx(kl_divergence(q, softmax(z)))
    assert grad_check(lambda v: kl_divergence(q, softmax(v)), z, grad) < 1e-5
    with pytest.raises(ValueError):
        consistency_loss(q, np.array([0.5, 0.5]))


def test_consistency_gradient_flows_only_through_perturbed_input(classifier, mlm, sentences):
    pert = va_tr(classifier, mlm, sentences[0], [0, 1], PerturbationConfig(S=0))
    result = consistency_batch_loss(classifier, [pert])
    assert result.loss == pytest.approx(kl_divergence(pert.target, predict(classifier, pert.perturbed)))
    expected = param_gradients(classifier, pert.perturbed, pert.target)
    for name, g in expected.items():
        np.testing.assert_allclose(result.grads[name], g, atol=1e-12)

    empty = consistency_batch_loss(classifier, [])
    assert empty.loss == 0.0


# ---------------------------------------------------------------------------
# Батчи и журнал
# ---------------------------------------------------------------------------

def test_batch_cycler_covers_each_epoch(rng):
    cycler = BatchCycler(5, 2, rng)
    drawn = np.concatenate([cycler.next() for _ in range(5)])
    assert sorted(drawn[:5].tolist()) == [0, 1, 2, 3, 4]
    assert sorted(drawn[5:10].tolist()) == [0, 1, 2, 3, 4]
    assert BatchCycler(3, 7, rng).next().size == 7
    with pytest.raises(ValueError):
        BatchCycler(0, 2, rng)


def _record(step, acc):
    return MetricsRecord(step=step, ce_loss=0.1, consistency_loss=0.0, tsa_threshold=0.5, tsa_kept_fraction=1.0,
                         dev_accuracy=acc, best_dev_accuracy=acc, mean_kl_adv=None, mean_kl_uniform_probe=None,
                         chosen_rank_histogram=[])


def test_metrics_log_validation():
    log = MetricsLog()
    log.append(_record(10, 0.5))
    log.append(_record(20, 0.7))
    assert log.best_dev_accuracy == 0.7
    assert log.to_records()[0]["record"] == "eval"
    with pytest.raises(ValueError):
        log.append(_record(20, 0.8))
    with pytest.raises(ValueError):
        log.append(_record(30, 1.5))


def test_training_config_errors():
    assert TrainingConfig().errors() == []
    errors = TrainingConfig(lr=0.0, total_steps=0, tsa_schedule="x", seed=-1,
                            perturbation=PerturbationConfig(k=0)).errors()
    assert "train.lr must be positive" in errors
    assert "seed must be non-negative" in errors
    assert "perturb.k must be >= 1" in errors
    assert any(e.startswith("tsa.schedule") for e in errors)


def test_evaluate(classifier, sentences):
    dataset = [(s, int(np.argmax(predict(classifier, s)))) for s in sentences]
    assert evaluate(classifier, dataset) == 1.0
    with pytest.raises(ValueError):
        evaluate(classifier, [])


@pytest.mark.parametrize("C", [2, 4])
def test_evaluate_constant_model_scores_one_over_c(rng, C):
    params = init_classifier(20, d=6, d_a=3, h=5, C=C, seed=2)
    params.W_2[:] = 0.0
    params.b_2[:] = 0.0
    params.b_2[0] = 5.0
    dataset = [(Sentence.of(rng.integers(2, 20, size=6).tolist()), label)
               for label in range(C) for _ in range(25)]
    assert evaluate(params, dataset) == pytest.approx(1 / C)


# ---------------------------------------------------------------------------
# Цикл обучения
# ---------------------------------------------------------------------------

SMALL_RUN = TrainingConfig(lr=1e-2, total_steps=6, labeled_batch=4, unlabeled_batch=4, eval_every=3,
                           probe_size=4, perturbation=PerturbationConfig(k=5, S=1), seed=3)


def _params(vocab_size):
    return init_classifier(vocab_size, d=8, d_a=4, h=8, C=3, seed=1)


def test_train_is_reproducible(tiny_task, tiny_vocab, tiny_mlm):
    labeled, unlabeled, dev = tiny_task
    _, first = train(SMALL_RUN, labeled, unlabeled, dev, params=_params(len(tiny_vocab)), mlm=tiny_mlm)
    _, second = train(SMALL_RUN, labeled, unlabeled, dev, params=_params(len(tiny_vocab)), mlm=tiny_mlm)
    assert first.to_records() == second.to_records()
    assert [r.step for r in first.records] == [3, 6]
    record = first.records[-1]
    assert record.consistency_loss > 0.0
    assert record.mean_kl_adv is not None and record.mean_kl_uniform_probe is not None
    assert sum(record.chosen_rank_histogram) > 0
    assert record.tsa_threshold == pytest.approx(tsa_threshold(5, 6, 3))


def test_train_writes_metrics_and_best_checkpoint(tmp_path, tiny_task, tiny_vocab, tiny_mlm):
    labeled, unlabeled, dev = tiny_task
    metrics = tmp_path / "metrics.jsonl"
    ckpt = tmp_path / "best.bin"
    with JsonLinesSink(metrics, extra={"config_hash": "h"}) as sink:
        best, log = train(SMALL_RUN, labeled, unlabeled, dev, params=_params(len(tiny_vocab)), mlm=tiny_mlm,
                          sink=sink, header={"strategy": "vat_d"}, checkpoint_path=ckpt,
                          checkpoint_extra={"config_hash": "h"})
    records = read_records(metrics)
    assert records[0]["record"] == "header"
    assert records[0]["strategy"] == "vat_d"
    assert [r["step"] for r in records[1:]] == [3, 6]
    assert all(r["config_hash"] == "h" for r in records)

    loaded, meta = load_classifier(ckpt)
    assert meta["config_hash"] == "h"
    assert meta["dev_accuracy"] == log.best_dev_accuracy
    assert evaluate(loaded, dev) == pytest.approx(log.best_dev_accuracy)
    assert evaluate(best, dev) == pytest.approx(log.best_dev_accuracy)


def test_ce_only_does_not_need_mlm(tiny_task, tiny_vocab):
    labeled, unlabeled, dev = tiny_task
    config = TrainingConfig(total_steps=3, eval_every=3, labeled_batch=4, consistency=False)
    _, log = train(config, labeled, unlabeled, dev, params=_params(len(tiny_vocab)))
    record = log.records[-1]
    assert record.consistency_loss == 0.0
    assert record.mean_kl_adv is None


def test_train_validates_inputs(tiny_task, tiny_vocab, tiny_mlm):
    labeled, unlabeled, dev = tiny_task
    params = _params(len(tiny_vocab))
    with pytest.raises(ValueError, match="MLM checkpoint required"):
        train(SMALL_RUN, labeled, unlabeled, dev, params=params)
    with pytest.raises(ValueError):
        train(SMALL_RUN, labeled, unlabeled, dev, params=_params(len(tiny_vocab) + 1), mlm=tiny_mlm)
    with pytest.raises(ValueError):
        train(SMALL_RUN, [], unlabeled, dev, params=params, mlm=tiny_mlm)


def test_consistency_falls_back_to_labeled_inputs(tiny_task, tiny_vocab, tiny_mlm):
    labeled, _, dev = tiny_task
    _, log = train(SMALL_RUN, labeled, [], dev, params=_params(len(tiny_vocab)), mlm=tiny_mlm)
    assert log.records[-1].consistency_loss > 0.0


def test_non_finite_loss_stops_training(tiny_task, tiny_vocab, monkeypatch):
    labeled, unlabeled, dev = tiny_task

    def broken(params, batch, eta):
        grads = {n: np.zeros_like(a) for n, a in params.arrays().items()}
        return BatchLoss(loss=float("nan"), grads=grads)

    monkeypatch.setattr(loop_module, "supervised_loss_with_tsa", broken)
    config = TrainingConfig(total_steps=3, eval_every=3, consistency=False)
    with pytest.raises(TrainingDivergedError, match="step 1"):
        train(config, labeled, unlabeled, dev, params=_params(len(tiny_vocab)))
