from dataclasses import replace

import numpy as np
import pytest

from conftest import random_sentence
from models import (
    CheckpointError,
    init_mlm,
    load_mlm,
    log_probs_all,
    log_probs_at,
    predict_position,
    pseudo_perplexity,
    save_mlm,
    token_log_probs,
    top_k_candidates,
    top_k_from_scores,
    train_mlm,
)
from models.mlm import _batch_loss_and_grads, context_ids, corpus_loss
from numerics import is_distribution, numeric_gradient
from vocab import PAD_ID, Sentence


def test_context_excludes_center_and_pads_outside():
    ctx = context_ids(np.array([2, 3, 4]), 1)
    np.testing.assert_array_equal(ctx, [[PAD_ID, 3], [2, 4], [3, PAD_ID]])


def test_prediction_does_not_see_the_center_token(mlm):
    s = Sentence.of([5, 6, 7, 8, 9])
    t = s.replace([2], [30])
    np.testing.assert_array_equal(log_probs_at(mlm, s, [2]), log_probs_at(mlm, t, [2]))


def test_log_probs_are_normalized_and_consistent(mlm, sentences):
    s = sentences[0]
    lp = log_probs_all(mlm, s)
    assert lp.shape == (s.M, mlm.vocab_size)
    np.testing.assert_allclose(np.exp(lp).sum(axis=1), 1.0)
    np.testing.assert_allclose(log_probs_at(mlm, s, [1, 3]), lp[[1, 3]])
    assert is_distribution(predict_position(mlm, s, 0))
    with pytest.raises(ValueError):
        predict_position(mlm, s, s.M)


def test_top_k_excludes_original_and_pad():
    scores = np.array([9.0, 5.0, 7.0, 1.0, 7.0, 3.0])
    cands = top_k_from_scores(scores, 3, exclude=2, position=4)
    assert cands.position == 4
    assert cands.token_ids.tolist() == [4, 1, 5]
    np.testing.assert_array_equal(cands.log_probs, [7.0, 5.0, 3.0])
    assert PAD_ID not in cands.token_ids


def test_top_k_ties_go_to_lower_id():
    cands = top_k_from_scores(np.zeros(8), 4, exclude=3, position=0)
    assert cands.token_ids.tolist() == [1, 2, 4, 5]


@pytest.mark.parametrize("k", [0, 5, 6, 7])
def test_top_k_rejects_bad_k(k):
    with pytest.raises(ValueError):
        top_k_from_scores(np.zeros(6), k, exclude=1, position=0)


def test_top_k_largest_k_returns_every_candidate():
    cands = top_k_from_scores(np.arange(6.0), 4, exclude=1, position=0)
    assert len(cands) == 4
    assert sorted(cands.token_ids.tolist()) == [2, 3, 4, 5]


def test_candidate_probs_renormalize():
    cands = top_k_from_scores(np.log(np.array([0.1, 0.4, 0.2, 0.2, 0.1])), 2, exclude=3, position=0)
    np.testing.assert_allclose(cands.probs(), [2 / 3, 1 / 3])


def test_top_k_candidates_size(mlm, sentences):
    s = sentences[1]
    cands = top_k_candidates(mlm, s, 2, 10, exclude=int(s.ids[2]))
    assert len(cands) == 10
    assert int(s.ids[2]) not in cands.token_ids


def test_pseudo_perplexity(mlm, sentences):
    s = sentences[2]
    value = pseudo_perplexity(mlm, s)
    assert value >= 1.0
    assert value == pytest.approx(np.exp(-token_log_probs(mlm, s).mean()))


def _flat_mlm(vocab_size, w=2):
    mlm = init_mlm(vocab_size, w=w, d_m=4, h_m=5, seed=0)
    mlm.W_o[:] = 0.0
    mlm.b_o[:] = 0.0
    return mlm


def test_uniform_mlm_perplexity_is_vocabulary_size(rng):
    mlm = _flat_mlm(100)
    for length in (1, 5, 12):
        assert pseudo_perplexity(mlm, random_sentence(rng, 100, length)) == pytest.approx(100.0)


def test_confident_correct_mlm_perplexity_is_one():
    mlm = _flat_mlm(30)
    mlm.b_o[7] = 50.0
    assert pseudo_perplexity(mlm, Sentence.of([7] * 9)) == pytest.approx(1.0, abs=1e-9)
    assert pseudo_perplexity(mlm, Sentence.of([7, 7, 8, 7])) > 1.0


def test_batch_gradients_match_finite_differences(rng):
    mlm = init_mlm(12, w=2, d_m=3, h_m=4, seed=5)
    corpus = [random_sentence(rng, 12, 6) for _ in range(3)]
    ctx = np.concatenate([context_ids(s.ids, mlm.w) for s in corpus])
    targets = np.concatenate([s.ids for s in corpus])
    _, grads = _batch_loss_and_grads(mlm, ctx, targets)

    for name in ("E_m", "W_c", "b_c", "W_o", "b_o"):
        def f(value, name=name):
            return _batch_loss_and_grads(replace(mlm, **{name: value}), ctx, targets)[0]

        np.testing.assert_allclose(grads[name], numeric_gradient(f, getattr(mlm, name)),
                                   rtol=1e-5, atol=1e-9, err_msg=f"gradient of {name}")


def test_training_lowers_loss_and_freezes(rng):
    corpus = [Sentence.of([2, 3, 4, 5, 2, 3, 4, 5]) for _ in range(20)]
    start = corpus_loss(init_mlm(8, w=1, d_m=4, h_m=8, seed=1), corpus)
    mlm = train_mlm(corpus, 8, epochs=30, lr=5e-2, seed=1, w=1, d_m=4, h_m=8, batch_size=32)
    assert mlm.train_losses[-1] < start
    assert len(mlm.train_losses) == 30
    for arr in mlm.arrays().values():
        assert not arr.flags.writeable

    again = train_mlm(corpus, 8, epochs=30, lr=5e-2, seed=1, w=1, d_m=4, h_m=8, batch_size=32)
    assert again.fingerprint() == mlm.fingerprint()


def _chain_corpus(rng, n, length=10, V=12, stay=0.9):
    """Токены 2..V−1 по циклу: за t обычно идёт t+1, иначе случайный токен."""
    span = V - 2
    corpus = []
    for _ in range(n):
        ids = [int(rng.integers(span))]
        for _ in range(length - 1):
            ids.append((ids[-1] + 1) % span if rng.random() < stay else int(rng.integers(span)))
        corpus.append(Sentence.of([2 + i for i in ids]))
    return corpus


def test_mlm_on_chain_corpus_beats_unigram_baseline():
    rng = np.random.default_rng(21)
    train, held_out = _chain_corpus(rng, 200), _chain_corpus(rng, 50)
    mlm = train_mlm(train, 12, epochs=15, lr=1e-2, seed=0, w=1, d_m=8, h_m=16, batch_size=64)

    targets = np.concatenate([s.ids for s in held_out])
    guesses = np.concatenate([log_probs_all(mlm, s).argmax(axis=1) for s in held_out])
    mlm_accuracy = float(np.mean(guesses == targets))
    most_common = np.bincount(np.concatenate([s.ids for s in train])).argmax()
    unigram_accuracy = float(np.mean(targets == most_common))
    assert mlm_accuracy > unigram_accuracy + 0.3


def test_training_rejects_bad_corpus():
    with pytest.raises(ValueError):
        train_mlm([], 8)
    with pytest.raises(ValueError):
        train_mlm([Sentence.of([2, 9])], 8, epochs=1)


def test_checkpoint_keeps_weights_and_stays_frozen(tmp_path, mlm):
    path = tmp_path / "mlm.bin"
    save_mlm(mlm, path, extra={"note": "x"})
    loaded, meta = load_mlm(path)
    assert meta["note"] == "x"
    assert meta["w"] == mlm.w
    assert loaded.fingerprint() == mlm.fingerprint()
    assert not loaded.E_m.flags.writeable


def test_loading_classifier_as_mlm_fails(tmp_path, classifier):
    from models import save_classifier

    path = tmp_path / "clf.bin"
    save_classifier(classifier, path)
    with pytest.raises(CheckpointError):
        load_mlm(path)
