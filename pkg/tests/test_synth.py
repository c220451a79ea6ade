import json
from dataclasses import replace

import numpy as np
import pytest

from blse.corpus import DEV, TEST, TRAIN, load_corpus
from blse.embed_store import load_text_embeddings
from blse.lexicon import load_lexicon
from blse.pipelines import run_mono
from blse.projections import solve_least_squares_map
from blse.synth import SynthConfig, generate, save_world, translate_to_source

SMALL = SynthConfig(vocab_size=400, dim=12, n_train=400, n_dev=200, n_test=200, n_unlabeled=50,
                    n_sentiment_words=20, seed=11)


@pytest.fixture(scope="module")
def small():
    return generate(SMALL)


def test_rotation_is_orthogonal(small):
    np.testing.assert_allclose(small.Q.T @ small.Q, np.eye(SMALL.dim), atol=1e-10)
    assert np.linalg.norm(small.w) == pytest.approx(1.0)


def test_target_is_rotated_source_plus_small_noise(small):
    resid = small.target.matrix - small.source.matrix @ small.Q
    # the residual is the injected N(0, sigma^2) noise
    assert resid.std() == pytest.approx(SMALL.sigma, rel=0.1)
    assert abs(resid.mean()) < 5 * SMALL.sigma / np.sqrt(resid.size)


def test_labels_follow_the_scoring_rule(small):
    for corpus in (small.source_corpus, small.target_corpus):
        for sent, label in zip(corpus.sentences, corpus.labels):
            assert small.label_of(sent) == label
    # binary rule: positive iff the sentence score exceeds the median threshold
    sent = small.source_corpus.sentences[0]
    ids = [int(t[1:]) for t in sent]
    score = small.w @ small.source.matrix[ids].mean(axis=0)
    assert small.source_corpus.labels[0] == int(score > small.thresholds[0])


@pytest.mark.parametrize("seed", range(4))
def test_binary_splits_are_balanced(seed):
    world = generate(replace(SMALL, seed=seed))
    for corpus in (world.source_corpus, world.target_corpus):
        for split in (TRAIN, DEV, TEST):
            labels = np.array(corpus.part(split).labels)
            assert abs(labels.mean() - 0.5) <= 0.10


def test_four_class_bins_are_skewed_towards_the_middle():
    world = generate(replace(SMALL, classes=4, n_train=2000))
    counts = np.bincount(world.source_corpus.part(TRAIN).labels, minlength=4) / 2000
    np.testing.assert_allclose(counts, [0.1, 0.4, 0.4, 0.1], atol=0.01)


def test_noise_free_world_recovers_the_rotation():
    world = generate(replace(SMALL, sigma=0.0, coverage=1.0))
    W = solve_least_squares_map(world.source, world.target, world.lexicon).W
    assert np.linalg.norm(W - world.Q) <= 1e-6


def test_translated_sentences_keep_their_label():
    world = generate(replace(SMALL, sigma=0.0))
    back = world.target.matrix @ world.Q.T   # target vectors mapped to the source space
    for sent, label in zip(world.target_corpus.sentences, world.target_corpus.labels):
        ids = [int(t[1:]) for t in sent]
        score = world.w @ back[ids].mean(axis=0)
        assert int(np.searchsorted(world.thresholds, score, side="right")) == label
        assert world.label_of(translate_to_source([sent])[0]) == label


def test_monolingual_skyline():
    world = generate(replace(SMALL, sigma=0.0, vocab_size=1000, dim=20, n_train=1000))
    c = world.source_corpus
    out = run_mono(world.source, c.part(TRAIN), c.part(DEV), c.part(TEST))
    assert out.report.macro_f1 >= 0.95


def test_deterministic(small):
    again = generate(SMALL)
    np.testing.assert_array_equal(again.source.matrix, small.source.matrix)
    np.testing.assert_array_equal(again.target.matrix, small.target.matrix)
    assert again.lexicon == small.lexicon
    assert again.source_corpus == small.source_corpus
    assert again.unlabeled_target == small.unlabeled_target
    other = generate(replace(SMALL, seed=12))
    assert not np.array_equal(other.source.matrix, small.source.matrix)


def test_lexicon_coverage(small):
    n = len(small.lexicon.pairs)
    assert n == round(SMALL.coverage * SMALL.vocab_size)
    assert all(s[1:] == t[1:] for s, t in small.lexicon.pairs)
    assert 0 < len(small.lexicon.dev_pairs) < n


def test_sentiment_word_sets(small):
    pos, neg = small.source_words()
    polarity = dict(zip(small.source.tokens, small.source.matrix @ small.w))
    assert len(pos) == len(neg) == SMALL.n_sentiment_words
    assert min(polarity[p] for p in pos) > max(polarity[n] for n in neg)
    tpos, _ = small.target_words()
    assert [t[1:] for t in tpos] == [p[1:] for p in pos]


@pytest.mark.parametrize("bad", [
    dict(classes=3), dict(vocab_size=7), dict(dim=1), dict(coverage=0.0), dict(coverage=1.5),
    dict(min_len=0), dict(min_len=5, max_len=4), dict(n_sentiment_words=300),
])
def test_infeasible_configs(bad):
    with pytest.raises(ValueError):
        generate(replace(SMALL, **bad))


def test_zero_coverage_allowed_without_lexicon_requirement():
    world = generate(replace(SMALL, coverage=0.0, require_lexicon=False))
    assert len(world.lexicon.pairs) == 0


def test_save_world_round_trip(small, tmp_path):
    files = save_world(small, tmp_path)
    S = load_text_embeddings(files["source.vec"])
    np.testing.assert_allclose(S.matrix, small.source.matrix, rtol=1e-6)
    assert load_lexicon(files["lexicon.tsv"]).pairs == small.lexicon.pairs
    dev = load_corpus(files["target_dev.tsv"], "binary")
    assert dev.labels == small.target_corpus.part(DEV).labels
    mt = load_corpus(files["target_dev.mt.tsv"], "binary")
    assert mt.labels == dev.labels and all(t.startswith("s") for s in mt.sentences for t in s)
    assert files["source_unlabeled.txt"].read_text(encoding="utf-8").count("\n") == SMALL.n_unlabeled
    meta = json.loads(files["world.json"].read_text(encoding="utf-8"))
    assert meta["config"]["seed"] == SMALL.seed and len(meta["thresholds"]) == 1
