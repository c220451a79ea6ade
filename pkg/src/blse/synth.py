"""Synthetic bilingual sentiment worlds.

Source word vectors are standard Gaussian; target vectors are a fixed random
rotation of them plus Gaussian noise. Word ``i`` of the source language is
``s{i}`` and its translation is ``t{i}``. Sentences are drawn from a
log-linear topic model (each sentence has a random context direction and
tokens are sampled with probability proportional to exp(sharpness *
<vector, context>)), so co-occurrence statistics reflect the embedding
geometry, which lets skip-gram training on generated text recover it.
A sentence's gold label comes from quantile bins of <w, mean of its
source-equivalent vectors> for a hidden unit direction w.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .corpus import DEV, TEST, TRAIN, LabeledCorpus, Scheme, save_corpus
from .embed_store import EmbeddingStore, save_text_embeddings
from .lexicon import BilingualLexicon, save_lexicon, split_dev
from .projections import write_sentences


@dataclass
class SynthConfig:
    vocab_size: int = 2000
    dim: int = 50
    n_train: int = 2000
    n_dev: int = 400
    n_test: int = 400
    min_len: int = 5
    max_len: int = 15
    classes: int = 2
    sigma: float = 0.01
    coverage: float = 0.3
    seed: int = 0
    sharpness: float = 1.5
    mood: float = 0.5
    n_unlabeled: int = 10000
    lexicon_dev_fraction: float = 0.1
    n_sentiment_words: int = 100
    require_lexicon: bool = True


@dataclass
class SynthWorld:
    config: SynthConfig
    source: EmbeddingStore
    target: EmbeddingStore
    lexicon: BilingualLexicon
    source_corpus: LabeledCorpus
    target_corpus: LabeledCorpus
    Q: np.ndarray
    w: np.ndarray
    thresholds: np.ndarray
    unlabeled_source: list[list[str]]
    unlabeled_target: list[list[str]]
    positive_ids: np.ndarray
    negative_ids: np.ndarray

    @property
    def sigma(self) -> float:
        return self.config.sigma

    @property
    def seed(self) -> int:
        return self.config.seed

    def source_words(self) -> tuple[list[str], list[str]]:
        return [f"s{i}" for i in self.positive_ids], [f"s{i}" for i in self.negative_ids]

    def target_words(self) -> tuple[list[str], list[str]]:
        return [f"t{i}" for i in self.positive_ids], [f"t{i}" for i in self.negative_ids]

    def label_of(self, tokens) -> int:
        """Gold label from the source-equivalent vectors of any-language tokens."""
        ids = [int(t[1:]) for t in tokens]
        score = self.w @ self.source.matrix[ids].mean(axis=0)
        return int(np.searchsorted(self.thresholds, score, side="right"))


def translate_to_source(sentences, _world: SynthWorld | None = None) -> list[list[str]]:
    """Perfect token-wise translation of target sentences (``t{i}`` -> ``s{i}``)."""
    return [["s" + tok[1:] for tok in sent] for sent in sentences]


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def _sample_sentences(S: np.ndarray, w: np.ndarray, n: int, cfg: SynthConfig,
                      rng: np.random.Generator) -> list[np.ndarray]:
    d = S.shape[1]
    lengths = rng.integers(cfg.min_len, cfg.max_len + 1, size=n)
    out = []
    for length in lengths:
        ctx = rng.standard_normal(d) / np.sqrt(d) + cfg.mood * rng.standard_normal() * w
        logits = cfg.sharpness * (S @ ctx)
        p = np.exp(logits - logits.max())
        cdf = np.cumsum(p)
        u = rng.random(length) * cdf[-1]
        out.append(np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1))
    return out


def _quantile_thresholds(scores: np.ndarray, classes: int) -> np.ndarray:
    qs = (0.5,) if classes == 2 else (0.1, 0.5, 0.9)
    return np.quantile(scores, qs)


def generate(config: SynthConfig | None = None) -> SynthWorld:
    cfg = config or SynthConfig()
    if cfg.classes not in (2, 4):
        raise ValueError("classes must be 2 or 4")
    if cfg.vocab_size < 4 * cfg.classes:
        raise ValueError("vocab_size must be at least 4 * classes")
    if cfg.dim < 2:
        raise ValueError("dim must be at least 2")
    if not 0 <= cfg.coverage <= 1:
        raise ValueError("coverage must lie in [0, 1]")
    n_pairs = int(round(cfg.coverage * cfg.vocab_size))
    if n_pairs < 2 and cfg.require_lexicon:
        raise ValueError("lexicon coverage leaves fewer than two translation pairs")
    if cfg.min_len < 1 or cfg.max_len < cfg.min_len:
        raise ValueError("invalid sentence length range")
    if 2 * cfg.n_sentiment_words > cfg.vocab_size:
        raise ValueError("not enough words for the sentiment word sets")

    rng = np.random.default_rng(cfg.seed)
    V, d = cfg.vocab_size, cfg.dim
    S = rng.standard_normal((V, d))
    Q = random_rotation(d, rng)
    w = rng.standard_normal(d)
    w /= np.linalg.norm(w)
    T = S @ Q + cfg.sigma * rng.standard_normal((V, d))

    sizes = {TRAIN: cfg.n_train, DEV: cfg.n_dev, TEST: cfg.n_test}
    src_ids = {k: _sample_sentences(S, w, n, cfg, rng) for k, n in sizes.items()}
    tgt_ids = {k: _sample_sentences(S, w, n, cfg, rng) for k, n in sizes.items()}

    def scores(sents):
        return np.array([w @ S[ids].mean(axis=0) for ids in sents])

    thresholds = _quantile_thresholds(scores(src_ids[TRAIN]), cfg.classes)
    scheme = Scheme.BINARY if cfg.classes == 2 else Scheme.FOURCLASS

    def corpus(ids_by_split, prefix):
        sents, labels, splits = [], [], []
        for split in (TRAIN, DEV, TEST):
            ids = ids_by_split[split]
            labels.extend(np.searchsorted(thresholds, scores(ids), side="right").tolist())
            sents.extend(tuple(f"{prefix}{i}" for i in s) for s in ids)
            splits.extend([split] * len(ids))
        return LabeledCorpus(tuple(sents), tuple(labels), scheme, tuple(splits))

    covered = np.sort(rng.permutation(V)[:n_pairs])
    pairs = tuple((f"s{i}", f"t{i}") for i in covered)
    if len(pairs) >= 2:
        lexicon = split_dev(BilingualLexicon(pairs), cfg.lexicon_dev_fraction, cfg.seed)
    else:
        lexicon = BilingualLexicon(pairs)

    unl_src = [[f"s{i}" for i in s] for s in _sample_sentences(S, w, cfg.n_unlabeled, cfg, rng)]
    unl_tgt = [[f"t{i}" for i in s] for s in _sample_sentences(S, w, cfg.n_unlabeled, cfg, rng)]

    polarity = S @ w
    order = np.argsort(polarity, kind="stable")
    k = cfg.n_sentiment_words
    return SynthWorld(
        config=cfg,
        source=EmbeddingStore(tuple(f"s{i}" for i in range(V)), S, "src"),
        target=EmbeddingStore(tuple(f"t{i}" for i in range(V)), T, "trg"),
        lexicon=lexicon,
        source_corpus=corpus(src_ids, "s"),
        target_corpus=corpus(tgt_ids, "t"),
        Q=Q, w=w, thresholds=thresholds,
        unlabeled_source=unl_src, unlabeled_target=unl_tgt,
        positive_ids=order[::-1][:k].copy(), negative_ids=order[:k].copy(),
    )


def write_word_sets(path: Path, positive, negative) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for w in positive:
            f.write(f"pos\t{w}\n")
        for w in negative:
            f.write(f"neg\t{w}\n")


def save_world(world: SynthWorld, out_dir: str | Path) -> dict[str, Path]:
    """Persist a world in the standard embedding/lexicon/corpus formats."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files: dict[str, Path] = {}

    def put(name: str) -> Path:
        files[name] = out / name
        return files[name]

    save_text_embeddings(world.source, put("source.vec"))
    save_text_embeddings(world.target, put("target.vec"))
    save_lexicon(world.lexicon, put("lexicon.tsv"))
    for lang, corpus in (("source", world.source_corpus), ("target", world.target_corpus)):
        for split in (TRAIN, DEV, TEST):
            save_corpus(corpus.part(split), put(f"{lang}_{split}.tsv"))
    for split in (TRAIN, DEV, TEST):
        part = world.target_corpus.part(split)
        mt = LabeledCorpus(tuple(tuple(s) for s in translate_to_source(part.sentences)),
                           part.labels, part.scheme)
        save_corpus(mt, put(f"target_{split}.mt.tsv"))
    write_sentences(world.unlabeled_source, put("source_unlabeled.txt"))
    write_sentences(world.unlabeled_target, put("target_unlabeled.txt"))
    write_word_sets(put("source_sentiment_words.tsv"), *world.source_words())
    write_word_sets(put("target_sentiment_words.tsv"), *world.target_words())
    params = {"config": asdict(world.config), "thresholds": world.thresholds.tolist()}
    put("world.json").write_text(json.dumps(params, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return files
