"""End-to-end pipelines: BLSE, the SVM baselines, the forest ensemble and the
analysis experiments. The CLI is a thin layer over these functions."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .classifiers import C_GRID, ForestConfig, RandomForest, forest_train, tune_svm
from .corpus import DEV, TEST, TRAIN, LabeledCorpus
from .embed_store import EmbeddingStore, SgnsConfig, average_many, train_sgns
from .errors import FormatError
from .evaluation import EvalReport, cosine_trace, score
from .lexicon import BilingualLexicon, covered_pairs
from .model import BlseModel, EpochTrace, TrainConfig, predict_corpus, train
from .projections import make_pseudo_bilingual, project_source, solve_least_squares_map

logger = logging.getLogger(__name__)

SWEEP_SIZES = (0, 100, 300, 600, 1000, 3000, 6000, 10000, 20000)


def with_splits(train_part: LabeledCorpus, dev_part: LabeledCorpus | None = None,
                test_part: LabeledCorpus | None = None) -> LabeledCorpus:
    """One split-tagged corpus from separate train/dev/test corpora."""
    parts = [(TRAIN, train_part), (DEV, dev_part), (TEST, test_part)]
    sents, labels, splits = [], [], []
    for tag, part in parts:
        if part is None:
            continue
        if part.scheme != train_part.scheme:
            raise ValueError("corpora use different label schemes")
        sents.extend(part.sentences)
        labels.extend(part.labels)
        splits.extend([tag] * len(part))
    return LabeledCorpus(tuple(sents), tuple(labels), train_part.scheme, tuple(splits))


@dataclass
class SystemOutput:
    """Dev/test class probabilities and test report of one system."""

    name: str
    dev_probs: np.ndarray | None
    test_probs: np.ndarray
    test_pred: np.ndarray
    report: EvalReport
    info: dict = field(default_factory=dict)


def write_predictions(path: str | Path, probs: np.ndarray, pred: np.ndarray | None = None) -> None:
    """CSV with one row per sentence: index, predicted label, class probabilities."""
    pred = probs.argmax(axis=1) if pred is None else pred
    with Path(path).open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["index", "label"] + [f"prob_{j}" for j in range(probs.shape[1])])
        for i, (y, row) in enumerate(zip(pred, probs)):
            w.writerow([i, int(y)] + [repr(float(p)) for p in row])


def read_predictions(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    """(labels, probabilities) from a prediction CSV."""
    with Path(path).open(encoding="utf-8", newline="") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0][:2] != ["index", "label"]:
        raise FormatError(f"{path}: not a prediction file (missing index,label header)")
    body = rows[1:]
    c = len(rows[0]) - 2
    labels = np.array([int(r[1]) for r in body], dtype=np.int64)
    probs = np.array([[float(x) for x in r[2:]] for r in body], dtype=float).reshape(len(body), c)
    return labels, probs


# ---------------------------------------------------------------------------
# SVM pipelines


def svm_pipeline(name: str, train_store: EmbeddingStore, train_corpus: LabeledCorpus,
                 eval_store: EmbeddingStore, dev_corpus: LabeledCorpus, test_corpus: LabeledCorpus,
                 seed: int = 0, grid: Sequence[float] = C_GRID) -> SystemOutput:
    """Averaged-embedding linear SVM; c is tuned on ``dev_corpus``."""
    c = train_corpus.n_classes
    X_tr, _ = average_many(train_store, train_corpus.sentences)
    X_dev, _ = average_many(eval_store, dev_corpus.sentences)
    X_te, _ = average_many(eval_store, test_corpus.sentences)
    model, best_c, results = tune_svm(X_tr, np.asarray(train_corpus.labels), X_dev,
                                      np.asarray(dev_corpus.labels), c, seed=seed, grid=grid)
    pred = model.predict(X_te)
    report = score(test_corpus.labels, pred, c)
    logger.info("%s: c=%g test macro F1 %.4f", name, best_c, report.macro_f1)
    return SystemOutput(name, model.predict_proba(X_dev), model.predict_proba(X_te), pred, report,
                        {"svm": model, "c": best_c, "tuning": results})


def run_mono(T: EmbeddingStore, target_train: LabeledCorpus, target_dev: LabeledCorpus,
             target_test: LabeledCorpus, seed: int = 0) -> SystemOutput:
    """Upper bound: train on target-language labels with target embeddings."""
    return svm_pipeline("mono", T, target_train, T, target_dev, target_test, seed)


def run_mt(S: EmbeddingStore, source_train: LabeledCorpus, mt_dev: LabeledCorpus,
           mt_test: LabeledCorpus, seed: int = 0) -> SystemOutput:
    """Source-trained classifier applied to target text translated into the source language."""
    return svm_pipeline("mt", S, source_train, S, mt_dev, mt_test, seed)


def run_artetxe(S: EmbeddingStore, T: EmbeddingStore, lexicon: BilingualLexicon,
                source_train: LabeledCorpus, target_dev: LabeledCorpus, target_test: LabeledCorpus,
                seed: int = 0, orthogonal: bool = False) -> SystemOutput:
    """Map the source space onto the target space, train there, test on target."""
    W = solve_least_squares_map(S, T, lexicon, orthogonal=orthogonal)
    out = svm_pipeline("artetxe", project_source(W, S), source_train, T, target_dev, target_test, seed)
    out.info["map"] = W
    return out


def run_barista(source_text: Sequence[Sequence[str]], target_text: Sequence[Sequence[str]],
                lexicon: BilingualLexicon, source_train: LabeledCorpus, target_dev: LabeledCorpus,
                target_test: LabeledCorpus, sgns: SgnsConfig | None = None,
                seed: int = 0) -> SystemOutput:
    """Joint skip-gram vectors from a pseudo-bilingual corpus, then an SVM."""
    pseudo = make_pseudo_bilingual(source_text, target_text, lexicon, seed=seed)
    cfg = sgns or SgnsConfig(seed=seed)
    store = train_sgns(pseudo, cfg, language_tag="joint")
    out = svm_pipeline("barista", store, source_train, store, target_dev, target_test, seed)
    out.info.update(pseudo_corpus=pseudo, embeddings=store)
    return out


# ---------------------------------------------------------------------------
# BLSE


def run_blse(S: EmbeddingStore, T: EmbeddingStore, lexicon: BilingualLexicon,
             source_corpus: LabeledCorpus, target_dev: LabeledCorpus | None,
             target_test: LabeledCorpus, config: TrainConfig | None = None) -> SystemOutput:
    cfg = config or TrainConfig()
    model, trace = train(S, T, lexicon, source_corpus, cfg, target_dev=target_dev)
    return blse_output(model, trace, T, target_dev, target_test)


def blse_output(model: BlseModel, trace: EpochTrace, T: EmbeddingStore,
                target_dev: LabeledCorpus | None, target_test: LabeledCorpus) -> SystemOutput:
    dev_probs = None
    if target_dev is not None and len(target_dev):
        dev_probs, _ = predict_corpus(model, T, target_dev.sentences, "target")
    probs, pred = predict_corpus(model, T, target_test.sentences, "target")
    report = score(target_test.labels, pred, model.c)
    return SystemOutput("blse", dev_probs, probs, pred, report, {"model": model, "trace": trace})


@dataclass
class GridPoint:
    alpha: float
    epochs: int
    batch_size: int
    model: BlseModel
    trace: EpochTrace

    @property
    def selection_f1(self) -> float:
        """Best-epoch dev F1 used for selection (target if monitored, else source)."""
        rec = self.trace.records[self.trace.best_epoch - 1]
        return rec.tgt_dev_f1 if not np.isnan(rec.tgt_dev_f1) else rec.src_dev_f1

    @property
    def tag(self) -> str:
        return f"a{self.alpha:g}_e{self.epochs}_b{self.batch_size}"


def blse_grid(S, T, lexicon, source_corpus, target_dev, base: TrainConfig,
              alphas: Sequence[float], epochs: Sequence[int],
              batch_sizes: Sequence[int]) -> tuple[list[GridPoint], GridPoint]:
    """Train every (alpha, epochs, batch) combination; the best point has the
    highest selection F1, ties resolved by grid order."""
    points = []
    for a in alphas:
        for e in epochs:
            for b in batch_sizes:
                cfg = replace(base, alpha=a, epochs=e, batch_size=b)
                model, trace = train(S, T, lexicon, source_corpus, cfg, target_dev=target_dev)
                points.append(GridPoint(a, e, b, model, trace))
    best = points[int(np.argmax([p.selection_f1 for p in points]))]
    return points, best


# ---------------------------------------------------------------------------
# ensemble


def ensemble_features(*probs: np.ndarray) -> np.ndarray:
    """Concatenate per-system class-probability matrices."""
    if not probs:
        raise ValueError("need at least one system")
    n = len(probs[0])
    if any(len(p) != n for p in probs):
        raise ValueError("systems disagree on the number of sentences")
    return np.hstack(probs)


@dataclass
class EnsembleResult:
    forest: RandomForest
    pred: np.ndarray
    report: EvalReport
    chosen: str            # "forest", or "system_<i>" when the guard fell back
    forest_oob: float
    system_dev_acc: list[float]


def run_ensemble(train_probs: Sequence[np.ndarray], train_gold: Sequence[int],
                 test_probs: Sequence[np.ndarray], test_gold: Sequence[int], n_classes: int,
                 config: ForestConfig | None = None, guard: bool = True) -> EnsembleResult:
    """Random forest over stacked system probabilities.

    The forest is fit on held-out (dev) predictions so that it learns how far
    to trust each system, then applied to the test predictions. With
    ``guard`` on, the forest is not used when only one distinct system is
    given (duplicates add no information) or when its out-of-bag accuracy on
    the dev predictions is below the best single system's dev accuracy; the
    test predictions of the best system are returned instead.
    """
    y = np.asarray(train_gold)
    forest = forest_train(ensemble_features(*train_probs), y, config or ForestConfig(),
                          n_classes=n_classes)
    accs = [float(np.mean(np.argmax(p, axis=1) == y)) for p in train_probs]
    best = int(np.argmax(accs))
    distinct = {(np.asarray(a).tobytes(), np.asarray(b).tobytes())
                for a, b in zip(train_probs, test_probs)}
    if guard and (len(distinct) == 1 or not forest.oob_score >= accs[best]):
        chosen, pred = f"system_{best}", np.argmax(test_probs[best], axis=1)
    else:
        chosen, pred = "forest", forest.predict(ensemble_features(*test_probs))
    return EnsembleResult(forest, pred, score(test_gold, pred, n_classes), chosen,
                          forest.oob_score, accs)


# ---------------------------------------------------------------------------
# experiments


SWEEP_HEADER = ("n_pairs", "best_epoch", "src_dev_f1", "tgt_dev_f1", "tgt_test_f1")


def lexicon_sweep(S, T, lexicon: BilingualLexicon, source_corpus: LabeledCorpus,
                  target_dev: LabeledCorpus, target_test: LabeledCorpus | None,
                  config: TrainConfig, sizes: Sequence[int] = SWEEP_SIZES) -> list[tuple]:
    """BLSE trained on growing lexicon prefixes.

    Sizes larger than the number of covered training pairs are capped to that
    number (and duplicates dropped). Returns one row per size with the
    best-epoch dev scores and the test score of the selected model.
    """
    covered, _ = covered_pairs(lexicon.train_pairs, S, T)
    lex = BilingualLexicon(tuple(covered) + tuple(lexicon.dev_pairs),
                           (False,) * len(covered) + (True,) * len(lexicon.dev_pairs))
    capped = sorted({min(int(n), len(covered)) for n in sizes})
    rows = []
    for n in capped:
        model, trace = train(S, T, lex.subset(n), source_corpus, config,
                             target_dev=target_dev, require_lexicon=False)
        rec = trace.records[trace.best_epoch - 1]
        test_f1 = float("nan")
        if target_test is not None and len(target_test):
            _, pred = predict_corpus(model, T, target_test.sentences, "target")
            test_f1 = score(target_test.labels, pred, model.c).macro_f1
        rows.append((n, trace.best_epoch, rec.src_dev_f1, rec.tgt_dev_f1, test_f1))
        logger.info("sweep n=%d target dev F1 %.4f", n, rec.tgt_dev_f1)
    return rows


@dataclass
class AblationResult:
    full_model: BlseModel
    full_trace: EpochTrace
    ablated_model: BlseModel
    ablated_trace: EpochTrace

    @staticmethod
    def _best(trace: EpochTrace):
        return trace.records[trace.best_epoch - 1]

    def summary_rows(self) -> list[tuple]:
        out = []
        for name, tr in (("full", self.full_trace), ("ablated", self.ablated_trace)):
            r = self._best(tr)
            out.append((name, tr.best_epoch, r.src_dev_f1, r.tgt_dev_f1, r.holdout_cos))
        return out


ABLATION_HEADER = ("variant", "best_epoch", "src_dev_f1", "tgt_dev_f1", "holdout_cos")


def ablation(S, T, lexicon, source_corpus, target_dev, config: TrainConfig) -> AblationResult:
    """Train the full model and the variant without M' under one configuration."""
    full_model, full_trace = train(S, T, lexicon, source_corpus, replace(config, ablate_mprime=False),
                                   target_dev=target_dev)
    abl_model, abl_trace = train(S, T, lexicon, source_corpus, replace(config, ablate_mprime=True),
                                 target_dev=target_dev)
    return AblationResult(full_model, full_trace, abl_model, abl_trace)


def _known(store: EmbeddingStore, words: Sequence[str]) -> list[str]:
    return [w for w in words if w in store]


def cosine_experiment(S: EmbeddingStore, T: EmbeddingStore, lexicon: BilingualLexicon,
                      source_corpus: LabeledCorpus, target_dev: LabeledCorpus | None,
                      config: TrainConfig, source_words: tuple[Sequence[str], Sequence[str]],
                      target_words: tuple[Sequence[str], Sequence[str]] | None = None):
    """Train BLSE recording joint-space cosine analytics after every epoch.

    Words missing from their store are skipped; cosines use held-out lexicon
    pairs. Returns (model, trace); the analytics sit in ``trace.extras``.
    """
    spos, sneg = _known(S, source_words[0]), _known(S, source_words[1])
    if not spos or not sneg:
        raise ValueError("no source sentiment word is covered by the source embeddings")
    tw = None
    if target_words is not None:
        tw = (_known(T, target_words[0]), _known(T, target_words[1]))
        if not tw[0] or not tw[1]:
            raise ValueError("no target sentiment word is covered by the target embeddings")
    held_out, _ = covered_pairs(lexicon.dev_pairs, S, T)

    def on_epoch(_epoch: int, model: BlseModel) -> dict[str, float]:
        return cosine_trace(lambda ws: model.project_source(S.rows(ws)),
                            lambda ws: model.project_target(T.rows(ws)),
                            (spos, sneg), tw, held_out)

    return train(S, T, lexicon, source_corpus, config, target_dev=target_dev, on_epoch=on_epoch)


def projected_vector_rows(model: BlseModel, S: EmbeddingStore, T: EmbeddingStore,
                          source_words, target_words=None) -> list[list[str]]:
    """Rows (language, category, word, z_0..z_{k-1}) for external visualisation."""
    rows = [["language", "category", "word"] + [f"z_{i}" for i in range(model.k)]]
    groups = [("source", S, model.project_source, source_words)]
    if target_words is not None:
        groups.append(("target", T, model.project_target, target_words))
    for lang, store, proj, (pos, neg) in groups:
        for cat, words in (("positive", pos), ("negative", neg)):
            words = _known(store, words)
            if not words:
                continue
            for word, z in zip(words, proj(store.rows(words))):
                rows.append([lang, cat, word] + [repr(float(v)) for v in z])
    return rows


def read_word_sets(path: str | Path) -> tuple[list[str], list[str]]:
    """``pos|neg<TAB>word`` lines into (positive, negative) lists."""
    pos, neg = [], []
    with Path(path).open(encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2 or parts[0] not in ("pos", "neg"):
                raise FormatError(f"{path}:{lineno}: expected 'pos|neg<TAB>word'")
            (pos if parts[0] == "pos" else neg).append(parts[1].lower())
    return pos, neg
