"""Classification metrics, approximate randomization significance testing and
joint-space cosine analytics."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np


def confusion_matrix(gold: Sequence[int], pred: Sequence[int], c: int) -> np.ndarray:
    """(c x c) counts, rows = gold, columns = predicted."""
    gold = np.asarray(gold, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    return np.bincount(gold * c + pred, minlength=c * c).reshape(c, c)


def _prf(tp: np.ndarray, fp: np.ndarray, fn: np.ndarray):
    """Per-class precision/recall/F1 along the last axis, 0 on 0/0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(tp + fp > 0, tp / np.maximum(tp + fp, 1), 0.0)
        r = np.where(tp + fn > 0, tp / np.maximum(tp + fn, 1), 0.0)
        f = np.where(p + r > 0, 2 * p * r / np.where(p + r > 0, p + r, 1.0), 0.0)
    return p, r, f


@dataclass(frozen=True)
class EvalReport:
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    confusion: np.ndarray
    n: int

    @property
    def macro_precision(self) -> float:
        return float(self.precision.mean())

    @property
    def macro_recall(self) -> float:
        return float(self.recall.mean())

    @property
    def macro_f1(self) -> float:
        return float(self.f1.mean())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.confusion) / self.n)

    def rows(self, class_names: Sequence[str] | None = None) -> list[list[str]]:
        c = len(self.f1)
        names = list(class_names) if class_names else [str(i) for i in range(c)]
        out = [["class", "precision", "recall", "f1", "support"]]
        support = self.confusion.sum(axis=1)
        for i in range(c):
            out.append([names[i], repr(float(self.precision[i])), repr(float(self.recall[i])),
                        repr(float(self.f1[i])), str(int(support[i]))])
        out.append(["macro", repr(self.macro_precision), repr(self.macro_recall),
                    repr(self.macro_f1), str(self.n)])
        return out

    def write_csv(self, path: str | Path, class_names: Sequence[str] | None = None) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerows(self.rows(class_names))
            c = len(self.f1)
            w.writerow([])
            w.writerow(["gold\\pred"] + [str(j) for j in range(c)])
            for i in range(c):
                w.writerow([str(i)] + [str(int(v)) for v in self.confusion[i]])

    def table(self, class_names: Sequence[str] | None = None) -> str:
        rows = self.rows(class_names)
        fmt = [rows[0]] + [[r[0]] + [f"{float(v):.3f}" for v in r[1:4]] + [r[4]] for r in rows[1:]]
        widths = [max(len(r[i]) for r in fmt) for i in range(5)]
        return "\n".join("  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in fmt)


def score(gold: Sequence[int], pred: Sequence[int], c: int) -> EvalReport:
    """Per-class and macro-averaged precision, recall and F1 over ``c`` classes."""
    if len(gold) != len(pred):
        raise ValueError(f"gold has {len(gold)} labels but pred has {len(pred)}")
    if len(gold) == 0:
        raise ValueError("cannot score an empty prediction list")
    cm = confusion_matrix(gold, pred, c)
    tp = np.diag(cm).astype(float)
    p, r, f = _prf(tp, cm.sum(axis=0) - tp, cm.sum(axis=1) - tp)
    return EvalReport(p, r, f, cm, len(gold))


def macro_f1(gold, pred, c: int) -> float:
    return score(gold, pred, c).macro_f1


def _macro_f1_rows(gold: np.ndarray, preds: np.ndarray, c: int) -> np.ndarray:
    """Macro F1 for each row of ``preds`` (runs x n) against one gold vector."""
    gold_onehot = gold[None, :] == np.arange(c)[:, None]           # (c, n)
    fn_base = gold_onehot.sum(axis=1)                               # (c,)
    f_all = np.empty((preds.shape[0], c))
    for k in range(c):
        is_k = preds == k
        tp = (is_k & gold_onehot[k][None, :]).sum(axis=1).astype(float)
        fp = is_k.sum(axis=1) - tp
        fn = fn_base[k] - tp
        f_all[:, k] = _prf(tp, fp, fn)[2]
    return f_all.mean(axis=1)


@dataclass(frozen=True)
class SignificanceResult:
    p_value: float
    runs: int
    observed_diff: float


def approx_randomization(gold: Sequence[int], pred_a: Sequence[int], pred_b: Sequence[int],
                         runs: int = 10_000, seed: int = 0, c: int | None = None,
                         chunk: int = 500) -> SignificanceResult:
    """Paired approximate randomization test on the macro F1 difference.

    Each run swaps the two systems' predictions at every position
    independently with probability 0.5; the p-value is the add-one estimate
    (hits + 1) / (runs + 1).
    """
    gold = np.asarray(gold, dtype=np.int64)
    a = np.asarray(pred_a, dtype=np.int64)
    b = np.asarray(pred_b, dtype=np.int64)
    if not (len(gold) == len(a) == len(b)):
        raise ValueError("gold and both prediction lists must have equal length")
    if runs < 1:
        raise ValueError("runs must be positive")
    if c is None:
        c = int(max(gold.max(), a.max(), b.max())) + 1
    observed = abs(macro_f1(gold, a, c) - macro_f1(gold, b, c))
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < runs:
        m = min(chunk, runs - done)
        swap = rng.random((m, len(gold))) < 0.5
        pa = np.where(swap, b[None, :], a[None, :])
        pb = np.where(swap, a[None, :], b[None, :])
        stats = np.abs(_macro_f1_rows(gold, pa, c) - _macro_f1_rows(gold, pb, c))
        hits += int(np.sum(stats >= observed - 1e-12))
        done += m
    return SignificanceResult((hits + 1) / (runs + 1), runs, observed)


# ---------------------------------------------------------------------------
# cosine analytics


def mean_pairwise_cosine(x: np.ndarray, y: np.ndarray | None = None) -> float:
    """Mean cosine over distinct pairs within ``x`` or over all of ``x`` x ``y``."""
    xn = _unit(x)
    if y is None:
        n = len(xn)
        if n < 2:
            raise ValueError("need at least two vectors for within-set cosine")
        sims = xn @ xn.T
        return float((sims.sum() - np.trace(sims)) / (n * (n - 1)))
    return float((xn @ _unit(y).T).mean())


def paired_cosine(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.sum(_unit(x) * _unit(y), axis=1)))


def _unit(x: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.where(n == 0, 1.0, n)


@dataclass(frozen=True)
class CosineRecord:
    synonym: float
    antonym: float

    @property
    def separation(self) -> float:
        return self.synonym - self.antonym


def synonym_antonym(positive: np.ndarray, negative: np.ndarray) -> CosineRecord:
    """Within-polarity cosine (mean of the two within-set means) and
    cross-polarity cosine for two sets of joint-space vectors."""
    syn = 0.5 * (mean_pairwise_cosine(positive) + mean_pairwise_cosine(negative))
    return CosineRecord(syn, mean_pairwise_cosine(positive, negative))


Projector = Callable[[Sequence[str]], np.ndarray]


def cosine_trace(project_source: Projector, project_target: Projector,
                 source_words: tuple[Sequence[str], Sequence[str]],
                 target_words: tuple[Sequence[str], Sequence[str]] | None,
                 pairs: Sequence[tuple[str, str]]) -> dict[str, float]:
    """One analytics record in the joint space.

    The projectors map a list of words to their joint-space vectors (source
    words through M, target words through M'); words they cannot place must
    be filtered out by the caller.
    """
    out: dict[str, float] = {}
    pos, neg = source_words
    if not pos or not neg:
        raise ValueError("positive and negative word sets must be non-empty")
    rec = synonym_antonym(project_source(pos), project_source(neg))
    out["src_synonym_cos"], out["src_antonym_cos"] = rec.synonym, rec.antonym
    if target_words is not None:
        tpos, tneg = target_words
        if not tpos or not tneg:
            raise ValueError("positive and negative target word sets must be non-empty")
        rec = synonym_antonym(project_target(tpos), project_target(tneg))
        out["tgt_synonym_cos"], out["tgt_antonym_cos"] = rec.synonym, rec.antonym
    if pairs:
        out["translation_cos"] = paired_cosine(project_source([s for s, _ in pairs]),
                                               project_target([t for _, t in pairs]))
    else:
        out["translation_cos"] = float("nan")
    return out
