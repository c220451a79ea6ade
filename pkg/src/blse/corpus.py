"""Labeled sentiment corpora: TSV loading, 4-class to binary merge and
stratified train/dev/test splitting."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError

TRAIN, DEV, TEST = "train", "dev", "test"


class Scheme(str, enum.Enum):
    BINARY = "binary"
    FOURCLASS = "fourclass"

    @property
    def n_classes(self) -> int:
        return 2 if self is Scheme.BINARY else 4


class BinaryLabel(enum.IntEnum):
    NEG = 0
    POS = 1


class FourClassLabel(enum.IntEnum):
    STRONG_NEGATIVE = 0
    NEGATIVE = 1
    POSITIVE = 2
    STRONG_POSITIVE = 3


def tokenize(text: str) -> list[str]:
    return text.lower().split()


@dataclass(frozen=True)
class LabeledCorpus:
    sentences: tuple[tuple[str, ...], ...]
    labels: tuple[int, ...]
    scheme: Scheme
    splits: tuple[str, ...] = ()

    def __post_init__(self):
        scheme = Scheme(self.scheme)
        sentences = tuple(tuple(s) for s in self.sentences)
        labels = tuple(int(y) for y in self.labels)
        if len(sentences) != len(labels):
            raise ValueError("sentences and labels differ in length")
        for y in labels:
            if not 0 <= y < scheme.n_classes:
                raise ValueError(f"label {y} outside {scheme.value} scheme")
        if any(len(s) == 0 for s in sentences):
            raise ValueError("empty sentence in corpus")
        splits = tuple(self.splits)
        if splits and len(splits) != len(labels):
            raise ValueError("splits and labels differ in length")
        if any(s not in (TRAIN, DEV, TEST) for s in splits):
            raise ValueError("split tags must be train/dev/test")
        object.__setattr__(self, "scheme", scheme)
        object.__setattr__(self, "sentences", sentences)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "splits", splits)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_classes(self) -> int:
        return self.scheme.n_classes

    def class_counts(self) -> np.ndarray:
        return np.bincount(np.asarray(self.labels, dtype=np.int64), minlength=self.n_classes)

    def part(self, split: str) -> "LabeledCorpus":
        """Examples tagged ``split``; an unsplit corpus counts as all-train."""
        if not self.splits:
            if split != TRAIN:
                return LabeledCorpus((), (), self.scheme)
            return self
        idx = [i for i, s in enumerate(self.splits) if s == split]
        return LabeledCorpus(tuple(self.sentences[i] for i in idx),
                             tuple(self.labels[i] for i in idx), self.scheme,
                             (split,) * len(idx))

    def majority_label(self) -> int:
        return int(np.argmax(self.class_counts()))


def parse_corpus_lines(lines: Sequence[str], scheme: Scheme | str, source: str = "<corpus>") -> LabeledCorpus:
    scheme = Scheme(scheme)
    valid = {str(i): i for i in range(scheme.n_classes)}
    sentences, labels = [], []
    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        label, sep, text = line.partition("\t")
        if not sep:
            raise FormatError(f"{source}:{lineno}: expected 'label<TAB>text'")
        label = label.strip()
        if label not in valid:
            raise FormatError(f"{source}:{lineno}: unknown label {label!r} for {scheme.value} scheme")
        toks = tokenize(text)
        if not toks:
            raise FormatError(f"{source}:{lineno}: empty text")
        sentences.append(tuple(toks))
        labels.append(valid[label])
    return LabeledCorpus(tuple(sentences), tuple(labels), scheme)


def load_corpus(path: str | Path, scheme: Scheme | str = Scheme.BINARY) -> LabeledCorpus:
    path = Path(path)
    with path.open(encoding="utf-8") as f:
        return parse_corpus_lines(f.readlines(), scheme, str(path))


def save_corpus(corpus: LabeledCorpus, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        for toks, y in zip(corpus.sentences, corpus.labels):
            f.write(f"{y}\t{' '.join(toks)}\n")


def to_binary(corpus: LabeledCorpus) -> LabeledCorpus:
    """Merge strong and weak classes: {--, -} -> neg, {+, ++} -> pos."""
    if corpus.scheme is not Scheme.FOURCLASS:
        raise ValueError("corpus is already binary")
    labels = tuple(int(y >= FourClassLabel.POSITIVE) for y in corpus.labels)
    return LabeledCorpus(corpus.sentences, labels, Scheme.BINARY, corpus.splits)


def binary_counts(fourclass_counts: Sequence[int]) -> tuple[int, int]:
    """(neg, pos) totals for 4-class counts ordered (--, -, +, ++)."""
    sn, n, p, sp = fourclass_counts
    return sn + n, p + sp


def split_corpus(corpus: LabeledCorpus, seed: int = 0,
                 fractions: tuple[float, float, float] = (0.7, 0.2, 0.1)) -> LabeledCorpus:
    """Stratified train/test/dev assignment (70/20/10 by default).

    Fractions are given in (train, test, dev) order. Each class is shuffled
    with a seeded generator and cut at rounded cumulative boundaries, so per
    class counts are within one example of the exact proportions.
    """
    if len(corpus) < 10:
        raise ValueError("need at least 10 examples to split")
    labels = np.asarray(corpus.labels)
    rng = np.random.default_rng(seed)
    tags = np.empty(len(labels), dtype=object)
    f_train, f_test, _ = fractions
    for c in range(corpus.n_classes):
        members = np.flatnonzero(labels == c)
        if len(members) == 0:
            continue
        if len(members) < 3:
            raise ValueError(f"class {c} has {len(members)} examples; cannot stratify into three splits")
        members = members[rng.permutation(len(members))]
        n = len(members)
        n_train = int(round(f_train * n))
        n_test = int(round((f_train + f_test) * n)) - n_train
        n_train = min(n_train, n - 2)
        n_test = max(1, min(n_test, n - n_train - 1))
        tags[members[:n_train]] = TRAIN
        tags[members[n_train:n_train + n_test]] = TEST
        tags[members[n_train + n_test:]] = DEV
    return LabeledCorpus(corpus.sentences, corpus.labels, corpus.scheme, tuple(tags))
