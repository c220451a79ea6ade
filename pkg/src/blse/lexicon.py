"""Bilingual word-to-word translation lexicon with a train/dev partition."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .embed_store import EmbeddingStore
from .errors import FormatError

logger = logging.getLogger(__name__)

Pair = tuple[str, str]


@dataclass(frozen=True)
class BilingualLexicon:
    pairs: tuple[Pair, ...]
    dev_mask: tuple[bool, ...] = ()
    dropped_multiword: int = field(default=0, compare=False)

    def __post_init__(self):
        pairs = tuple((s, t) for s, t in self.pairs)
        for s, t in pairs:
            if not s or not t or len(s.split()) != 1 or len(t.split()) != 1:
                raise ValueError(f"lexicon entries must be single words: {s!r} -> {t!r}")
        mask = tuple(bool(m) for m in self.dev_mask) or (False,) * len(pairs)
        if len(mask) != len(pairs):
            raise ValueError("dev_mask length differs from number of pairs")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "dev_mask", mask)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def train_pairs(self) -> list[Pair]:
        return [p for p, m in zip(self.pairs, self.dev_mask) if not m]

    @property
    def dev_pairs(self) -> list[Pair]:
        return [p for p, m in zip(self.pairs, self.dev_mask) if m]

    def subset(self, n: int) -> "BilingualLexicon":
        """First ``n`` training pairs, keeping every dev pair."""
        keep, taken = [], 0
        for p, m in zip(self.pairs, self.dev_mask):
            if m:
                keep.append((p, True))
            elif taken < n:
                keep.append((p, False))
                taken += 1
        return BilingualLexicon(tuple(p for p, _ in keep), tuple(m for _, m in keep))


def load_lexicon(path: str | Path) -> BilingualLexicon:
    """Parse ``source<TAB>target`` lines, dropping multi-word entries."""
    path = Path(path)
    pairs: list[Pair] = []
    dropped = 0
    with path.open(encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise FormatError(f"{path}:{lineno}: expected exactly one tab")
            src, trg = fields[0].strip(), fields[1].strip()
            if len(src.split()) != 1 or len(trg.split()) != 1:
                dropped += 1
                continue
            pairs.append((src, trg))
    if dropped:
        logger.warning("%s: dropped %d multi-word entries", path, dropped)
    if not pairs:
        raise FormatError(f"{path}: no usable translation pairs")
    return BilingualLexicon(tuple(pairs), dropped_multiword=dropped)


def save_lexicon(lex: BilingualLexicon, path: str | Path, pairs: Sequence[Pair] | None = None) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        for s, t in (lex.pairs if pairs is None else pairs):
            f.write(f"{s}\t{t}\n")


def split_dev(lex: BilingualLexicon, fraction: float = 0.1, seed: int = 0) -> BilingualLexicon:
    """Hold out ``ceil(fraction * n)`` random pairs (at least one) as dev."""
    if not 0 < fraction < 1:
        raise ValueError(f"dev fraction must lie in (0, 1), got {fraction}")
    n = len(lex.pairs)
    if n < 2:
        raise ValueError("need at least two pairs to hold out a dev set")
    n_dev = min(n - 1, max(1, math.ceil(fraction * n - 1e-9)))
    rng = np.random.default_rng(seed)
    dev = set(rng.permutation(n)[:n_dev].tolist())
    return BilingualLexicon(lex.pairs, tuple(i in dev for i in range(n)), lex.dropped_multiword)


def covered_pairs(pairs: Sequence[Pair], source: EmbeddingStore,
                  target: EmbeddingStore | None) -> tuple[list[Pair], int]:
    """Pairs whose tokens exist in both stores, plus the number dropped.

    With ``target=None`` only source coverage is checked.
    """
    kept = [(s, t) for s, t in pairs
            if s in source and (target is None or t in target)]
    return kept, len(pairs) - len(kept)
