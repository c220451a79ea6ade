"""Baseline bilingual spaces: a least-squares linear map between monolingual
spaces, and a pseudo-bilingual corpus for joint embedding training."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .embed_store import EmbeddingStore
from .lexicon import BilingualLexicon, Pair, covered_pairs


@dataclass(frozen=True)
class LinearMap:
    W: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.W)):
            raise ValueError("linear map has non-finite entries")


def _stack(S: EmbeddingStore, T: EmbeddingStore, lexicon: BilingualLexicon | Sequence[Pair]):
    pairs = lexicon.train_pairs if isinstance(lexicon, BilingualLexicon) else list(lexicon)
    pairs, _ = covered_pairs(pairs, S, T)
    if not pairs:
        raise ValueError("no lexicon pair is covered by both embedding stores")
    return S.rows(s for s, _ in pairs), T.rows(t for _, t in pairs)


def least_squares(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Minimum-norm argmin_W ||XW - Y||_F via the SVD pseudoinverse."""
    return np.linalg.pinv(X) @ Y


def procrustes(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Orthogonal W minimising ||XW - Y||_F (requires square W)."""
    if X.shape[1] != Y.shape[1]:
        raise ValueError("orthogonal mapping needs equal source and target dimensions")
    u, _, vt = np.linalg.svd(X.T @ Y)
    return u @ vt


def solve_least_squares_map(S: EmbeddingStore, T: EmbeddingStore,
                            lexicon: BilingualLexicon | Sequence[Pair],
                            orthogonal: bool = False) -> LinearMap:
    """Map source vectors onto their translations' target vectors.

    Uses the training pairs covered by both stores. The default is the
    unconstrained least-squares solution; ``orthogonal=True`` constrains W to
    be orthogonal.
    """
    X, Y = _stack(S, T, lexicon)
    return LinearMap(procrustes(X, Y) if orthogonal else least_squares(X, Y))


def project_source(linear_map: LinearMap, S: EmbeddingStore) -> EmbeddingStore:
    if S.dim != linear_map.W.shape[0]:
        raise ValueError(f"store has dim {S.dim} but map expects {linear_map.W.shape[0]}")
    return S.with_matrix(S.matrix @ linear_map.W)


def make_pseudo_bilingual(source_corpus: Sequence[Sequence[str]],
                          target_corpus: Sequence[Sequence[str]],
                          lexicon: BilingualLexicon | Sequence[Pair],
                          seed: int = 0, p_replace: float = 0.5) -> list[list[str]]:
    """Concatenate both corpora and swap lexicon words for a translation.

    Every occurrence of a source word with a known translation is replaced
    with probability ``p_replace`` by one of its translations (chosen
    uniformly); target words likewise by one of their source translations.
    Other tokens pass through unchanged.
    """
    if not source_corpus and not target_corpus:
        raise ValueError("both corpora are empty")
    pairs = lexicon.train_pairs if isinstance(lexicon, BilingualLexicon) else list(lexicon)
    if not pairs:
        raise ValueError("empty lexicon")
    fwd: dict[str, list[str]] = defaultdict(list)
    inv: dict[str, list[str]] = defaultdict(list)
    for s, t in pairs:
        fwd[s].append(t)
        inv[t].append(s)

    rng = np.random.default_rng(seed)
    out: list[list[str]] = []
    for corpus, table in ((source_corpus, fwd), (target_corpus, inv)):
        for sent in corpus:
            flips = rng.random(len(sent)) < p_replace
            picks = rng.random(len(sent))
            new = []
            for tok, flip, u in zip(sent, flips, picks):
                options = table.get(tok)
                if options and flip:
                    tok = options[int(u * len(options))]
                new.append(tok)
            out.append(new)
    return out


def write_sentences(sentences: Sequence[Sequence[str]], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        for sent in sentences:
            f.write(" ".join(sent) + "\n")


def read_sentences(path: str | Path) -> list[list[str]]:
    with Path(path).open(encoding="utf-8") as f:
        return [line.lower().split() for line in f if line.strip()]
