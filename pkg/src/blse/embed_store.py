"""Monolingual word embeddings: text-format I/O, sentence averaging and a
small skip-gram (negative sampling) trainer for desk-scale corpora."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import FormatError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class EmbeddingStore:
    """Vocabulary plus a (vocab_size x dim) matrix for one language.

    The matrix is copied and marked read-only on construction.
    """

    tokens: tuple[str, ...]
    matrix: np.ndarray
    language_tag: str = ""
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        tokens = tuple(self.tokens)
        matrix = np.array(self.matrix, dtype=np.float64, copy=True)
        if matrix.ndim != 2:
            raise ValueError(f"embedding matrix must be 2-D, got shape {matrix.shape}")
        if len(tokens) < 1 or matrix.shape[1] < 1:
            raise ValueError("embedding store needs at least one token and one dimension")
        if matrix.shape[0] != len(tokens):
            raise ValueError(f"{len(tokens)} tokens but {matrix.shape[0]} rows")
        if not np.all(np.isfinite(matrix)):
            raise ValueError("embedding matrix contains non-finite values")
        index: dict[str, int] = {}
        for i, tok in enumerate(tokens):
            if tok in index:
                raise ValueError(f"duplicate token {tok!r}")
            index[tok] = i
        matrix.setflags(write=False)
        object.__setattr__(self, "tokens", tokens)
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "_index", index)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def vocab_size(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def index(self, token: str) -> int:
        return self._index[token]

    def get(self, token: str, default: int | None = None) -> int | None:
        return self._index.get(token, default)

    def lookup(self, token: str) -> np.ndarray:
        return self.matrix[self._index[token]]

    def rows(self, tokens: Iterable[str]) -> np.ndarray:
        return self.matrix[[self._index[t] for t in tokens]]

    def with_matrix(self, matrix: np.ndarray, language_tag: str | None = None) -> "EmbeddingStore":
        return EmbeddingStore(self.tokens, matrix,
                              self.language_tag if language_tag is None else language_tag)


@dataclass(frozen=True)
class SentenceVector:
    values: np.ndarray
    known_token_count: int

    @property
    def degenerate(self) -> bool:
        return self.known_token_count == 0


def load_text_embeddings(path: str | Path, language_tag: str = "") -> EmbeddingStore:
    """Read a word2vec-style text file (header ``<vocab> <dim>``, then one
    token and ``dim`` floats per line)."""
    path = Path(path)
    with path.open(encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise FormatError(f"{path}: malformed header, expected '<vocab_size> <dim>'")
        try:
            vocab_size, dim = int(header[0]), int(header[1])
        except ValueError:
            raise FormatError(f"{path}: malformed header {' '.join(header)!r}") from None
        if vocab_size < 1 or dim < 1:
            raise FormatError(f"{path}: header sizes must be positive")
        tokens: list[str] = []
        seen: set[str] = set()
        matrix = np.empty((vocab_size, dim), dtype=np.float64)
        lineno = 1
        for line in f:
            lineno += 1
            parts = line.rstrip("\n").split(" ")
            if parts == [""]:
                continue
            if len(tokens) == vocab_size:
                raise FormatError(f"{path}:{lineno}: more rows than header vocab size {vocab_size}")
            if len(parts) != dim + 1:
                raise FormatError(f"{path}:{lineno}: expected {dim} values, got {len(parts) - 1}")
            tok = parts[0]
            if tok in seen:
                raise FormatError(f"{path}:{lineno}: duplicate token {tok!r}")
            try:
                row = np.array([float(x) for x in parts[1:]])
            except ValueError as e:
                raise FormatError(f"{path}:{lineno}: {e}") from None
            if not np.all(np.isfinite(row)):
                raise FormatError(f"{path}:{lineno}: non-finite value")
            matrix[len(tokens)] = row
            tokens.append(tok)
            seen.add(tok)
    if len(tokens) != vocab_size:
        raise FormatError(f"{path}: header says {vocab_size} rows, found {len(tokens)}")
    return EmbeddingStore(tuple(tokens), matrix, language_tag)


def save_text_embeddings(store: EmbeddingStore, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write(f"{store.vocab_size} {store.dim}\n")
        for tok, row in zip(store.tokens, store.matrix):
            f.write(tok + " " + " ".join(f"{x:.17g}" for x in row) + "\n")


def average_sentence(store: EmbeddingStore, tokens: Sequence[str]) -> SentenceVector:
    """Mean of the rows of in-vocabulary tokens; OOV tokens are skipped.

    If no token is known the result is the zero vector with count 0.
    """
    if len(tokens) == 0:
        raise ValueError("cannot average an empty token list")
    idx = [i for i in (store.get(t) for t in tokens) if i is not None]
    if not idx:
        return SentenceVector(np.zeros(store.dim), 0)
    return SentenceVector(store.matrix[idx].mean(axis=0), len(idx))


def average_many(store: EmbeddingStore, sentences: Sequence[Sequence[str]]) -> tuple[np.ndarray, np.ndarray]:
    """Stack sentence averages; returns (averages, known_token_counts)."""
    out = np.zeros((len(sentences), store.dim))
    counts = np.zeros(len(sentences), dtype=np.int64)
    for i, toks in enumerate(sentences):
        sv = average_sentence(store, toks)
        out[i] = sv.values
        counts[i] = sv.known_token_count
    return out, counts


# ---------------------------------------------------------------------------
# skip-gram with negative sampling


@dataclass
class SgnsConfig:
    dim: int = 300
    window: int = 5
    negative: int = 15
    epochs: int = 5
    learning_rate: float = 0.025
    subsample: float = 1e-4
    min_count: int = 5
    seed: int = 0
    batch_size: int = 256
    vectors: str = "sum"   # "sum" (input + output vectors) or "input"


def _window_pairs(ids: np.ndarray, sent_ids: np.ndarray, window: int,
                  rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    # word2vec-style shrunk window: each center draws b in [1, window]
    reach = rng.integers(1, window + 1, size=len(ids))
    centers, contexts = [], []
    for off in range(1, window + 1):
        if off >= len(ids):
            break
        same = sent_ids[off:] == sent_ids[:-off]
        fwd = same & (reach[:-off] >= off)
        centers.append(ids[:-off][fwd])
        contexts.append(ids[off:][fwd])
        bwd = same & (reach[off:] >= off)
        centers.append(ids[off:][bwd])
        contexts.append(ids[:-off][bwd])
    if not centers:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    return np.concatenate(centers), np.concatenate(contexts)


def train_sgns(corpus: Sequence[Sequence[str]], config: SgnsConfig | None = None,
               language_tag: str = "") -> EmbeddingStore:
    """Train skip-gram embeddings with negative sampling.

    Single-threaded minibatch SGD over shuffled (center, context) pairs with a
    linearly decaying learning rate. Output is deterministic for a seed.
    """
    cfg = config or SgnsConfig()
    if not corpus:
        raise ValueError("empty corpus")
    counts = Counter(t for sent in corpus for t in sent)
    vocab = sorted((t for t, c in counts.items() if c >= cfg.min_count),
                   key=lambda t: (-counts[t], t))
    if not vocab:
        raise ValueError(f"no token reaches min_count={cfg.min_count}")
    index = {t: i for i, t in enumerate(vocab)}
    freq = np.array([counts[t] for t in vocab], dtype=np.float64)

    ids_list, sid_list = [], []
    for s, sent in enumerate(corpus):
        kept = [index[t] for t in sent if t in index]
        ids_list.extend(kept)
        sid_list.extend([s] * len(kept))
    all_ids = np.array(ids_list, dtype=np.int64)
    all_sids = np.array(sid_list, dtype=np.int64)

    if cfg.subsample > 0:
        f = freq / freq.sum()
        keep_prob = np.minimum(1.0, (np.sqrt(f / cfg.subsample) + 1) * cfg.subsample / f)
    else:
        keep_prob = np.ones(len(vocab))
    noise = freq ** 0.75
    noise_cdf = np.cumsum(noise / noise.sum())
    noise_cdf[-1] = 1.0

    rng = np.random.default_rng(cfg.seed)
    v = len(vocab)
    w_in = (rng.random((v, cfg.dim)) - 0.5) / cfg.dim
    w_out = np.zeros((v, cfg.dim))

    def epoch_pairs():
        keep = rng.random(len(all_ids)) < keep_prob[all_ids]
        c, o = _window_pairs(all_ids[keep], all_sids[keep], cfg.window, rng)
        perm = rng.permutation(len(c))
        return c[perm], o[perm]

    lr0 = cfg.learning_rate
    done = 0
    total = 0
    for epoch in range(cfg.epochs):
        centers, contexts = epoch_pairs()
        if epoch == 0:
            # subsampling makes pair counts vary a little; the lr schedule uses the first epoch
            total = max(1, len(centers) * cfg.epochs)
        for start in range(0, len(centers), cfg.batch_size):
            c = centers[start:start + cfg.batch_size]
            o = contexts[start:start + cfg.batch_size]
            lr = max(lr0 * 1e-4, lr0 * (1 - done / total))
            done += len(c)
            neg = np.searchsorted(noise_cdf, rng.random((len(c), cfg.negative)))
            targets = np.concatenate([o[:, None], neg], axis=1)
            labels = np.zeros(targets.shape)
            labels[:, 0] = 1.0
            vc = w_in[c]
            uo = w_out[targets]
            scores = np.einsum("bd,bkd->bk", vc, uo)
            g = lr * (labels - _sigmoid(scores))
            grad_in = np.einsum("bk,bkd->bd", g, uo)
            grad_out = g[:, :, None] * vc[:, None, :]
            rows, upd = _scatter_rows(targets.ravel(), grad_out.reshape(-1, cfg.dim))
            w_out[rows] += upd
            rows, upd = _scatter_rows(c, grad_in)
            w_in[rows] += upd
    if not np.all(np.isfinite(w_in)):
        raise FloatingPointError("skip-gram training diverged; lower the learning rate")
    logger.info("trained %d-dim skip-gram vectors for %d tokens on %d pairs", cfg.dim, v, total)
    vectors = w_in + w_out if cfg.vectors == "sum" else w_in
    return EmbeddingStore(tuple(vocab), vectors, language_tag)


def _scatter_rows(idx: np.ndarray, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unique row ids and the per-id sums of ``vals`` (deterministic order)."""
    uniq, inv = np.unique(idx, return_inverse=True)
    sel = sp.csr_matrix((np.ones(len(idx)), (inv, np.arange(len(idx)))), shape=(len(uniq), len(idx)))
    return uniq, sel @ vals


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(a @ b / (na * nb))


def normalize_rows(x: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.where(n == 0, 1.0, n)


__all__ = [
    "EmbeddingStore", "SentenceVector", "SgnsConfig", "average_many", "average_sentence",
    "cosine", "load_text_embeddings", "normalize_rows", "save_text_embeddings", "train_sgns",
]
