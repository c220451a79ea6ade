"""Bilingual sentiment embeddings.

Two linear maps project the source space (through ``M``) and the target
space (through ``Mprime``) into a shared space; a softmax layer ``P`` on top
of the shared space is trained on source-language labels only.  Training
minimises a convex combination of the sentence cross-entropy and the mean
squared distance between projected translation pairs, with ADAM.

Sentence averages are computed once up front: the embedding matrices are
never updated, so the averages are constant over training.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import DEV, TRAIN, LabeledCorpus
from .embed_store import EmbeddingStore, average_many, average_sentence
from .errors import FormatError, TrainingError
from .evaluation import macro_f1
from .lexicon import BilingualLexicon, Pair, covered_pairs

logger = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class BlseModel:
    M: np.ndarray
    Mprime: np.ndarray | None
    P: np.ndarray
    majority_label: int = 0

    @property
    def ablated(self) -> bool:
        return self.Mprime is None

    @property
    def d(self) -> int:
        return self.M.shape[0]

    @property
    def dprime(self) -> int:
        return self.M.shape[1] if self.Mprime is None else self.Mprime.shape[0]

    @property
    def k(self) -> int:
        return self.M.shape[1]

    @property
    def c(self) -> int:
        return self.P.shape[1]

    def params(self) -> dict[str, np.ndarray]:
        out = {"M": self.M, "P": self.P}
        if self.Mprime is not None:
            out["Mprime"] = self.Mprime
        return out

    def replace(self, **params: np.ndarray) -> "BlseModel":
        p = self.params()
        p.update(params)
        return BlseModel(p["M"], p.get("Mprime"), p["P"], self.majority_label)

    def copy(self) -> "BlseModel":
        return BlseModel(self.M.copy(), None if self.Mprime is None else self.Mprime.copy(),
                         self.P.copy(), self.majority_label)

    def project_source(self, x: np.ndarray) -> np.ndarray:
        return x @ self.M

    def project_target(self, x: np.ndarray) -> np.ndarray:
        # without M' the target space itself plays the role of the joint space
        return x if self.Mprime is None else x @ self.Mprime


def init_model(d: int, dprime: int, c: int, k: int | None = None, seed: int = 0,
               ablate_mprime: bool = False) -> BlseModel:
    """Uniform(-1/sqrt(d), 1/sqrt(d)) initialisation of every matrix."""
    k = d if k is None else k
    if ablate_mprime and k != dprime:
        raise ValueError(f"the model without M' needs k == d' ({k} != {dprime})")
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(d)
    M = rng.uniform(-bound, bound, size=(d, k))
    Mprime = None if ablate_mprime else rng.uniform(-bound, bound, size=(dprime, k))
    P = rng.uniform(-bound, bound, size=(k, c))
    return BlseModel(M, Mprime, P)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


# ---------------------------------------------------------------------------
# losses and gradients on precomputed arrays
#
# xs/xt: (n, d)/(n, d') embeddings of translation pairs
# a: (B, d) source sentence averages, y: (B,) int labels


def projection_loss_arrays(model: BlseModel, xs: np.ndarray, xt: np.ndarray) -> float:
    diff = model.project_source(xs) - model.project_target(xt)
    return float(np.sum(diff * diff) / len(xs))


def sentiment_loss_arrays(model: BlseModel, a: np.ndarray, y: np.ndarray) -> float:
    logp = _log_softmax(a @ model.M @ model.P)
    return float(-logp[np.arange(len(y)), y].mean())


def joint_loss_arrays(model, a, y, xs, xt, alpha: float) -> tuple[float, float, float]:
    """(joint, projection, sentiment) losses; empty batches contribute 0."""
    sent = sentiment_loss_arrays(model, a, y) if len(y) else 0.0
    proj = projection_loss_arrays(model, xs, xt) if len(xs) else 0.0
    return alpha * sent + (1 - alpha) * proj, proj, sent


def gradients_arrays(model: BlseModel, a, y, xs, xt, alpha: float) -> dict[str, np.ndarray]:
    grads = {name: np.zeros_like(p) for name, p in model.params().items()}
    if len(y) and alpha != 0:
        z = a @ model.M
        g = softmax(z @ model.P)
        g[np.arange(len(y)), y] -= 1.0
        g *= alpha / len(y)
        grads["P"] += z.T @ g
        grads["M"] += a.T @ (g @ model.P.T)
    if len(xs) and alpha != 1:
        diff = model.project_source(xs) - model.project_target(xt)
        diff *= 2.0 * (1 - alpha) / len(xs)
        grads["M"] += xs.T @ diff
        if model.Mprime is not None:
            grads["Mprime"] -= xt.T @ diff
    return grads


# ---------------------------------------------------------------------------
# store-level API


def _pair_arrays(S: EmbeddingStore, T: EmbeddingStore, pairs: Sequence[Pair]):
    try:
        xs = S.rows(s for s, _ in pairs)
        xt = T.rows(t for _, t in pairs)
    except KeyError as e:
        raise KeyError(f"lexicon token {e.args[0]!r} missing from its embedding store") from None
    return xs, xt


def _batch_arrays(S: EmbeddingStore, batch: Sequence[tuple[Sequence[str], int]]):
    a, counts = average_many(S, [toks for toks, _ in batch])
    y = np.array([lab for _, lab in batch], dtype=np.int64)
    keep = counts > 0
    return a[keep], y[keep]


def projection_loss(model: BlseModel, S: EmbeddingStore, T: EmbeddingStore,
                    pairs: Sequence[Pair]) -> float:
    """Mean over pairs of the squared distance between projected vectors."""
    if not pairs:
        raise ValueError("projection loss needs at least one pair")
    return projection_loss_arrays(model, *_pair_arrays(S, T, pairs))


def sentiment_loss(model: BlseModel, S: EmbeddingStore,
                   batch: Sequence[tuple[Sequence[str], int]]) -> float:
    """Mean categorical cross-entropy of source sentences (all-OOV ones skipped)."""
    a, y = _batch_arrays(S, batch)
    if not len(y):
        raise ValueError("sentiment loss needs at least one sentence with known tokens")
    if y.min() < 0 or y.max() >= model.c:
        raise ValueError("label outside [0, c)")
    return sentiment_loss_arrays(model, a, y)


def joint_loss(model, S, T, corpus_batch, lexicon_batch, alpha: float) -> float:
    _check_alpha(alpha)
    a, y = _batch_arrays(S, corpus_batch)
    xs, xt = _pair_arrays(S, T, lexicon_batch) if lexicon_batch else (np.empty((0, S.dim)), np.empty((0, T.dim)))
    return joint_loss_arrays(model, a, y, xs, xt, alpha)[0]


def gradients(model, S, T, corpus_batch, lexicon_batch, alpha: float) -> dict[str, np.ndarray]:
    """Analytic gradients of the joint loss w.r.t. M, Mprime (if present) and P."""
    _check_alpha(alpha)
    a, y = _batch_arrays(S, corpus_batch)
    xs, xt = _pair_arrays(S, T, lexicon_batch) if lexicon_batch else (np.empty((0, S.dim)), np.empty((0, T.dim)))
    return gradients_arrays(model, a, y, xs, xt, alpha)


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")


# ---------------------------------------------------------------------------
# ADAM


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(state: AdamState, params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              learning_rate: float) -> tuple[dict[str, np.ndarray], AdamState]:
    """One bias-corrected ADAM update (beta1=0.9, beta2=0.999, eps=1e-8)."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for {name} at step {state.t + 1}")
    t = state.t + 1
    new_params, m_new, v_new = {}, {}, {}
    for name, p in params.items():
        g = grads[name]
        m = ADAM_BETA1 * state.m.get(name, np.zeros_like(p)) + (1 - ADAM_BETA1) * g
        v = ADAM_BETA2 * state.v.get(name, np.zeros_like(p)) + (1 - ADAM_BETA2) * g * g
        m_hat = m / (1 - ADAM_BETA1 ** t)
        v_hat = v / (1 - ADAM_BETA2 ** t)
        new_params[name] = p - learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
        m_new[name], v_new[name] = m, v
    return new_params, AdamState(m_new, v_new, t)


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainConfig:
    alpha: float = 0.3
    epochs: int = 200
    batch_size: int = 50
    learning_rate: float = 0.003
    seed: int = 0
    ablate_mprime: bool = False
    k: int | None = None

    def __post_init__(self):
        _check_alpha(self.alpha)
        if self.epochs < 1 or self.batch_size < 1 or self.learning_rate <= 0:
            raise ValueError("epochs and batch_size must be positive, learning_rate > 0")


@dataclass
class EpochRecord:
    epoch: int
    joint_loss: float
    proj_loss: float
    sent_loss: float
    src_dev_f1: float
    tgt_dev_f1: float
    holdout_cos: float


TRACE_HEADER = ("epoch", "joint_loss", "proj_loss", "sent_loss", "src_dev_f1", "tgt_dev_f1", "holdout_cos")


@dataclass
class EpochTrace:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    extras: list[dict[str, float]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def write_csv(self, path: str | Path) -> None:
        extra_cols = list(self.extras[0]) if self.extras else []
        with Path(path).open("w", encoding="utf-8", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(list(TRACE_HEADER) + extra_cols)
            for i, r in enumerate(self.records):
                row = [r.epoch] + [_fmt(getattr(r, k)) for k in TRACE_HEADER[1:]]
                if extra_cols:
                    row += [_fmt(self.extras[i][k]) for k in extra_cols]
                w.writerow(row)


def _fmt(x: float) -> str:
    return "nan" if isinstance(x, float) and math.isnan(x) else repr(float(x))


@dataclass
class SentenceArrays:
    """Precomputed averages of one labelled split; degenerate rows removed."""

    a: np.ndarray
    y: np.ndarray

    @classmethod
    def build(cls, store: EmbeddingStore, corpus: LabeledCorpus | None) -> "SentenceArrays | None":
        if corpus is None or len(corpus) == 0:
            return None
        a, counts = average_many(store, corpus.sentences)
        keep = counts > 0
        return cls(a[keep], np.asarray(corpus.labels, dtype=np.int64)[keep])


EpochCallback = Callable[[int, BlseModel], dict[str, float]]


def train(S: EmbeddingStore, T: EmbeddingStore, lexicon: BilingualLexicon | Sequence[Pair],
          corpus: LabeledCorpus, config: TrainConfig | None = None, *,
          target_dev: LabeledCorpus | None = None,
          on_epoch: EpochCallback | None = None,
          require_lexicon: bool = True) -> tuple[BlseModel, EpochTrace]:
    """Jointly fit M, M' and P; returns the best epoch's model and the trace.

    ``corpus`` supplies source training sentences (its train split, or all of
    it when unsplit) and, if present, its dev split for source dev F1.
    ``target_dev`` is a labelled target-language corpus used only for
    monitoring and model selection. Lexicon dev pairs feed the held-out
    translation cosine and are never part of the loss.
    """
    cfg = config or TrainConfig()
    if isinstance(lexicon, BilingualLexicon):
        train_pairs, dev_pairs = lexicon.train_pairs, lexicon.dev_pairs
    else:
        train_pairs, dev_pairs = list(lexicon), []
    train_pairs, dropped = covered_pairs(train_pairs, S, T)
    dev_pairs, _ = covered_pairs(dev_pairs, S, T)
    if dropped:
        logger.info("dropped %d lexicon pairs not covered by both stores", dropped)
    if not train_pairs and require_lexicon:
        raise TrainingError("no lexicon training pair is covered by both embedding stores")

    src_train = SentenceArrays.build(S, corpus.part(TRAIN))
    if src_train is None or not len(src_train.y):
        raise TrainingError("source training split is empty (or entirely out of vocabulary)")
    src_dev = SentenceArrays.build(S, corpus.part(DEV))
    if target_dev is not None and target_dev.splits:
        target_dev = target_dev.part(DEV)
    tgt_dev = SentenceArrays.build(T, target_dev)
    c = corpus.n_classes
    if target_dev is not None and target_dev.n_classes != c:
        raise ValueError("source and target corpora use different label schemes")

    xs, xt = _pair_arrays(S, T, train_pairs) if train_pairs else (np.empty((0, S.dim)), np.empty((0, T.dim)))
    dxs, dxt = _pair_arrays(S, T, dev_pairs) if dev_pairs else (None, None)

    model = init_model(S.dim, T.dim, c, k=cfg.k, seed=cfg.seed, ablate_mprime=cfg.ablate_mprime)
    model.majority_label = int(np.argmax(np.bincount(src_train.y, minlength=c)))
    rng = np.random.default_rng(cfg.seed + 1)
    state = AdamState()
    trace = EpochTrace()
    best: tuple[float, BlseModel] | None = None
    n = len(src_train.y)
    lex_order = rng.permutation(len(xs)) if len(xs) else np.empty(0, dtype=np.int64)
    lex_pos = 0

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        totals = np.zeros(3)
        n_batches = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            if len(xs):
                take = (lex_pos + np.arange(len(idx))) % len(xs)
                lex_pos = (lex_pos + len(idx)) % len(xs)
                lidx = lex_order[take]
                bxs, bxt = xs[lidx], xt[lidx]
            else:
                bxs, bxt = xs, xt
            a, y = src_train.a[idx], src_train.y[idx]
            losses = joint_loss_arrays(model, a, y, bxs, bxt, cfg.alpha)
            if not all(math.isfinite(v) for v in losses):
                raise TrainingError(f"non-finite loss at epoch {epoch}")
            totals += losses
            n_batches += 1
            grads = gradients_arrays(model, a, y, bxs, bxt, cfg.alpha)
            params, state = adam_step(state, model.params(), grads, cfg.learning_rate)
            model = model.replace(**params)
        totals /= n_batches

        src_f1 = _dev_f1(model, src_dev, "source")
        tgt_f1 = _dev_f1(model, tgt_dev, "target")
        cos = holdout_cosine(model, dxs, dxt) if dxs is not None else float("nan")
        trace.records.append(EpochRecord(epoch, *totals.tolist(), src_f1, tgt_f1, cos))
        if on_epoch is not None:
            trace.extras.append(on_epoch(epoch, model))
        key = tgt_f1 if tgt_dev is not None else src_f1
        if math.isnan(key):
            key = -totals[0]
        if best is None or key > best[0]:
            best = (key, model.copy())
            trace.best_epoch = epoch
    assert best is not None
    return best[1], trace


def _dev_f1(model: BlseModel, data: SentenceArrays | None, side: str) -> float:
    if data is None or not len(data.y):
        return float("nan")
    pred = predict_arrays(model, data.a, side).argmax(axis=1)
    return macro_f1(data.y, pred, model.c)


def holdout_cosine(model: BlseModel, xs: np.ndarray, xt: np.ndarray) -> float:
    """Mean cosine between projected source and target vectors of pairs."""
    zs = model.project_source(xs)
    zt = model.project_target(xt)
    num = np.sum(zs * zt, axis=1)
    den = np.linalg.norm(zs, axis=1) * np.linalg.norm(zt, axis=1)
    return float(np.mean(np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)))


# ---------------------------------------------------------------------------
# prediction


@dataclass(frozen=True)
class Prediction:
    probs: np.ndarray
    label: int
    degenerate: bool = False


def predict_arrays(model: BlseModel, a: np.ndarray, side: str) -> np.ndarray:
    """Class probabilities for rows of sentence averages."""
    z = model.project_source(a) if side == "source" else model.project_target(a)
    return softmax(z @ model.P)


def _predict(model: BlseModel, store: EmbeddingStore, tokens: Sequence[str], side: str) -> Prediction:
    sv = average_sentence(store, tokens)
    if sv.degenerate:
        return Prediction(np.full(model.c, 1.0 / model.c), model.majority_label, True)
    probs = predict_arrays(model, sv.values[None, :], side)[0]
    return Prediction(probs, int(np.argmax(probs)))


def predict_source(model: BlseModel, S: EmbeddingStore, tokens: Sequence[str]) -> Prediction:
    return _predict(model, S, tokens, "source")


def predict_target(model: BlseModel, T: EmbeddingStore, tokens: Sequence[str]) -> Prediction:
    return _predict(model, T, tokens, "target")


def predict_corpus(model: BlseModel, store: EmbeddingStore, sentences: Sequence[Sequence[str]],
                   side: str) -> tuple[np.ndarray, np.ndarray]:
    """(probabilities, labels) for many sentences; all-OOV ones get the
    uniform distribution and the training-majority label."""
    a, counts = average_many(store, sentences)
    probs = predict_arrays(model, a, side)
    degenerate = counts == 0
    probs[degenerate] = 1.0 / model.c
    labels = probs.argmax(axis=1)
    labels[degenerate] = model.majority_label
    return probs, labels


# ---------------------------------------------------------------------------
# text serialisation


def save_model(model: BlseModel, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write(f"BLSE 1 {model.d} {model.dprime} {model.k} {model.c} {int(model.ablated)}\n")
        mats = [model.M] + ([] if model.Mprime is None else [model.Mprime]) + [model.P]
        for mat in mats:
            for row in mat:
                f.write(" ".join(f"{x:.17g}" for x in row) + "\n")


def load_model(path: str | Path) -> BlseModel:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 7 or head[:2] != ["BLSE", "1"]:
        raise FormatError(f"{path}: not a BLSE v1 model file")
    try:
        d, dprime, k, c, ablate = (int(x) for x in head[2:])
    except ValueError:
        raise FormatError(f"{path}: malformed header") from None
    shapes = [(d, k)] + ([] if ablate else [(dprime, k)]) + [(k, c)]
    body = lines[1:]
    if len(body) != sum(r for r, _ in shapes):
        raise FormatError(f"{path}: expected {sum(r for r, _ in shapes)} matrix rows, got {len(body)}")
    mats, pos = [], 0
    for rows, cols in shapes:
        try:
            vals = [[float(x) for x in body[pos + i].split()] for i in range(rows)]
        except ValueError:
            raise FormatError(f"{path}: non-numeric matrix entry") from None
        if any(len(r) != cols for r in vals):
            raise FormatError(f"{path}: matrix row arity mismatch")
        mat = np.array(vals, dtype=np.float64).reshape(rows, cols)
        if not np.all(np.isfinite(mat)):
            raise FormatError(f"{path}: non-finite matrix entry")
        mats.append(mat)
        pos += rows
    if ablate:
        return BlseModel(mats[0], None, mats[1])
    return BlseModel(mats[0], mats[1], mats[2])

