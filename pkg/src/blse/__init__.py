"""Bilingual sentiment embeddings: cross-lingual sentiment classification by
jointly learning source and target projections into a shared space."""

from .corpus import LabeledCorpus, Scheme, load_corpus
from .embed_store import EmbeddingStore, load_text_embeddings, save_text_embeddings
from .evaluation import EvalReport, approx_randomization, score
from .lexicon import BilingualLexicon, load_lexicon
from .model import BlseModel, TrainConfig, load_model, predict_corpus, save_model, train
from .synth import SynthConfig, SynthWorld, generate

__version__ = "0.1.0"
