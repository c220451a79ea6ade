"""Command-line interface.

Every subcommand reads its settings from flags and, optionally, a
``key=value`` file given with ``--config`` (flags win). ``--world DIR``
points at a directory written by ``synth-generate`` and fills in every input
path that is not given explicitly. Each run writes its outputs plus a
``manifest.json`` (resolved configuration, seed and SHA-256 of every artifact)
into ``--out``.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import pipelines as pl
from .classifiers import ForestConfig, save_forest, save_svm
from .corpus import Scheme, load_corpus
from .embed_store import SgnsConfig, load_text_embeddings, save_text_embeddings
from .errors import FormatError, TrainingError
from .evaluation import approx_randomization, score
from .lexicon import load_lexicon, split_dev
from .model import TrainConfig, load_model, predict_corpus, save_model, train
from .projections import read_sentences, write_sentences
from .synth import SynthConfig, generate, save_world

logger = logging.getLogger("blse")


class ConfigError(Exception):
    """Invalid or incomplete run configuration (exit status 2)."""


def _bool(text: str | bool) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if x.strip()]


def _opt_int(text: str) -> int | None:
    return None if str(text).lower() in ("", "none") else int(text)


# name -> (type, default, help). Paths default to None.
OPTIONS: dict[str, tuple[Callable[[str], Any], Any, str]] = {
    "seed": (int, 0, "random seed"),
    "scheme": (str, "binary", "label scheme of the corpora (binary or fourclass)"),
    "lexicon_dev_fraction": (float, 0.1, "fraction of lexicon pairs held out for the translation cosine"),
    "source_emb": (str, None, "source embeddings (word2vec text format)"),
    "target_emb": (str, None, "target embeddings (word2vec text format)"),
    "lexicon": (str, None, "bilingual lexicon TSV"),
    "source_train": (str, None, "labelled source training corpus"),
    "source_dev": (str, None, "labelled source dev corpus"),
    "target_train": (str, None, "labelled target training corpus (mono baseline only)"),
    "target_dev": (str, None, "labelled target dev corpus"),
    "target_test": (str, None, "labelled target test corpus"),
    "target_dev_mt": (str, None, "target dev corpus translated into the source language"),
    "target_test_mt": (str, None, "target test corpus translated into the source language"),
    "source_text": (str, None, "unlabelled source text, one sentence per line"),
    "target_text": (str, None, "unlabelled target text, one sentence per line"),
    "source_words": (str, None, "source sentiment word sets (pos|neg<TAB>word)"),
    "target_words": (str, None, "target sentiment word sets (pos|neg<TAB>word)"),
    # BLSE
    "alpha": (float, 0.3, "weight of the sentiment loss"),
    "epochs": (int, 200, "training epochs"),
    "batch_size": (int, 50, "minibatch size"),
    "learning_rate": (float, 0.003, "Adam learning rate"),
    "k": (_opt_int, None, "joint-space dimension (default: source dimension)"),
    "ablate_mprime": (_bool, False, "drop the target projection M'"),
    "grid_alpha": (_floats, None, "comma-separated alpha values for grid mode"),
    "grid_epochs": (_ints, None, "comma-separated epoch counts for grid mode"),
    "grid_batch": (_ints, None, "comma-separated batch sizes for grid mode"),
    # eval
    "model": (str, None, "BLSE model file"),
    "corpus": (str, None, "labelled corpus to evaluate (default: target test)"),
    "side": (str, "target", "language of --corpus (source or target)"),
    "gold": (str, None, "labelled corpus providing gold labels for prediction files"),
    "pred_a": (str, None, "first prediction CSV"),
    "pred_b": (str, None, "second prediction CSV"),
    "runs": (int, 10_000, "approximate randomization runs"),
    # ensemble
    "train_a": (str, None, "system A predictions used to fit the forest (dev)"),
    "train_b": (str, None, "system B predictions used to fit the forest (dev)"),
    "train_gold": (str, None, "gold corpus for --train-a/--train-b (default: target dev)"),
    "test_a": (str, None, "system A predictions to combine (test)"),
    "test_b": (str, None, "system B predictions to combine (test)"),
    "test_gold": (str, None, "gold corpus for --test-a/--test-b (default: target test)"),
    "n_trees": (int, 200, "forest size"),
    "min_samples_leaf": (int, 5, "smallest leaf the forest may create"),
    "guard": (_bool, True, "fall back to the best single system if the forest is worse on dev"),
    "max_depth": (_opt_int, None, "maximum tree depth (default: unlimited)"),
    # baselines
    "orthogonal": (_bool, False, "constrain the Artetxe map to be orthogonal"),
    "sgns_dim": (int, 300, "skip-gram dimension"),
    "sgns_window": (int, 5, "skip-gram window"),
    "sgns_negative": (int, 15, "negative samples per pair"),
    "sgns_epochs": (int, 5, "skip-gram epochs"),
    "sgns_lr": (float, 0.025, "skip-gram initial learning rate"),
    "sgns_subsample": (float, 1e-4, "frequent-word subsampling threshold"),
    "sgns_min_count": (int, 5, "minimum token count"),
    "sgns_batch": (int, 256, "skip-gram minibatch size (pairs)"),
    # experiments
    "sizes": (_ints, list(pl.SWEEP_SIZES), "comma-separated lexicon sizes for the sweep"),
}

SYNTH_OPTIONS = {f.name: f for f in dataclasses.fields(SynthConfig) if f.name != "seed"}

WORLD_FILES = {
    "source_emb": "source.vec", "target_emb": "target.vec", "lexicon": "lexicon.tsv",
    "source_train": "source_train.tsv", "source_dev": "source_dev.tsv",
    "target_train": "target_train.tsv", "target_dev": "target_dev.tsv", "target_test": "target_test.tsv",
    "target_dev_mt": "target_dev.mt.tsv", "target_test_mt": "target_test.mt.tsv",
    "source_text": "source_unlabeled.txt", "target_text": "target_unlabeled.txt",
    "source_words": "source_sentiment_words.tsv", "target_words": "target_sentiment_words.tsv",
}

COMMON = ("seed",)
DATA = ("scheme", "lexicon_dev_fraction", "source_emb", "target_emb", "lexicon", "source_train",
        "source_dev", "target_dev", "target_test")
BLSE = ("alpha", "epochs", "batch_size", "learning_rate", "k", "ablate_mprime")
SGNS = ("sgns_dim", "sgns_window", "sgns_negative", "sgns_epochs", "sgns_lr", "sgns_subsample",
        "sgns_min_count", "sgns_batch")

COMMANDS: dict[str, tuple[str, ...]] = {
    "train-blse": COMMON + DATA + BLSE + ("grid_alpha", "grid_epochs", "grid_batch"),
    "eval": COMMON + ("scheme", "source_emb", "target_emb", "target_test", "model", "corpus", "side",
                      "gold", "pred_a", "pred_b", "runs"),
    "baseline": COMMON + DATA + ("target_train", "target_dev_mt", "target_test_mt", "source_text",
                                 "target_text", "orthogonal") + SGNS,
    "ensemble": COMMON + ("scheme", "target_dev", "target_test", "train_a", "train_b", "train_gold",
                          "test_a", "test_b", "test_gold", "n_trees", "max_depth",
                          "min_samples_leaf", "guard"),
    "experiment": COMMON + DATA + BLSE + ("source_words", "target_words", "sizes"),
    "synth-generate": COMMON,
}


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="blse", description="Bilingual sentiment embeddings toolkit")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, names in COMMANDS.items():
        p = sub.add_parser(cmd)
        if cmd == "baseline":
            p.add_argument("method", choices=("mono", "mt", "artetxe", "barista"))
        elif cmd == "experiment":
            p.add_argument("name", choices=("lexicon-sweep", "ablate-mprime", "cosine-trace"))
        p.add_argument("--config", default=argparse.SUPPRESS, help="key=value file; flags override it")
        p.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
        p.add_argument("--world", default=argparse.SUPPRESS,
                       help="synthetic world directory supplying default input paths")
        for name in names:
            typ, default, text = OPTIONS[name]
            if typ is _bool:
                p.add_argument(_flag(name), nargs="?", const=True, type=_bool,
                               default=argparse.SUPPRESS, help=text)
            else:
                p.add_argument(_flag(name), type=typ, default=argparse.SUPPRESS,
                               help=f"{text} (default: {default})")
        if cmd == "synth-generate":
            for name, f in SYNTH_OPTIONS.items():
                typ = _bool if f.type in (bool, "bool") else (float if f.type in (float, "float") else int)
                p.add_argument(_flag(name), type=typ, default=argparse.SUPPRESS,
                               help=f"default: {f.default}")
    return parser


def read_config_file(path: str | Path) -> dict[str, str]:
    out: dict[str, str] = {}
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{p}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def resolve(ns: argparse.Namespace) -> dict[str, Any]:
    """Merge built-in defaults, world paths, the config file and flags."""
    given = {k: v for k, v in vars(ns).items() if k not in ("verbose",)}
    cmd = given.pop("command")
    positional = {k: given.pop(k) for k in ("method", "name") if k in given}
    file_values = read_config_file(given.pop("config")) if "config" in given else {}
    allowed = set(COMMANDS[cmd]) | {"out", "world"}
    if cmd == "synth-generate":
        allowed |= set(SYNTH_OPTIONS)
    unknown = sorted(set(file_values) - allowed)
    if unknown:
        raise ConfigError(f"unknown config key(s) for {cmd}: {', '.join(unknown)}")

    cfg: dict[str, Any] = {"command": cmd, **positional}
    world = given.get("world", file_values.get("world"))
    cfg["world"] = world
    for name in COMMANDS[cmd]:
        typ, default, _ = OPTIONS[name]
        if name in given:
            cfg[name] = given[name]
        elif name in file_values:
            try:
                cfg[name] = typ(file_values[name])
            except ValueError as exc:
                raise ConfigError(f"config key {name}: {exc}") from None
        elif world is not None and name in WORLD_FILES:
            cfg[name] = str(Path(world) / WORLD_FILES[name])
        else:
            cfg[name] = default
    if cmd == "synth-generate":
        for name, f in SYNTH_OPTIONS.items():
            if name in given:
                cfg[name] = given[name]
            elif name in file_values:
                cfg[name] = type(f.default)(_bool(file_values[name]) if isinstance(f.default, bool)
                                            else file_values[name])
            else:
                cfg[name] = f.default
    out = given.get("out", file_values.get("out"))
    if out is None:
        raise ConfigError("--out is required")
    cfg["out"] = out
    if "scheme" in cfg:
        try:
            cfg["scheme"] = Scheme(cfg["scheme"]).value
        except ValueError:
            raise ConfigError(f"unknown scheme {cfg['scheme']!r}") from None
    return cfg


def require(cfg: dict, *names: str) -> None:
    """Every named path must be configured and exist."""
    for name in names:
        value = cfg.get(name)
        if value is None:
            raise ConfigError(f"missing required input {_flag(name)}")
        if not Path(value).exists():
            raise ConfigError(f"{name.replace('_', ' ')} file not found: {value}")


def optional(cfg: dict, name: str) -> str | None:
    """Configured path if it exists; an explicitly configured missing path is an error."""
    value = cfg.get(name)
    if value is None:
        return None
    if not Path(value).exists():
        if cfg.get("world") is not None and Path(value).parent == Path(cfg["world"]):
            return None
        raise ConfigError(f"{name.replace('_', ' ')} file not found: {value}")
    return value


# ---------------------------------------------------------------------------
# output helpers


def write_rows(path: Path, header, rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "nan" if np.isnan(v) else repr(float(v))
    return str(v)


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(out: Path, cfg: dict) -> None:
    artifacts = {str(p.relative_to(out)): sha256(p) for p in sorted(out.rglob("*"))
                 if p.is_file() and p.name != "manifest.json"}
    manifest = {"command": cfg["command"], "seed": cfg["seed"],
                "config": {k: v for k, v in sorted(cfg.items())}, "artifacts": artifacts}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                                       encoding="utf-8")


# ---------------------------------------------------------------------------
# loading


def _corpus(cfg, name):
    return load_corpus(cfg[name], cfg["scheme"])


def _lexicon(cfg):
    lex = load_lexicon(cfg["lexicon"])
    frac = cfg["lexicon_dev_fraction"]
    if frac > 0 and len(lex) >= 2:
        lex = split_dev(lex, frac, cfg["seed"])
    return lex


def _source_corpus(cfg):
    dev_path = optional(cfg, "source_dev")
    return pl.with_splits(_corpus(cfg, "source_train"),
                          load_corpus(dev_path, cfg["scheme"]) if dev_path else None)


def _train_config(cfg, **overrides) -> TrainConfig:
    base = TrainConfig(alpha=cfg["alpha"], epochs=cfg["epochs"], batch_size=cfg["batch_size"],
                       learning_rate=cfg["learning_rate"], seed=cfg["seed"],
                       ablate_mprime=cfg["ablate_mprime"], k=cfg["k"])
    return dataclasses.replace(base, **overrides)


def _stores(cfg):
    return (load_text_embeddings(cfg["source_emb"], "src"), load_text_embeddings(cfg["target_emb"], "trg"))


def _write_report(out: Path, name: str, gold, pred, c: int) -> float:
    report = score(gold, pred, c)
    report.write_csv(out / name)
    return report.macro_f1


# ---------------------------------------------------------------------------
# subcommands


def cmd_train_blse(cfg: dict, out: Path) -> None:
    require(cfg, "source_emb", "target_emb", "lexicon", "source_train")
    S, T = _stores(cfg)
    lex = _lexicon(cfg)
    src = _source_corpus(cfg)
    tdev_path, ttest_path = optional(cfg, "target_dev"), optional(cfg, "target_test")
    tdev = load_corpus(tdev_path, cfg["scheme"]) if tdev_path else None
    ttest = load_corpus(ttest_path, cfg["scheme"]) if ttest_path else None

    grid = any(cfg[g] is not None for g in ("grid_alpha", "grid_epochs", "grid_batch"))
    if grid:
        points, best = pl.blse_grid(S, T, lex, src, tdev, _train_config(cfg),
                                    cfg["grid_alpha"] or [cfg["alpha"]],
                                    cfg["grid_epochs"] or [cfg["epochs"]],
                                    cfg["grid_batch"] or [cfg["batch_size"]])
        for p in points:
            p.trace.write_csv(out / f"trace_{p.tag}.csv")
        write_rows(out / "grid.csv", ("alpha", "epochs", "batch_size", "best_epoch", "selection_f1"),
                   [(p.alpha, p.epochs, p.batch_size, p.trace.best_epoch, p.selection_f1) for p in points])
        write_rows(out / "best_config.csv", ("alpha", "epochs", "batch_size", "best_epoch", "selection_f1"),
                   [(best.alpha, best.epochs, best.batch_size, best.trace.best_epoch, best.selection_f1)])
        model, trace = best.model, best.trace
    else:
        model, trace = train(S, T, lex, src, _train_config(cfg), target_dev=tdev)
    save_model(model, out / "model.blse")
    trace.write_csv(out / "trace.csv")

    src_dev = src.part("dev")
    if len(src_dev):
        _, pred = predict_corpus(model, S, src_dev.sentences, "source")
        _write_report(out, "source_dev_report.csv", src_dev.labels, pred, model.c)
    for name, corpus in (("target_dev", tdev), ("target_test", ttest)):
        if corpus is None:
            continue
        probs, pred = predict_corpus(model, T, corpus.sentences, "target")
        f1 = _write_report(out, f"{name}_report.csv", corpus.labels, pred, model.c)
        pl.write_predictions(out / f"{name}_predictions.csv", probs, pred)
        logger.info("%s macro F1 %.4f", name, f1)


def cmd_eval(cfg: dict, out: Path) -> None:
    c = Scheme(cfg["scheme"]).n_classes
    if cfg["pred_a"] is not None or cfg["pred_b"] is not None:
        require(cfg, "pred_a", "pred_b")
        gold_path = cfg["gold"] or cfg["corpus"] or cfg["target_test"]
        if gold_path is None:
            raise ConfigError("missing required input --gold")
        require({"gold": gold_path}, "gold")
        gold = np.asarray(load_corpus(gold_path, cfg["scheme"]).labels)
        preds = []
        for name in ("pred_a", "pred_b"):
            labels, probs = pl.read_predictions(cfg[name])
            if probs.shape[1] != c or (len(labels) and labels.max() >= c):
                raise ValueError(f"{cfg[name]}: predictions have {probs.shape[1]} classes, "
                                 f"scheme {cfg['scheme']} has {c}")
            preds.append(labels)
        res = approx_randomization(gold, preds[0], preds[1], runs=cfg["runs"], seed=cfg["seed"], c=c)
        f_a = _write_report(out, "report_a.csv", gold, preds[0], c)
        f_b = _write_report(out, "report_b.csv", gold, preds[1], c)
        write_rows(out / "significance.csv", ("macro_f1_a", "macro_f1_b", "observed_diff", "runs", "p_value"),
                   [(f_a, f_b, res.observed_diff, res.runs, res.p_value)])
        return

    side = cfg["side"]
    if side not in ("source", "target"):
        raise ConfigError(f"--side must be source or target, not {side!r}")
    corpus_path = cfg["corpus"] or cfg["target_test"]
    if corpus_path is None:
        raise ConfigError("missing required input --corpus")
    emb = "source_emb" if side == "source" else "target_emb"
    require({**cfg, "corpus": corpus_path}, "model", "corpus", emb)
    model = load_model(cfg["model"])
    if model.c != c:
        raise ValueError(f"model predicts {model.c} classes but the {cfg['scheme']} scheme has {c}")
    store = load_text_embeddings(cfg[emb])
    corpus = load_corpus(corpus_path, cfg["scheme"])
    probs, pred = predict_corpus(model, store, corpus.sentences, side)
    f1 = _write_report(out, "report.csv", corpus.labels, pred, c)
    pl.write_predictions(out / "predictions.csv", probs, pred)
    logger.info("macro F1 %.4f", f1)


BASELINE_INPUTS = {
    "mono": ("target_emb", "target_train", "target_dev", "target_test"),
    "mt": ("source_emb", "source_train", "target_dev_mt", "target_test_mt"),
    "artetxe": ("source_emb", "target_emb", "lexicon", "source_train", "target_dev", "target_test"),
    "barista": ("source_text", "target_text", "lexicon", "source_train", "target_dev", "target_test"),
}


def cmd_baseline(cfg: dict, out: Path) -> None:
    method = cfg["method"]
    require(cfg, *BASELINE_INPUTS[method])
    seed = cfg["seed"]
    if method == "mono":
        T = load_text_embeddings(cfg["target_emb"], "trg")
        res = pl.run_mono(T, _corpus(cfg, "target_train"), _corpus(cfg, "target_dev"),
                          _corpus(cfg, "target_test"), seed)
    elif method == "mt":
        S = load_text_embeddings(cfg["source_emb"], "src")
        res = pl.run_mt(S, _corpus(cfg, "source_train"), _corpus(cfg, "target_dev_mt"),
                        _corpus(cfg, "target_test_mt"), seed)
    elif method == "artetxe":
        S, T = _stores(cfg)
        res = pl.run_artetxe(S, T, _lexicon(cfg), _corpus(cfg, "source_train"),
                             _corpus(cfg, "target_dev"), _corpus(cfg, "target_test"), seed,
                             orthogonal=cfg["orthogonal"])
    else:
        sg = SgnsConfig(dim=cfg["sgns_dim"], window=cfg["sgns_window"], negative=cfg["sgns_negative"],
                        epochs=cfg["sgns_epochs"], learning_rate=cfg["sgns_lr"],
                        subsample=cfg["sgns_subsample"], min_count=cfg["sgns_min_count"], seed=seed,
                        batch_size=cfg["sgns_batch"])
        res = pl.run_barista(read_sentences(cfg["source_text"]), read_sentences(cfg["target_text"]),
                             _lexicon(cfg), _corpus(cfg, "source_train"), _corpus(cfg, "target_dev"),
                             _corpus(cfg, "target_test"), sg, seed)
        write_sentences(res.info["pseudo_corpus"], out / "pseudo_corpus.txt")
        save_text_embeddings(res.info["embeddings"], out / "barista.vec")
    res.report.write_csv(out / "report.csv")
    save_svm(res.info["svm"], out / "svm.txt")
    write_rows(out / "tuning.csv", ("c", "dev_macro_f1"), res.info["tuning"])
    pl.write_predictions(out / "target_dev_predictions.csv", res.dev_probs)
    pl.write_predictions(out / "target_test_predictions.csv", res.test_probs, res.test_pred)
    logger.info("%s test macro F1 %.4f", method, res.report.macro_f1)


def cmd_ensemble(cfg: dict, out: Path) -> None:
    train_gold = cfg["train_gold"] or cfg["target_dev"]
    test_gold = cfg["test_gold"] or cfg["target_test"]
    paths = {**cfg, "train_gold": train_gold, "test_gold": test_gold}
    require(paths, "train_a", "train_b", "train_gold", "test_a", "test_b", "test_gold")
    c = Scheme(cfg["scheme"]).n_classes
    probs = {}
    for name in ("train_a", "train_b", "test_a", "test_b"):
        _, p = pl.read_predictions(cfg[name])
        if p.shape[1] != c:
            raise ValueError(f"{cfg[name]}: {p.shape[1]} probability columns, scheme has {c} classes")
        probs[name] = p
    ytr = load_corpus(train_gold, cfg["scheme"]).labels
    yte = load_corpus(test_gold, cfg["scheme"]).labels
    fc = ForestConfig(n_trees=cfg["n_trees"], max_depth=cfg["max_depth"], seed=cfg["seed"],
                      min_samples_leaf=cfg["min_samples_leaf"])
    res = pl.run_ensemble([probs["train_a"], probs["train_b"]], ytr,
                          [probs["test_a"], probs["test_b"]], yte, c, fc, guard=cfg["guard"])
    if res.chosen != "forest":
        logger.warning("forest OOB accuracy %.4f is below the best system's dev accuracy %.4f; "
                       "using %s", res.forest_oob, max(res.system_dev_acc), res.chosen)
    res.report.write_csv(out / "report.csv")
    save_forest(res.forest, out / "forest.txt")
    onehot = np.eye(c)[res.pred]
    pl.write_predictions(out / "predictions.csv", onehot, res.pred)
    write_rows(out / "guard.csv", ("chosen", "forest_oob", "dev_acc_a", "dev_acc_b"),
               [(res.chosen, res.forest_oob, *res.system_dev_acc)])
    rows = [("ensemble", res.report.macro_f1)]
    for name in ("test_a", "test_b"):
        rows.append((name, score(yte, probs[name].argmax(axis=1), c).macro_f1))
    write_rows(out / "summary.csv", ("system", "test_macro_f1"), rows)


def cmd_experiment(cfg: dict, out: Path) -> None:
    name = cfg["name"]
    require(cfg, "source_emb", "target_emb", "lexicon", "source_train")
    S, T = _stores(cfg)
    lex = _lexicon(cfg)
    src = _source_corpus(cfg)
    tdev_path, ttest_path = optional(cfg, "target_dev"), optional(cfg, "target_test")
    tdev = load_corpus(tdev_path, cfg["scheme"]) if tdev_path else None
    ttest = load_corpus(ttest_path, cfg["scheme"]) if ttest_path else None
    tc = _train_config(cfg)
    if name == "lexicon-sweep":
        if tdev is None:
            raise ConfigError("lexicon-sweep needs --target-dev")
        rows = pl.lexicon_sweep(S, T, lex, src, tdev, ttest, tc, cfg["sizes"])
        write_rows(out / "lexicon_sweep.csv", pl.SWEEP_HEADER, rows)
    elif name == "ablate-mprime":
        res = pl.ablation(S, T, lex, src, tdev, tc)
        res.full_trace.write_csv(out / "trace_full.csv")
        res.ablated_trace.write_csv(out / "trace_ablated.csv")
        write_rows(out / "ablation.csv", pl.ABLATION_HEADER, res.summary_rows())
    else:
        require(cfg, "source_words")
        sw = pl.read_word_sets(cfg["source_words"])
        tw_path = optional(cfg, "target_words")
        tw = pl.read_word_sets(tw_path) if tw_path else None
        model, trace = pl.cosine_experiment(S, T, lex, src, tdev, tc, sw, tw)
        trace.write_csv(out / "cosine_trace.csv")
        save_model(model, out / "model.blse")
        rows = pl.projected_vector_rows(model, S, T, sw, tw)
        write_rows(out / "projected_vectors.csv", rows[0], rows[1:])


def cmd_synth_generate(cfg: dict, out: Path) -> None:
    sc = SynthConfig(seed=cfg["seed"], **{k: cfg[k] for k in SYNTH_OPTIONS})
    save_world(generate(sc), out)


HANDLERS = {
    "train-blse": cmd_train_blse, "eval": cmd_eval, "baseline": cmd_baseline,
    "ensemble": cmd_ensemble, "experiment": cmd_experiment, "synth-generate": cmd_synth_generate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve(ns)
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        HANDLERS[cfg["command"]](cfg, out)
        write_manifest(out, cfg)
    except ConfigError as exc:
        print(f"blse {ns.command}: error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, TrainingError, ValueError, OSError) as exc:
        print(f"blse {ns.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
