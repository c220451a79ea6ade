import csv
import json
import subprocess
import sys

import pytest

from blse.cli import main

WORLD_ARGS = ["--vocab-size", "300", "--dim", "10", "--n-train", "300", "--n-dev", "100",
              "--n-test", "100", "--n-unlabeled", "300", "--n-sentiment-words", "20",
              "--coverage", "0.5", "--seed", "3"]
FAST = ["--epochs", "5"]


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.reader(f))


@pytest.fixture(scope="module")
def world_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("world")
    assert main(["synth-generate", "--out", str(out)] + WORLD_ARGS) == 0
    return out


@pytest.fixture(scope="module")
def trained(world_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("train")
    assert main(["train-blse", "--world", str(world_dir), "--out", str(out)] + FAST) == 0
    return out


def test_synth_generate_writes_world(world_dir):
    for name in ("source.vec", "target.vec", "lexicon.tsv", "source_train.tsv", "target_test.tsv",
                 "target_dev.mt.tsv", "source_unlabeled.txt", "world.json", "manifest.json"):
        assert (world_dir / name).is_file(), name
    manifest = json.loads((world_dir / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["seed"] == 3 and manifest["command"] == "synth-generate"
    assert "source.vec" in manifest["artifacts"]


def test_train_blse_happy_path(trained):
    for name in ("model.blse", "trace.csv", "source_dev_report.csv", "target_dev_report.csv",
                 "target_test_report.csv", "target_test_predictions.csv", "manifest.json"):
        assert (trained / name).is_file(), name
    trace = read_csv(trained / "trace.csv")
    assert trace[0][:2] == ["epoch", "joint_loss"] and len(trace) == 1 + 5
    manifest = json.loads((trained / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["config"]["seed"] == 0 and manifest["config"]["epochs"] == 5
    assert set(manifest["artifacts"]) >= {"model.blse", "trace.csv"}


def test_missing_lexicon_names_the_path(world_dir, tmp_path, capsys):
    missing = tmp_path / "nope.tsv"
    code = main(["train-blse", "--world", str(world_dir), "--lexicon", str(missing),
                 "--out", str(tmp_path / "o")] + FAST)
    assert code != 0
    assert str(missing) in capsys.readouterr().err


def test_grid_mode(world_dir, tmp_path):
    out = tmp_path / "grid"
    assert main(["train-blse", "--world", str(world_dir), "--out", str(out),
                 "--grid-alpha", "0.3,0.6", "--grid-epochs", "2,3"]) == 0
    traces = sorted(p.name for p in out.glob("trace_*.csv"))
    assert len(traces) == 4
    best = read_csv(out / "best_config.csv")
    assert best[0][:3] == ["alpha", "epochs", "batch_size"] and len(best) == 2
    grid = read_csv(out / "grid.csv")
    assert max(float(r[4]) for r in grid[1:]) == float(best[1][4])


def test_eval_model_report(world_dir, trained, tmp_path):
    out = tmp_path / "ev"
    assert main(["eval", "--world", str(world_dir), "--model", str(trained / "model.blse"),
                 "--out", str(out)]) == 0
    rows = read_csv(out / "report.csv")
    macro = next(r for r in rows if r and r[0] == "macro")
    assert 0.0 <= float(macro[3]) <= 1.0
    # same model, same split: identical to the training run's test report
    assert rows == read_csv(trained / "target_test_report.csv")


def test_eval_identical_predictions_p_one(world_dir, trained, tmp_path):
    pred = str(trained / "target_test_predictions.csv")
    out = tmp_path / "sig"
    assert main(["eval", "--world", str(world_dir), "--pred-a", pred, "--pred-b", pred,
                 "--runs", "10000", "--out", str(out)]) == 0
    rows = read_csv(out / "significance.csv")
    assert rows[0] == ["macro_f1_a", "macro_f1_b", "observed_diff", "runs", "p_value"]
    assert float(rows[1][4]) == 1.0 and float(rows[1][2]) == 0.0


def test_eval_class_count_mismatch(world_dir, trained, tmp_path, capsys):
    code = main(["eval", "--world", str(world_dir), "--model", str(trained / "model.blse"),
                 "--scheme", "fourclass", "--out", str(tmp_path / "x")])
    assert code != 0
    assert "classes" in capsys.readouterr().err


def test_baselines(world_dir, tmp_path):
    for method in ("mono", "mt", "artetxe"):
        out = tmp_path / method
        assert main(["baseline", method, "--world", str(world_dir), "--out", str(out)]) == 0
        for name in ("report.csv", "svm.txt", "tuning.csv", "target_test_predictions.csv"):
            assert (out / name).is_file(), (method, name)
    out = tmp_path / "barista"
    assert main(["baseline", "barista", "--world", str(world_dir), "--out", str(out),
                 "--sgns-dim", "10", "--sgns-epochs", "1", "--sgns-min-count", "1",
                 "--sgns-negative", "3"]) == 0
    for name in ("pseudo_corpus.txt", "barista.vec", "report.csv"):
        assert (out / name).is_file(), name


def test_baseline_missing_input(world_dir, tmp_path, capsys):
    code = main(["baseline", "mt", "--world", str(world_dir), "--target-test-mt",
                 str(tmp_path / "gone.tsv"), "--out", str(tmp_path / "o")])
    assert code == 2
    assert "gone.tsv" in capsys.readouterr().err


def test_ensemble_of_identical_files(world_dir, trained, tmp_path):
    dev = str(trained / "target_dev_predictions.csv")
    test = str(trained / "target_test_predictions.csv")
    out = tmp_path / "ens"
    assert main(["ensemble", "--world", str(world_dir), "--train-a", dev, "--train-b", dev,
                 "--test-a", test, "--test-b", test, "--n-trees", "20", "--out", str(out)]) == 0
    summary = {r[0]: float(r[1]) for r in read_csv(out / "summary.csv")[1:]}
    assert summary["ensemble"] == summary["test_a"] == summary["test_b"]
    assert (out / "forest.txt").read_text(encoding="utf-8").startswith("RF 1")


def test_experiments(world_dir, tmp_path):
    out = tmp_path / "sweep"
    assert main(["experiment", "lexicon-sweep", "--world", str(world_dir), "--out", str(out),
                 "--sizes", "0,20,100000"] + FAST) == 0
    rows = read_csv(out / "lexicon_sweep.csv")
    assert rows[0] == ["n_pairs", "best_epoch", "src_dev_f1", "tgt_dev_f1", "tgt_test_f1"]
    assert [int(r[0]) for r in rows[1:]][:2] == [0, 20] and len(rows) == 4

    out = tmp_path / "abl"
    assert main(["experiment", "ablate-mprime", "--world", str(world_dir), "--out", str(out)] + FAST) == 0
    assert (out / "trace_full.csv").is_file() and (out / "trace_ablated.csv").is_file()
    assert [r[0] for r in read_csv(out / "ablation.csv")[1:]] == ["full", "ablated"]

    out = tmp_path / "cos"
    assert main(["experiment", "cosine-trace", "--world", str(world_dir), "--out", str(out)] + FAST) == 0
    header = read_csv(out / "cosine_trace.csv")[0]
    for col in ("src_synonym_cos", "src_antonym_cos", "tgt_synonym_cos", "tgt_antonym_cos",
                "translation_cos"):
        assert col in header
    assert read_csv(out / "projected_vectors.csv")[0][:3] == ["language", "category", "word"]


def test_unknown_experiment_is_rejected(world_dir, tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["experiment", "bogus", "--world", str(world_dir), "--out", str(tmp_path)])
    assert exc.value.code != 0


def test_config_file_and_flag_override(world_dir, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# a comment\nworld = {world_dir}\nepochs = 3\nalpha = 0.5\n", encoding="utf-8")
    out = tmp_path / "a"
    assert main(["train-blse", "--config", str(cfg), "--epochs", "2", "--out", str(out)]) == 0
    conf = json.loads((out / "manifest.json").read_text(encoding="utf-8"))["config"]
    assert conf["epochs"] == 2 and conf["alpha"] == 0.5
    assert len(read_csv(out / "trace.csv")) == 1 + 2


def test_bad_config_file(world_dir, tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n", encoding="utf-8")
    assert main(["train-blse", "--config", str(cfg), "--world", str(world_dir),
                 "--out", str(tmp_path / "o")]) == 2
    assert "colour" in capsys.readouterr().err
    assert main(["train-blse", "--config", str(tmp_path / "none.cfg"), "--out", str(tmp_path / "o")]) == 2


def test_deterministic_outputs(world_dir, tmp_path):
    runs = []
    for name in ("r1", "r2"):
        out = tmp_path / name
        assert main(["train-blse", "--world", str(world_dir), "--out", str(out), "--seed", "7"] + FAST) == 0
        runs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
    assert runs[0] == runs[1] and len(runs[0]) >= 5


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "blse", "train-blse", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert "missing required input" in proc.stderr
