import os

import numpy as np
import pytest

from gen import (BOTTOM_UP_TRACE, EXAMPLE_TREE_TEXT, IN_ORDER_TRACE, TOP_DOWN_TRACE,
                 toy_corpus, toy_embeddings_text)
from inorder.cli import main
from inorder.trees import read_trees, write_trees

TINY_CONFIG = """
lstm_input_dim=16
lstm_hidden_dim=16
word_dim=6
pos_dim=4
action_dim=5
pretrained_dim=12
unk_replace_prob=0.0
epochs=2
"""


@pytest.fixture
def example_file(tmp_path):
    path = tmp_path / "example.mrg"
    path.write_text(EXAMPLE_TREE_TEXT + "\n")
    return str(path)


@pytest.fixture
def toy_files(tmp_path):
    corpus = toy_corpus(n=8, seed=3)
    tb = tmp_path / "toy.mrg"
    tb.write_text(write_trees(corpus))
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text(TINY_CONFIG)
    emb = tmp_path / "emb.txt"
    emb.write_text(toy_embeddings_text(dim=12))
    return str(tb), str(cfg), str(emb)


def read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def oracle_blocks(text):
    return [block.splitlines() for block in text.strip().split("\n\n")]


def test_oracle_command_reproduces_reference_sequences(example_file, tmp_path):
    expected = {"bottom-up": BOTTOM_UP_TRACE, "top-down": TOP_DOWN_TRACE,
                "in-order": IN_ORDER_TRACE}
    for system, trace in expected.items():
        out = str(tmp_path / (system + ".oracle"))
        assert main(["oracle", "--input", example_file, "--system", system,
                     "--output", out]) == 0
        [block] = oracle_blocks(read(out))
        assert block[0].split()[0] == "The_DT"
        assert block[1:] == trace


def test_oracle_k_variant(example_file, tmp_path):
    out = str(tmp_path / "k2.oracle")
    assert main(["oracle", "--input", example_file, "--system", "in-order",
                 "--k", "2", "--output", out]) == 0
    [block] = oracle_blocks(read(out))
    # k=2: S is projected after its second child (the VP) is complete
    assert block[1] == "SHIFT"
    assert "PJ_S" in block
    assert block.index("PJ_S") > block.index("PJ_VP")


def test_parse_from_oracle_round_trip(example_file, tmp_path):
    for system in ("bottom-up", "top-down", "in-order"):
        oracle_path = str(tmp_path / "o")
        main(["oracle", "--input", example_file, "--system", system, "--output",
              oracle_path])
        out = str(tmp_path / "trees.out")
        assert main(["parse", "--from-oracle", oracle_path, "--input", example_file,
                     "--output", out]) == 0
        assert read_trees(read(out)) == read_trees(EXAMPLE_TREE_TEXT)


def test_parse_from_oracle_round_trip_random_corpus(tmp_path):
    import numpy as np
    from gen import random_tree
    rng = np.random.default_rng(55)
    corpus = [random_tree(rng, max_tokens=10) for _ in range(150)]
    tb = tmp_path / "rand.mrg"
    tb.write_text(write_trees(corpus))
    for system in ("bottom-up", "top-down", "in-order"):
        oracle_path = str(tmp_path / ("r-" + system))
        assert main(["oracle", "--input", str(tb), "--system", system,
                     "--output", oracle_path]) == 0
        out = str(tmp_path / ("rt-" + system))
        assert main(["parse", "--from-oracle", oracle_path, "--input", str(tb),
                     "--output", out]) == 0
        assert read_trees(read(out)) == corpus


def train_quick(toy_files, tmp_path, system="in-order", seed="5", extra=()):
    tb, cfg, emb = toy_files
    model = str(tmp_path / ("model-%s-%s.bin" % (system, seed)))
    log = str(tmp_path / "train.log")
    code = main(["train", "--train", tb, "--dev", tb, "--system", system,
                 "--config", cfg, "--embeddings", emb, "--model", model,
                 "--log", log, "--seed", seed, *extra])
    assert code == 0
    return model, log


def test_train_writes_model_and_log(toy_files, tmp_path, capsys):
    model, log = train_quick(toy_files, tmp_path)
    assert os.path.getsize(model) > 0
    lines = read(log).strip().splitlines()
    assert lines[0].split("\t") == ["epoch", "loss", "dev_LR", "dev_LP",
                                    "dev_F1", "lr"]
    assert len(lines) == 3  # header + 2 epochs
    first = lines[1].split("\t")
    assert first[0] == "0"
    assert float(first[-1]) == 0.1  # lr at epoch 0


def test_train_deterministic_model_files(toy_files, tmp_path):
    m1, _ = train_quick(toy_files, tmp_path, seed="9")
    os.rename(m1, m1 + ".first")
    m2, _ = train_quick(toy_files, tmp_path, seed="9")
    with open(m1 + ".first", "rb") as a, open(m2, "rb") as b:
        assert a.read() == b.read()


def test_parse_greedy_and_eval_round_trip(toy_files, tmp_path, capsys):
    tb, cfg, emb = toy_files
    model, _ = train_quick(toy_files, tmp_path)
    pred = str(tmp_path / "pred.mrg")
    assert main(["parse", "--model", model, "--input", tb, "--output", pred]) == 0
    parsed = read_trees(read(pred))
    assert len(parsed) == len(read_trees(read(tb)))
    assert main(["eval", "--gold", tb, "--pred", pred]) == 0
    out = capsys.readouterr().out
    assert out.startswith("LR ")
    assert "F1 " in out


def test_parse_rejects_system_mismatch(toy_files, tmp_path, capsys):
    tb, _, _ = toy_files
    model, _ = train_quick(toy_files, tmp_path)
    code = main(["parse", "--model", model, "--input", tb, "--output",
                 str(tmp_path / "x"), "--system", "top-down"])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_parse_greedy_deterministic(toy_files, tmp_path):
    tb, _, _ = toy_files
    model, _ = train_quick(toy_files, tmp_path)
    out1, out2 = str(tmp_path / "p1"), str(tmp_path / "p2")
    main(["parse", "--model", model, "--input", tb, "--output", out1])
    main(["parse", "--model", model, "--input", tb, "--output", out2, "--jobs", "2"])
    assert read(out1) == read(out2)


def test_sample_output_format(toy_files, tmp_path):
    tb, _, _ = toy_files
    model, _ = train_quick(toy_files, tmp_path)
    out = str(tmp_path / "samples.txt")
    assert main(["sample", "--model", model, "--input", tb, "--output", out,
                 "--count", "5", "--seed", "2"]) == 0
    blocks = read(out).strip().split("\n\n")
    assert len(blocks) == len(read_trees(read(tb)))
    for block in blocks:
        lines = block.splitlines()
        assert len(lines) == 5
        lps = []
        for line in lines:
            lp, tree_text = line.split("\t")
            lps.append(float(lp))
            assert lp.lstrip("-").replace(".", "").isdigit()
            assert read_trees(tree_text)
        assert lps == sorted(lps, reverse=True)


def test_sample_seed_reproducible(toy_files, tmp_path):
    tb, _, _ = toy_files
    model, _ = train_quick(toy_files, tmp_path)
    a, b = str(tmp_path / "sa"), str(tmp_path / "sb")
    main(["sample", "--model", model, "--input", tb, "--output", a,
          "--count", "4", "--seed", "3"])
    main(["sample", "--model", model, "--input", tb, "--output", b,
          "--count", "4", "--seed", "3"])
    assert read(a) == read(b)


def test_parse_token_line_input(toy_files, tmp_path):
    model, _ = train_quick(toy_files, tmp_path)
    sents = tmp_path / "sents.txt"
    sents.write_text("the_DT cat_NN runs_VB ._.\n")
    out = str(tmp_path / "out.mrg")
    assert main(["parse", "--model", model, "--input", str(sents),
                 "--output", out]) == 0
    [(tree, tokens)] = read_trees(read(out))
    assert [t.form for t in tokens] == ["the", "cat", "runs", "."]


def test_parse_empty_input_empty_output(toy_files, tmp_path):
    model, _ = train_quick(toy_files, tmp_path)
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    out = str(tmp_path / "out.txt")
    assert main(["parse", "--model", model, "--input", str(empty),
                 "--output", out]) == 0
    assert read(out) == ""


def test_eval_outdir_and_analyze(example_file, tmp_path, capsys):
    outdir = str(tmp_path / "report")
    assert main(["eval", "--gold", example_file, "--pred", example_file,
                 "--outdir", outdir]) == 0
    assert os.path.exists(os.path.join(outdir, "report.txt"))
    assert os.path.exists(os.path.join(outdir, "report.kv"))
    outdir2 = str(tmp_path / "analysis")
    assert main(["analyze", "--gold", example_file, "--pred", example_file,
                 "--outdir", outdir2]) == 0
    for name in ["report.txt", "report.kv", "per_label.tsv", "len_bins.tsv",
                 "span_lengths.tsv", "f1_by_sentence_length.png",
                 "f1_by_span_length.png", "per_label_f1.png"]:
        assert os.path.exists(os.path.join(outdir2, name)), name
    kv = dict(l.split(" ", 1) for l in capsys.readouterr().out.strip().splitlines())
    assert kv["F1"] == "100.00"


def test_error_exit_code_and_message(tmp_path, capsys):
    code = main(["eval", "--gold", str(tmp_path / "nope"), "--pred",
                 str(tmp_path / "nope")])
    assert code == 1
    err = capsys.readouterr().err
    assert err.startswith("error: ")
    assert len(err.strip().splitlines()) == 1


def test_inorder_seed_env_fallback(toy_files, tmp_path, monkeypatch):
    from inorder.model import load_model
    monkeypatch.setenv("INORDER_SEED", "33")
    tb, cfg, emb = toy_files
    model_path = str(tmp_path / "env.bin")
    assert main(["train", "--train", tb, "--system", "in-order", "--config", cfg,
                 "--model", model_path]) == 0
    assert load_model(model_path).config.seed == 33


def test_cli_flag_overrides_conexample_file(toy_files, tmp_path):
    from inorder.model import load_model
    # the config file says epochs=2; the flag must win
    model, log = train_quick(toy_files, tmp_path, extra=("--epochs", "1"))
    assert load_model(model).config.epochs == 1
    assert len(read(log).strip().splitlines()) == 2  # header + 1 epoch


def test_bad_env_seed(monkeypatch, toy_files, tmp_path, capsys):
    monkeypatch.setenv("INORDER_SEED", "not-a-number")
    tb, cfg, _ = toy_files
    code = main(["train", "--train", tb, "--system", "in-order", "--config", cfg,
                 "--model", str(tmp_path / "x.bin")])
    assert code == 1
    assert "INORDER_SEED" in capsys.readouterr().err
