"""Per-sentence SGD training with the decaying learning-rate schedule,
singleton UNK replacement, per-epoch dev evaluation and early stopping."""

from dataclasses import dataclass

import numpy as np

from . import scoring
from .decode import parse_greedy
from .model import UNK, Model, sentence_loss
from .nn import Graph, learning_rate, sgd_update
from .trees import DEFAULT_HEAD_RULES, binarize


@dataclass
class EpochLog:
    epoch: int
    loss: float
    dev_lr: float  # labeled recall, percent; -1 when no dev set
    dev_lp: float
    dev_f1: float
    lr: float


def gold_actions(model: Model, tree, tokens, head_rules=DEFAULT_HEAD_RULES):
    """Oracle sequence for one gold tree under the model's system."""
    system = model.system
    if system.uses_binarized:
        return system.oracle(binarize(tree, head_rules, tokens))
    return system.oracle(tree)


def _train_word_ids(model: Model, tokens, rng):
    """Learned-embedding row per token; singletons become UNK with the
    configured probability (the pretrained lookup still sees the form)."""
    vocab = model.vocab
    prob = model.config.unk_replace_prob
    ids = []
    for tok in tokens:
        wid = vocab.wid(tok.form)
        if prob > 0 and tok.form in vocab.singletons and rng.random() < prob:
            wid = vocab.word_id[UNK]
        ids.append(wid)
    return ids


def evaluate_greedy(model: Model, corpus):
    """Greedy-parse a (tree, tokens) corpus and score against gold."""
    golds, preds = [], []
    for tree, tokens in corpus:
        golds.append((tree, tokens))
        preds.append((parse_greedy(model, tokens).tree, tokens))
    return scoring.score(golds, preds)


def train(model: Model, corpus, dev_corpus=None, epochs=None, patience=None,
          head_rules=DEFAULT_HEAD_RULES, log_fn=None, stop_at_f1=None):
    """Train in place; returns (best_model, [EpochLog]).

    One update per sentence (the summed action losses of that sentence),
    lr = lr0 / (1 + decay * epoch), L2 folded into the update. With a dev
    corpus the best-F1 parameters are kept and training stops after
    `patience` epochs without improvement.
    """
    if not corpus:
        raise ValueError("empty training corpus")
    cfg = model.config
    epochs = cfg.epochs if epochs is None else epochs
    patience = cfg.patience if patience is None else patience
    oracles = [(tokens, gold_actions(model, tree, tokens, head_rules))
               for tree, tokens in corpus]
    rng = np.random.default_rng(cfg.seed)
    best = model.copy()
    best_f1 = -1.0
    stale = 0
    logs = []
    for epoch in range(epochs):
        lr = learning_rate(epoch, cfg.lr0, cfg.lr_decay)
        order = rng.permutation(len(oracles))
        total = 0.0
        for idx in order:
            tokens, actions = oracles[idx]
            word_ids = _train_word_ids(model, tokens, rng)
            g = Graph(model.params)
            loss = sentence_loss(g, model, tokens, actions, word_ids)
            g.backward(loss)
            grads = {name: node.grad for name, node in g._leaves.items()
                     if node.grad is not None}
            sgd_update(model.params, grads, lr, cfg.l2)
            total += float(loss.value)
        entry = EpochLog(epoch, total, -1.0, -1.0, -1.0, lr)
        if dev_corpus is not None:
            report = evaluate_greedy(model, dev_corpus)
            entry.dev_lr, entry.dev_lp, entry.dev_f1 = report.lr, report.lp, report.f1
            if entry.dev_f1 > best_f1:
                best_f1 = entry.dev_f1
                best = model.copy()
                stale = 0
            else:
                stale += 1
        logs.append(entry)
        if log_fn is not None:
            log_fn(entry)
        if dev_corpus is not None and stop_at_f1 is not None and entry.dev_f1 >= stop_at_f1:
            break
        if dev_corpus is not None and stale >= patience:
            break
    if dev_corpus is None:
        best = model.copy()
    return best, logs
