"""Command-line entry points: oracle, train, parse, sample, eval, analyze.

Every command exits 0 on success and nonzero with a one-line
`error: ...` message on stderr otherwise. All randomness flows from a
single --seed (INORDER_SEED is the environment fallback).
"""

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from . import decode, scoring, training, transitions, trees
from .model import (Model, ModelConfig, build_vocabulary, load_model, new_model,
                    read_embeddings, save_model)
from .reports import write_breakdown_tables, write_figures, write_report_files
from .transitions import (make_system, oracle_variant, read_oracle_file,
                          write_oracle_file)
from .trees import DEFAULT_HEAD_RULES, HeadRules, Token, binarize, read_trees, write_tree


class CliError(Exception):
    pass


def _default_seed():
    env = os.environ.get("INORDER_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError("INORDER_SEED=%r is not an integer" % env)
    return 1


def _read_text(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write_text(path, text):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _load_corpus(path):
    return read_trees(_read_text(path))


def _head_rules(path):
    return HeadRules.load(path) if path else DEFAULT_HEAD_RULES


def _parse_k(text):
    if text in ("inf", "INF", "Inf"):
        return math.inf
    return int(text)


# ---------------------------------------------------------------------------
# oracle

def cmd_oracle(args):
    corpus = _load_corpus(args.input)
    rules = _head_rules(args.head_rules)
    k = _parse_k(args.k) if args.k is not None else None
    system = make_system(args.system, [])
    blocks = []
    for tree, tokens in corpus:
        if args.system == transitions.BOTTOM_UP:
            actions = system.oracle(binarize(tree, rules, tokens))
        elif args.system == transitions.TOP_DOWN:
            actions = system.oracle(tree)
        else:
            actions = oracle_variant(tree, 1 if k is None else k)
        blocks.append((tokens, actions))
    _write_text(args.output, write_oracle_file(blocks))
    return 0


# ---------------------------------------------------------------------------
# train

def cmd_train(args):
    config = ModelConfig.from_file(args.config) if args.config else ModelConfig()
    for key in ("epochs", "patience", "unk_replace_prob"):
        value = getattr(args, key)
        if value is not None:
            setattr(config, key, value)
    config.seed = args.seed if args.seed is not None else _default_seed()

    corpus = _load_corpus(args.train)
    if not corpus:
        raise CliError("training treebank %s is empty" % args.train)
    dev = _load_corpus(args.dev) if args.dev else None
    rules = _head_rules(args.head_rules)

    pretrained_words, matrix = [], None
    if args.embeddings:
        pretrained_words, matrix = read_embeddings(args.embeddings, config.pretrained_dim)
    vocab = build_vocabulary(corpus, args.system, config, pretrained_words)
    model = new_model(config, vocab, matrix)

    log_lines = ["epoch\tloss\tdev_LR\tdev_LP\tdev_F1\tlr"]

    def log_fn(entry):
        line = "%d\t%.4f\t%.2f\t%.2f\t%.2f\t%.6f" % (
            entry.epoch, entry.loss, entry.dev_lr, entry.dev_lp, entry.dev_f1, entry.lr)
        log_lines.append(line)
        print(line, file=sys.stderr)

    best, _ = training.train(model, corpus, dev_corpus=dev, head_rules=rules,
                             log_fn=log_fn)
    save_model(best, args.model)
    if args.log:
        _write_text(args.log, "\n".join(log_lines) + "\n")
    return 0


# ---------------------------------------------------------------------------
# parse / sample

def _read_sentences(path):
    """Treebank text or 'form_pos ...' lines; returns list of token lists."""
    text = _read_text(path)
    stripped = text.lstrip()
    if not stripped:
        return []
    if stripped.startswith("("):
        return [tokens for _, tokens in read_trees(text)]
    sentences = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        tokens = []
        for piece in line.split():
            if "_" not in piece:
                raise CliError("token %r is not form_pos" % piece)
            form, pos = piece.rsplit("_", 1)
            tokens.append(Token(form, pos))
        sentences.append(tokens)
    return sentences


def _infer_system(actions):
    kinds = {a.kind for a in actions}
    if "pj" in kinds:
        return transitions.IN_ORDER
    if "nt" in kinds:
        return transitions.TOP_DOWN
    if kinds & {"reduce_lr", "unary"}:
        return transitions.BOTTOM_UP
    return None


def cmd_parse(args):
    if args.from_oracle:
        blocks = read_oracle_file(_read_text(args.from_oracle))
        out = []
        for tokens, actions in blocks:
            name = _infer_system(actions) or args.system
            if name is None:
                raise CliError("cannot infer the system from the oracle file; "
                               "pass --system")
            labels = sorted({a.label.rstrip("*") for a in actions if a.label})
            system = make_system(name, labels)
            tree = system.execute(actions, len(tokens))
            out.append(write_tree(tree, tokens))
        _write_text(args.output, "".join(line + "\n" for line in out))
        return 0

    if not args.model:
        raise CliError("--model is required unless --from-oracle is given")
    model = load_model(args.model)
    if args.system and args.system != model.vocab.system_name:
        raise CliError("model %s was trained for the %s system, not %s"
                       % (args.model, model.vocab.system_name, args.system))
    sentences = _read_sentences(args.input)
    seed = args.seed if args.seed is not None else _default_seed()

    if args.mode == "greedy":
        def work(item):
            _, tokens = item
            return write_tree(decode.parse_greedy(model, tokens).tree, tokens)
    else:
        def work(item):
            index, tokens = item
            derivations = decode.sample(model, tokens, alpha=args.alpha,
                                        count=args.count, seed=seed ^ index)
            return "\n".join("%.6f\t%s" % (d.log_prob, write_tree(d.tree, tokens))
                             for d in derivations)

    items = list(enumerate(sentences))
    if args.jobs > 1 and items:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(work, items))
    else:
        results = [work(item) for item in items]

    if args.mode == "greedy":
        _write_text(args.output, "".join(line + "\n" for line in results))
    else:
        _write_text(args.output, "\n\n".join(results) + ("\n" if results else ""))
    return 0


# ---------------------------------------------------------------------------
# eval / analyze

def _eval_config(args):
    punct = frozenset(args.punct.split(",")) if args.punct is not None \
        else scoring.DEFAULT_PUNCT
    roots = frozenset(args.root_labels.split(",")) if args.root_labels is not None \
        else scoring.DEFAULT_ROOT_LABELS
    label_map = {"PRT": "ADVP"} if args.prt_advp else {}
    return scoring.EvalConfig(punct_pos=punct, exclude_root_labels=roots,
                              label_map=label_map)


def _score_files(args):
    gold = _load_corpus(args.gold)
    pred = _load_corpus(args.pred)
    return scoring.score(gold, pred, _eval_config(args), jobs=args.jobs)


def cmd_eval(args):
    report = _score_files(args)
    if args.outdir:
        for path in write_report_files(report, args.outdir):
            print(path, file=sys.stderr)
    sys.stdout.write(report.to_kv())
    return 0


def cmd_analyze(args):
    report = _score_files(args)
    outdir = args.outdir or "."
    paths = write_report_files(report, outdir)
    paths += write_breakdown_tables(report, outdir)
    paths += write_figures(report, outdir)
    for path in paths:
        print(path, file=sys.stderr)
    sys.stdout.write(report.to_kv())
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    top = argparse.ArgumentParser(prog="inorder", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle", help="gold trees to action sequences")
    p.add_argument("--input", required=True, help="bracketed treebank file")
    p.add_argument("--system", required=True, choices=transitions.SYSTEMS)
    p.add_argument("--k", default=None,
                   help="traversal variant for in-order oracles (default 1)")
    p.add_argument("--head-rules", default=None)
    p.add_argument("--output", "-o", required=True)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--train", required=True)
    p.add_argument("--dev", default=None)
    p.add_argument("--system", required=True, choices=transitions.SYSTEMS)
    p.add_argument("--config", default=None, help="key=value hyperparameter file")
    p.add_argument("--embeddings", default=None, help="pretrained embedding text file")
    p.add_argument("--head-rules", default=None)
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--log", default=None, help="per-epoch TSV log file")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--unk-replace-prob", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_train)

    for name, default_mode in (("parse", "greedy"), ("sample", "sample")):
        p = sub.add_parser(name, help="parse sentences with a trained model")
        p.add_argument("--model", default=None)
        p.add_argument("--input", required=True,
                       help="treebank or form_pos lines (tags are taken as given)")
        p.add_argument("--output", "-o", required=True)
        p.add_argument("--mode", choices=("greedy", "sample"), default=default_mode)
        p.add_argument("--alpha", type=float, default=decode.DEFAULT_ALPHA)
        p.add_argument("--count", type=int, default=decode.DEFAULT_SAMPLES)
        p.add_argument("--system", default=None, choices=transitions.SYSTEMS)
        p.add_argument("--from-oracle", default=None,
                       help="execute an oracle file instead of decoding")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("--seed", type=int, default=None)
        p.set_defaults(fn=cmd_parse)

    for name, fn in (("eval", cmd_eval), ("analyze", cmd_analyze)):
        p = sub.add_parser(name, help="bracket scoring" if name == "eval"
                           else "scoring plus breakdown tables and figures")
        p.add_argument("--gold", required=True)
        p.add_argument("--pred", required=True)
        p.add_argument("--outdir", default=None if name == "eval" else ".")
        p.add_argument("--punct", default=None,
                       help="comma-separated POS tags to delete (evalb style)")
        p.add_argument("--root-labels", default=None,
                       help="comma-separated wrapper labels whose root bracket is dropped")
        p.add_argument("--prt-advp", action="store_true",
                       help="score PRT as ADVP")
        p.add_argument("--jobs", type=int, default=1)
        p.set_defaults(fn=fn)

    return top


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CliError, trees.TreeError, transitions.TransitionError,
            scoring.ScoreError, decode.DecodeError, ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
