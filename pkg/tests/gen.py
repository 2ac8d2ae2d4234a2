"""Shared test data: the worked example sentence, seeded random trees and
the small grammar corpus used for training tests."""

import numpy as np

from inorder.trees import Internal, Leaf, Token, read_trees

EXAMPLE_TREE_TEXT = ("(S (NP (DT The) (JJ little) (NN boy)) "
                 "(VP (VBZ likes) (NP (JJ red) (NNS tomatoes))) (. .))")

# reference action traces for the sentence above
BOTTOM_UP_TRACE = ("SHIFT SHIFT SHIFT REDUCE_R_NP* REDUCE_R_NP SHIFT SHIFT SHIFT "
                   "REDUCE_R_NP REDUCE_L_VP SHIFT REDUCE_L_S* REDUCE_R_S FINISH").split()
TOP_DOWN_TRACE = ("NT_S NT_NP SHIFT SHIFT SHIFT REDUCE NT_VP SHIFT NT_NP SHIFT "
                  "SHIFT REDUCE REDUCE SHIFT REDUCE").split()
IN_ORDER_TRACE = ("SHIFT PJ_NP SHIFT SHIFT REDUCE PJ_S SHIFT PJ_VP SHIFT PJ_NP "
                  "SHIFT REDUCE REDUCE SHIFT REDUCE FINISH").split()
IN_ORDER_NUMBERING = [3, 2, 4, 5, 1, 7, 6, 9, 8, 10, 11]


def example_tree():
    [(tree, tokens)] = read_trees(EXAMPLE_TREE_TEXT)
    return tree, tokens


RANDOM_LABELS = ["LA", "LB", "LC", "LD", "LE"]
RANDOM_POS = ["N", "V", "D"]
RANDOM_WORDS = ["w%d" % i for i in range(20)]


def random_tree(rng, max_tokens=12, max_children=4, labels=RANDOM_LABELS):
    """A random constituency tree; unary chains are kept at depth <= 2 so
    gold oracles stay inside the default unary budget of every system."""
    n = int(rng.integers(1, max_tokens + 1))
    tokens = [Token(RANDOM_WORDS[rng.integers(len(RANDOM_WORDS))],
                    RANDOM_POS[rng.integers(len(RANDOM_POS))]) for _ in range(n)]

    def pick_label():
        return labels[rng.integers(len(labels))]

    def build(lo, hi):
        if hi - lo == 1:
            node = Leaf(lo)
            wraps = rng.choice([0, 1, 2], p=[0.6, 0.3, 0.1])
            for _ in range(wraps):
                node = Internal(pick_label(), (node,))
            return node
        width = hi - lo
        k = int(rng.integers(2, min(max_children, width) + 1))
        cuts = sorted(rng.choice(np.arange(lo + 1, hi), size=k - 1, replace=False))
        bounds = [lo] + [int(c) for c in cuts] + [hi]
        kids = tuple(build(bounds[i], bounds[i + 1]) for i in range(k))
        node = Internal(pick_label(), kids)
        if rng.random() < 0.15:
            node = Internal(pick_label(), (node,))
        return node

    root = build(0, n)
    if isinstance(root, Leaf):
        root = Internal(pick_label(), (root,))
    return root, tokens


def toy_corpus(n=50, seed=11):
    """Distinct grammar-generated sentences: S -> NP VP . with optional
    adjective and transitive/intransitive verb phrases."""
    rng = np.random.default_rng(seed)
    det = ["the", "a"]
    adj = ["red", "big", "old"]
    noun = ["cat", "dog", "bird", "fish", "fox"]
    tverb = ["sees", "likes", "chases"]
    iverb = ["runs", "sleeps"]

    def choice(xs):
        return xs[rng.integers(len(xs))]

    seen, lines = set(), []
    while len(lines) < n:
        def np_():
            if rng.random() < 0.5:
                d, a, w = choice(det), choice(adj), choice(noun)
                return "(NP (DT %s) (JJ %s) (NN %s))" % (d, a, w), (d, a, w)
            d, w = choice(det), choice(noun)
            return "(NP (DT %s) (NN %s))" % (d, w), (d, w)

        subj, sw = np_()
        if rng.random() < 0.6:
            verb = choice(tverb)
            obj, ow = np_()
            vp, words = "(VP (VB %s) %s)" % (verb, obj), sw + (verb,) + ow
        else:
            verb = choice(iverb)
            vp, words = "(VP (VB %s))" % verb, sw + (verb,)
        if words in seen:
            continue
        seen.add(words)
        lines.append("(S %s %s (. .))" % (subj, vp))
    return read_trees("\n".join(lines))


def toy_embeddings_text(dim=12, seed=5):
    """Pretrained vectors for some toy-corpus words; others stay uncovered
    to exercise the zero-row path."""
    rng = np.random.default_rng(seed)
    words = ["the", "cat", "dog", "sees", "runs", "red", "unrelated"]
    lines = []
    for word in words:
        vec = rng.normal(scale=0.1, size=dim)
        lines.append(word + " " + " ".join("%.6f" % v for v in vec))
    return "\n".join(lines) + "\n"
