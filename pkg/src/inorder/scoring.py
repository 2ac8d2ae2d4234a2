"""Labeled bracket scoring in the evalb tradition, with per-label,
per-sentence-length and per-span-length breakdowns.

Punctuation POS tags are removed from span indexing (default set follows
the usual COLLINS parameter file), and a TOP/ROOT wrapper bracket is
dropped; everything is configurable.
"""

from collections import Counter
from dataclasses import dataclass, field

from .trees import Leaf

# POS tags deleted before span indexing, per the standard evalb setup
DEFAULT_PUNCT = frozenset({"``", "''", ".", ",", ":"})
DEFAULT_ROOT_LABELS = frozenset({"TOP", "ROOT"})
SPAN_LENGTH_CAP = 14  # the last span-length bucket is "14 and longer"


class ScoreError(Exception):
    pass


@dataclass(frozen=True)
class EvalConfig:
    punct_pos: frozenset = DEFAULT_PUNCT
    exclude_root_labels: frozenset = DEFAULT_ROOT_LABELS
    # optional label equivalence, e.g. {"PRT": "ADVP"} for the classic
    # ADVP/PRT merge; off by default
    label_map: dict = field(default_factory=dict)


def brackets(tree, tokens, config: EvalConfig = EvalConfig()) -> Counter:
    """Multiset of (label, start, end) spans over punctuation-free indices.

    Nodes covering only punctuation yield no bracket; the root bracket is
    kept unless its label is a TOP/ROOT wrapper.
    """
    index = {}
    nxt = 0
    for i, tok in enumerate(tokens):
        if tok.pos not in config.punct_pos:
            index[i] = nxt
            nxt += 1
    out = Counter()

    def walk(node, is_root):
        if isinstance(node, Leaf):
            i = index.get(node.index)
            return (i, i + 1) if i is not None else None
        lo = hi = None
        for child in node.children:
            span = walk(child, False)
            if span is not None:
                lo = span[0] if lo is None else min(lo, span[0])
                hi = span[1] if hi is None else max(hi, span[1])
        if lo is None:
            return None
        if not (is_root and node.label in config.exclude_root_labels):
            label = config.label_map.get(node.label, node.label)
            out[(label, lo, hi)] += 1
        return (lo, hi)

    walk(tree, True)
    return out


def _prf(correct, gold, pred):
    r = 100.0 * correct / gold if gold else 0.0
    p = 100.0 * correct / pred if pred else 0.0
    f = 2 * r * p / (r + p) if r + p > 0 else 0.0
    return r, p, f


@dataclass
class LabelRow:
    label: str
    gold: int = 0
    pred: int = 0
    correct: int = 0

    @property
    def f1(self):
        return _prf(self.correct, self.gold, self.pred)[2]


@dataclass
class BinRow:
    key: int
    gold: int = 0
    pred: int = 0
    correct: int = 0

    @property
    def f1(self):
        return _prf(self.correct, self.gold, self.pred)[2]


@dataclass
class EvalReport:
    lr: float
    lp: float
    f1: float
    sentences: int
    matched_sentences: int
    gold_total: int
    pred_total: int
    correct_total: int
    per_label: dict        # label -> LabelRow
    len_bins: dict         # upper bin edge (10, 20, ...) -> BinRow
    span_bins: dict        # span length 1..14 (14 = longer too) -> BinRow

    def kv_lines(self):
        lines = ["LR %.2f" % self.lr, "LP %.2f" % self.lp, "F1 %.2f" % self.f1,
                 "sentences %d" % self.sentences,
                 "matched_sentences %d" % self.matched_sentences,
                 "gold_brackets %d" % self.gold_total,
                 "pred_brackets %d" % self.pred_total,
                 "correct_brackets %d" % self.correct_total]
        for label in sorted(self.per_label):
            row = self.per_label[label]
            lines.append("per_label.%s.f1 %.2f" % (label, row.f1))
        for key in sorted(self.len_bins):
            lines.append("len_bin.%d.f1 %.2f" % (key, self.len_bins[key].f1))
        for key in sorted(self.span_bins):
            lines.append("span_len.%d.f1 %.2f" % (key, self.span_bins[key].f1))
        return lines

    def to_kv(self):
        return "\n".join(self.kv_lines()) + "\n"

    def to_text(self):
        out = ["labeled recall    LR = %6.2f" % self.lr,
               "labeled precision LP = %6.2f" % self.lp,
               "labeled F1            = %6.2f" % self.f1,
               "sentences %d, exact matches %d" % (self.sentences, self.matched_sentences),
               "brackets: gold %d, predicted %d, correct %d"
               % (self.gold_total, self.pred_total, self.correct_total),
               "",
               "%-8s %6s %6s %8s %7s" % ("label", "gold", "pred", "correct", "F1")]
        for label in sorted(self.per_label,
                            key=lambda l: -self.per_label[l].gold):
            row = self.per_label[label]
            out.append("%-8s %6d %6d %8d %7.2f"
                       % (label, row.gold, row.pred, row.correct, row.f1))
        out.append("")
        out.append("%-18s %6s %6s %8s %7s" % ("sentence length", "gold", "pred",
                                              "correct", "F1"))
        for key in sorted(self.len_bins):
            row = self.len_bins[key]
            out.append("[%3d, %3d)         %6d %6d %8d %7.2f"
                       % (key - 10, key, row.gold, row.pred, row.correct, row.f1))
        out.append("")
        out.append("%-18s %6s %6s %8s %7s" % ("span length", "gold", "pred",
                                              "correct", "F1"))
        for key in sorted(self.span_bins):
            name = "%d" % key if key < SPAN_LENGTH_CAP else "%d+" % key
            row = self.span_bins[key]
            out.append("%-18s %6d %6d %8d %7.2f"
                       % (name, row.gold, row.pred, row.correct, row.f1))
        return "\n".join(out) + "\n"


def length_bin(n_tokens: int) -> int:
    """Upper edge of the size-10 bin: bin 20 holds lengths in [10, 20)."""
    return 10 * (n_tokens // 10 + 1)


def span_bin(length: int) -> int:
    return min(length, SPAN_LENGTH_CAP)


def score(gold_pairs, pred_pairs, config: EvalConfig = EvalConfig(),
          jobs: int = 1) -> EvalReport:
    """Score (tree, tokens) lists against each other.

    Mismatched list lengths or per-pair token counts are hard errors.
    Per-sentence bracket extraction is pure, so jobs > 1 fans it out over
    threads; the count reduction is order-independent.
    """
    if len(gold_pairs) != len(pred_pairs):
        raise ScoreError("gold has %d sentences, prediction has %d"
                         % (len(gold_pairs), len(pred_pairs)))
    bad = [i for i, ((_, gt), (_, pt)) in enumerate(zip(gold_pairs, pred_pairs))
           if len(gt) != len(pt)]
    if bad:
        raise ScoreError("token count mismatch at sentence indices %s"
                         % ", ".join(map(str, bad)))

    def extract(pair):
        (gtree, gtoks), (ptree, _) = pair
        return brackets(gtree, gtoks, config), brackets(ptree, gtoks, config)

    pairs = list(zip(gold_pairs, pred_pairs))
    if jobs > 1 and pairs:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            extracted = list(pool.map(extract, pairs))
    else:
        extracted = [extract(pair) for pair in pairs]

    gold_total = pred_total = correct_total = matched = 0
    per_label = {}
    len_bins = {}
    span_bins = {}

    def label_row(label):
        return per_label.setdefault(label, LabelRow(label))

    def bin_row(table, key):
        return table.setdefault(key, BinRow(key))

    for ((gtree, gtoks), _), (gb, pb) in zip(pairs, extracted):
        inter = gb & pb
        gold_total += sum(gb.values())
        pred_total += sum(pb.values())
        correct_total += sum(inter.values())
        if gb == pb:
            matched += 1
        lbin = bin_row(len_bins, length_bin(len(gtoks)))
        lbin.gold += sum(gb.values())
        lbin.pred += sum(pb.values())
        lbin.correct += sum(inter.values())
        for (label, s, e), c in gb.items():
            label_row(label).gold += c
            bin_row(span_bins, span_bin(e - s)).gold += c
        for (label, s, e), c in pb.items():
            label_row(label).pred += c
            bin_row(span_bins, span_bin(e - s)).pred += c
        for (label, s, e), c in inter.items():
            label_row(label).correct += c
            bin_row(span_bins, span_bin(e - s)).correct += c

    lr, lp, f1 = _prf(correct_total, gold_total, pred_total)
    return EvalReport(lr=lr, lp=lp, f1=f1, sentences=len(gold_pairs),
                      matched_sentences=matched, gold_total=gold_total,
                      pred_total=pred_total, correct_total=correct_total,
                      per_label=per_label, len_bins=len_bins, span_bins=span_bins)
