"""Bracketed constituency trees: reading, writing, binarization.

Trees are immutable. Leaves index into a separate token list so the same
tree machinery serves gold trees, binarized trees (which carry head marks
and incompleteness stars on their labels) and decoder output.
"""

from dataclasses import dataclass
from typing import Iterator, Optional, Union


class TreeError(Exception):
    pass


@dataclass(frozen=True)
class Token:
    form: str
    pos: str

    def __post_init__(self):
        if not self.form or not self.pos:
            raise TreeError("token form and POS must be non-empty")


@dataclass(frozen=True)
class Leaf:
    index: int


@dataclass(frozen=True)
class Internal:
    label: str
    children: tuple
    # 'l'/'r' when the node came out of head-driven binarization, else None.
    head: Optional[str] = None
    # True on intermediate nodes introduced by binarization.
    star: bool = False

    def __post_init__(self):
        if not self.children:
            raise TreeError("internal node %r has no children" % self.label)


Tree = Union[Leaf, Internal]


def is_leaf(node: Tree) -> bool:
    return isinstance(node, Leaf)


def leaves(node: Tree) -> Iterator[Leaf]:
    if isinstance(node, Leaf):
        yield node
    else:
        for child in node.children:
            yield from leaves(child)


def leaf_indices(node: Tree) -> list:
    return [leaf.index for leaf in leaves(node)]


def internal_nodes(node: Tree) -> Iterator[Internal]:
    if isinstance(node, Internal):
        yield node
        for child in node.children:
            yield from internal_nodes(child)


def validate(tree: Tree, n_tokens: int) -> None:
    """Check that the leaves cover 0..n-1 left to right, exactly once."""
    idx = leaf_indices(tree)
    if idx != list(range(n_tokens)):
        raise TreeError("leaves %r do not cover token range 0..%d" % (idx, n_tokens - 1))


def marked_label(node: Internal) -> str:
    """Label with head mark and star as serialized, e.g. 'NP-r*'."""
    out = node.label
    if node.head is not None:
        out += "-" + node.head
    if node.star:
        out += "*"
    return out


def star_label(node: Internal) -> str:
    """Label plus star but no head mark: the symbol actions and embeddings use."""
    return node.label + "*" if node.star else node.label


def split_label(raw: str, strip_tags: bool = True):
    """Split a serialized label into (base, head_mark, star).

    Head marks ('-l'/'-r') and the trailing star are our own serialization;
    function tags after '-' or '=' are stripped from gold labels when
    strip_tags is set (the '-LRB-' style POS tags never reach this code
    path: it is applied to internal-node labels only).
    """
    star = raw.endswith("*")
    if star:
        raw = raw[:-1]
    head = None
    if raw[-2:] in ("-l", "-r") and len(raw) > 2:
        head = raw[-1]
        raw = raw[:-2]
    if strip_tags:
        for sep in "-=":
            cut = raw.find(sep, 1)
            if cut != -1:
                raw = raw[:cut]
    return raw, head, star


_ESCAPES = [("(", "-LRB-"), (")", "-RRB-")]


def escape_form(form: str) -> str:
    for raw, esc in _ESCAPES:
        form = form.replace(raw, esc)
    return form


def unescape_form(form: str) -> str:
    for raw, esc in _ESCAPES:
        form = form.replace(esc, raw)
    return form


def _tokenize(text: str):
    """Yield (piece, line, col) with brackets split out of atoms."""
    line, col = 1, 1
    atom, atom_pos = [], None
    for ch in text:
        if ch in "()" or ch.isspace():
            if atom:
                yield "".join(atom), atom_pos[0], atom_pos[1]
                atom = []
            if ch in "()":
                yield ch, line, col
        else:
            if not atom:
                atom_pos = (line, col)
            atom.append(ch)
        if ch == "\n":
            line += 1
            col = 1
        else:
            col += 1
    if atom:
        yield "".join(atom), atom_pos[0], atom_pos[1]


def read_trees(text: str, strip_tags: bool = True):
    """Parse bracketed treebank text into a list of (tree, tokens) pairs.

    Accepts one tree per line or pretty-printed spans; a single unlabeled
    outer pair '( ... )' around a tree is unwrapped, per treebank
    convention. Raises TreeError with line/column on malformed input.
    """
    pieces = list(_tokenize(text))
    results = []
    pos = 0

    def err(msg, at):
        raise TreeError("%s at line %d, column %d" % (msg, at[1], at[2]))

    def parse_group(tokens):
        nonlocal pos
        opener = pieces[pos]
        pos += 1  # past '('
        parts = []
        atoms = []
        while True:
            if pos >= len(pieces):
                err("unbalanced brackets: unclosed '('", opener)
            piece = pieces[pos]
            if piece[0] == ")":
                pos += 1
                break
            if piece[0] == "(":
                parts.append(parse_group(tokens))
            else:
                if parts:
                    err("atom %r after a subtree in one constituent" % piece[0], piece)
                atoms.append(piece)
                pos += 1
        if not parts and not atoms:
            err("empty constituent '()'", opener)
        if not parts:
            if len(atoms) == 1:
                err("constituent with a bare label and no children", opener)
            if len(atoms) != 2:
                err("leaf must be '(POS word)', got %d atoms" % len(atoms), opener)
            tag, word = atoms[0][0], atoms[1][0]
            tokens.append(Token(unescape_form(word), tag))
            return Leaf(len(tokens) - 1)
        if len(atoms) > 1:
            err("leaf atoms mixed with subtrees in one constituent", opener)
        if not atoms:
            # unlabeled group: legal only as a single-child outer wrapper
            if len(parts) == 1:
                return parts[0]
            err("unlabeled constituent with %d children" % len(parts), opener)
        base, head, star = split_label(atoms[0][0], strip_tags=strip_tags)
        return Internal(base, tuple(parts), head=head, star=star)

    while pos < len(pieces):
        piece = pieces[pos]
        if piece[0] == ")":
            err("unbalanced brackets: stray ')'", piece)
        if piece[0] != "(":
            err("unexpected token %r outside any tree" % piece[0], piece)
        tokens = []
        tree = parse_group(tokens)
        if isinstance(tree, Leaf) and not tokens:
            raise TreeError("internal error: leaf without token")
        results.append((tree, tokens))
    return results


def write_tree(tree: Tree, tokens) -> str:
    if isinstance(tree, Leaf):
        tok = tokens[tree.index]
        return "(%s %s)" % (tok.pos, escape_form(tok.form))
    inner = " ".join(write_tree(c, tokens) for c in tree.children)
    return "(%s %s)" % (marked_label(tree), inner)


def write_trees(pairs) -> str:
    """Inverse of read_trees: one tree per line."""
    return "".join(write_tree(t, toks) + "\n" for t, toks in pairs)


def read_treebank_file(path: str, strip_tags: bool = True):
    with open(path, encoding="utf-8") as fh:
        return read_trees(fh.read(), strip_tags=strip_tags)


class HeadRules:
    """Per-label head-child directives plus a rightmost-child default.

    Each rule is (direction, priority list): scan the children in the given
    direction once per priority label and take the first hit; fall back to
    the direction-most child, and to the rightmost child when no rule
    exists for the parent label.
    """

    def __init__(self, rules=None):
        self.rules = dict(rules or {})

    @classmethod
    def from_text(cls, text: str) -> "HeadRules":
        rules = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) < 2 or fields[1] not in ("left", "right"):
                raise TreeError(
                    "head-rule line %d must be 'LABEL left|right child...'" % lineno)
            rules[fields[0]] = (fields[1], tuple(fields[2:]))
        return cls(rules)

    @classmethod
    def load(cls, path: str) -> "HeadRules":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def head_index(self, label: str, child_labels) -> int:
        rule = self.rules.get(label)
        if rule is None:
            return len(child_labels) - 1
        direction, priorities = rule
        order = range(len(child_labels))
        if direction == "right":
            order = range(len(child_labels) - 1, -1, -1)
        for want in priorities:
            for i in order:
                if child_labels[i] == want:
                    return i
        return 0 if direction == "left" else len(child_labels) - 1


DEFAULT_HEAD_RULES = HeadRules.from_text("""
S    left  VP S SBAR SINV SQ ADJP UCP NP
VP   left  VBD VBN MD VBZ VB VBG VBP VP TO ADJP NN NNS NP
SBAR left  IN WHNP WHPP WHADVP WHADJP DT S SQ SINV SBAR FRAG
SINV left  VBZ VBD VBP VB MD VP S SINV ADJP NP
SQ   left  VBZ VBD VBP VB MD VP SQ
PP   left  IN TO VBG VBN RP FW
WHNP left  WDT WP WP$ WHADJP WHPP WHNP
""")


def child_label(node: Tree, tokens) -> str:
    """Label a head rule can match: POS for leaves, label for internals."""
    if isinstance(node, Leaf):
        return tokens[node.index].pos
    return node.label


def binarize(tree: Tree, rules: HeadRules = DEFAULT_HEAD_RULES, tokens=None) -> Tree:
    """Head-driven binarization.

    Nodes with three or more children become a right-branching chain of
    star-marked intermediate nodes (the tail pair is grouped first); every
    binary node is marked 'l' or 'r' for the side holding the head child.
    Unary nodes pass through unchanged.
    """
    if isinstance(tree, Leaf):
        return tree
    kids = tuple(binarize(c, rules, tokens) for c in tree.children)
    if len(kids) == 1:
        return Internal(tree.label, kids)
    labels = [child_label(c, tokens) if tokens is not None else
              (c.label if isinstance(c, Internal) else "") for c in tree.children]
    h = rules.head_index(tree.label, labels)

    def chain(j):
        if j == len(kids) - 1:
            return kids[j]
        return Internal(tree.label, (kids[j], chain(j + 1)),
                        head="l" if h <= j else "r", star=j > 0)

    return chain(0)


def unbinarize(tree: Tree) -> Tree:
    """Exact inverse of binarize: splice starred nodes, drop head marks."""
    if isinstance(tree, Leaf):
        return tree
    if tree.star:
        raise TreeError("star-marked root %r cannot be unbinarized" % tree.label)

    def gather(node):
        out = []
        for child in node.children:
            if isinstance(child, Internal) and child.star:
                out.extend(gather(child))
            else:
                out.append(unbinarize(child))
        return out

    return Internal(tree.label, tuple(gather(tree)))
