"""Transition systems: states, actions, legality, oracles, execution.

Three systems share one state shape [stack, buffer index, finished flag]:

* bottom-up   -- Shift / Reduce-l|r-X / Unary-X / Finish, over binarized
                 trees whose intermediate nodes carry a trailing star;
* top-down    -- Shift / NT-X / Reduce, no explicit finish action;
* in-order    -- Shift / PJ-X / Reduce / Finish, where Reduce takes one
                 extra item below the projected nonterminal as the
                 leftmost child.

Legality goes beyond the bare deduction premises so that every greedy
trajectory reaches a final state: see the notes on each system's
``legal`` method.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

from .trees import Internal, Leaf, Token, Tree, unbinarize, validate

BOTTOM_UP = "bottom-up"
TOP_DOWN = "top-down"
IN_ORDER = "in-order"
SYSTEMS = (BOTTOM_UP, TOP_DOWN, IN_ORDER)


class TransitionError(Exception):
    pass


# ---------------------------------------------------------------------------
# actions

@dataclass(frozen=True)
class Action:
    kind: str  # shift | reduce | finish | reduce_lr | unary | nt | pj
    label: Optional[str] = None     # includes the star for reduce_lr
    direction: Optional[str] = None  # 'l' or 'r', reduce_lr only

    def spelling(self) -> str:
        if self.kind == "shift":
            return "SHIFT"
        if self.kind == "reduce":
            return "REDUCE"
        if self.kind == "finish":
            return "FINISH"
        if self.kind == "reduce_lr":
            return "REDUCE_%s_%s" % (self.direction.upper(), self.label)
        return "%s_%s" % (self.kind.upper(), self.label)

    def __str__(self):
        return self.spelling()


SHIFT = Action("shift")
REDUCE = Action("reduce")
FINISH = Action("finish")


def parse_action(text: str) -> Action:
    text = text.strip()
    plain = {"SHIFT": SHIFT, "REDUCE": REDUCE, "FINISH": FINISH}
    if text in plain:
        return plain[text]
    for prefix, kind in (("REDUCE_L_", "l"), ("REDUCE_R_", "r")):
        if text.startswith(prefix) and len(text) > len(prefix):
            return Action("reduce_lr", label=text[len(prefix):], direction=kind)
    for prefix, kind in (("UNARY_", "unary"), ("NT_", "nt"), ("PJ_", "pj")):
        if text.startswith(prefix) and len(text) > len(prefix):
            return Action(kind, label=text[len(prefix):])
    raise TransitionError("cannot parse action spelling %r" % text)


# ---------------------------------------------------------------------------
# parser state

@dataclass(frozen=True)
class Terminal:
    index: int


@dataclass(frozen=True)
class Open:
    label: str


@dataclass(frozen=True)
class Completed:
    tree: Internal
    # length of the unary chain this item tops; bounds Unary-X/PJ-X repetition
    unary_depth: int = 0


@dataclass(frozen=True)
class ParserState:
    stack: Tuple = ()
    buffer_index: int = 0
    finished: bool = False
    n: int = 0

    def open_count(self):
        return sum(1 for item in self.stack if isinstance(item, Open))

    def top_open_pos(self):
        """Index in self.stack of the topmost Open, or -1."""
        for i in range(len(self.stack) - 1, -1, -1):
            if isinstance(self.stack[i], Open):
                return i
        return -1


def start_state(n: int) -> ParserState:
    return ParserState(stack=(), buffer_index=0, finished=False, n=n)


def item_tree(item) -> Tree:
    if isinstance(item, Terminal):
        return Leaf(item.index)
    if isinstance(item, Completed):
        return item.tree
    raise TransitionError("open nonterminal %r has no subtree" % item.label)


def _settled(item) -> bool:
    return isinstance(item, (Terminal, Completed))


def _depth(item) -> int:
    return item.unary_depth if isinstance(item, Completed) else 0


@dataclass(frozen=True)
class TransitionConfig:
    # max length of a unary chain grown in place (Unary-X / PJ-then-Reduce)
    unary_budget: int = 3
    # cap on simultaneously open nonterminals (top-down NT-X)
    open_cap: int = 100


DEFAULT_CONFIG = TransitionConfig()


def action_budget(n: int) -> int:
    """Hard cap on decoded actions per sentence; cycles abort with an error."""
    return 10 * n + 50


# ---------------------------------------------------------------------------
# the three systems

class TransitionSystem:
    name = None
    uses_binarized = False

    def __init__(self, labels, config: TransitionConfig = DEFAULT_CONFIG):
        self.labels = sorted(set(labels))
        self.config = config

    def inventory(self):
        raise NotImplementedError

    def legal(self, state):
        raise NotImplementedError

    def apply(self, state, action):
        raise NotImplementedError

    def is_final(self, state):
        return state.finished

    def oracle(self, tree):
        raise NotImplementedError

    # shared pieces -------------------------------------------------------

    def _shift(self, state):
        return replace(state,
                       stack=state.stack + (Terminal(state.buffer_index),),
                       buffer_index=state.buffer_index + 1)

    def _require(self, cond, premise):
        if not cond:
            raise TransitionError("illegal action: %s" % premise)

    def execute(self, actions, n_tokens: int) -> Tree:
        """Fold apply over the action sequence and return the finished tree."""
        state = start_state(n_tokens)
        for step, action in enumerate(actions):
            if self.is_final(state):
                raise TransitionError(
                    "action %s at step %d after the final state" % (action, step))
            try:
                state = self.apply(state, action)
            except TransitionError as exc:
                raise TransitionError("step %d (%s): %s" % (step, action, exc)) from None
        if not self.is_final(state):
            raise TransitionError("incomplete derivation: non-final state after "
                                  "%d actions" % len(actions))
        tree = item_tree(state.stack[0])
        if self.uses_binarized:
            tree = unbinarize(tree)
        validate(tree, n_tokens)
        return tree


class BottomUpSystem(TransitionSystem):
    name = BOTTOM_UP
    uses_binarized = True

    def __init__(self, labels, config=DEFAULT_CONFIG):
        super().__init__(labels, config)
        # reduce labels cover completed and intermediate (starred) nodes
        self.reduce_labels = self.labels + [l + "*" for l in self.labels]

    def inventory(self):
        acts = [SHIFT, FINISH]
        for label in sorted(self.reduce_labels):
            acts.append(Action("reduce_lr", label=label, direction="l"))
            acts.append(Action("reduce_lr", label=label, direction="r"))
        acts.extend(Action("unary", label=l) for l in self.labels)
        return acts

    def legal(self, state):
        if state.finished:
            return []
        out = []
        if state.buffer_index < state.n:
            out.append(SHIFT)
        if (state.buffer_index == state.n and len(state.stack) == 1
                and isinstance(state.stack[0], Completed)
                and not state.stack[0].tree.star):
            out.append(FINISH)
        if len(state.stack) >= 2:
            for label in sorted(self.reduce_labels):
                out.append(Action("reduce_lr", label=label, direction="l"))
                out.append(Action("reduce_lr", label=label, direction="r"))
        if state.stack and _depth(state.stack[-1]) < self.config.unary_budget:
            out.extend(Action("unary", label=l) for l in self.labels)
        return out

    def apply(self, state, action):
        self._require(not state.finished, "finished state admits no action")
        if action.kind == "shift":
            self._require(state.buffer_index < state.n, "Shift needs a non-empty buffer")
            return self._shift(state)
        if action.kind == "reduce_lr":
            self._require(len(state.stack) >= 2, "Reduce-l/r-X needs two stack items")
            s1, s0 = state.stack[-2], state.stack[-1]
            self._require(_settled(s1) and _settled(s0),
                          "Reduce-l/r-X operands must be completed items")
            star = action.label.endswith("*")
            base = action.label[:-1] if star else action.label
            node = Internal(base, (item_tree(s1), item_tree(s0)),
                            head=action.direction, star=star)
            return replace(state, stack=state.stack[:-2] + (Completed(node),))
        if action.kind == "unary":
            self._require(len(state.stack) >= 1, "Unary-X needs a stack item")
            s0 = state.stack[-1]
            self._require(_settled(s0), "Unary-X operand must be a completed item")
            self._require(_depth(s0) < self.config.unary_budget,
                          "unary budget (%d) exhausted" % self.config.unary_budget)
            node = Internal(action.label, (item_tree(s0),))
            item = Completed(node, unary_depth=_depth(s0) + 1)
            return replace(state, stack=state.stack[:-1] + (item,))
        if action.kind == "finish":
            self._require(state.buffer_index == state.n, "Finish needs an empty buffer")
            self._require(len(state.stack) == 1 and isinstance(state.stack[0], Completed),
                          "Finish needs a single completed root")
            self._require(not state.stack[0].tree.star,
                          "Finish on an incomplete (starred) root")
            return replace(state, finished=True)
        raise TransitionError("action %s not in the bottom-up system" % action)

    def oracle(self, tree):
        """Post-order actions for a binarized tree."""
        acts = []

        def walk(node):
            if isinstance(node, Leaf):
                acts.append(SHIFT)
                return
            if len(node.children) > 2:
                raise TransitionError(
                    "bottom-up oracle needs a binarized tree; %r has %d children"
                    % (node.label, len(node.children)))
            for child in node.children:
                walk(child)
            if len(node.children) == 1:
                acts.append(Action("unary", label=node.label))
            else:
                label = node.label + "*" if node.star else node.label
                acts.append(Action("reduce_lr", label=label, direction=node.head or "r"))

        walk(tree)
        acts.append(FINISH)
        return acts


class TopDownSystem(TransitionSystem):
    name = TOP_DOWN

    def inventory(self):
        return [SHIFT, REDUCE] + [Action("nt", label=l) for l in self.labels]

    def is_final(self, state):
        # no Finish action: final once a single completed item spans the input
        return (state.buffer_index == state.n and len(state.stack) == 1
                and isinstance(state.stack[0], Completed))

    def legal(self, state):
        """NT requires buffer material and a free slot under the open cap;
        Shift requires an open nonterminal below (a terminal shifted onto a
        bare stack could never be attached); closing the last open
        nonterminal is deferred until the buffer is exhausted so greedy
        search cannot strand material outside the root constituent."""
        if state.finished or self.is_final(state):
            return []
        out = []
        opens = state.open_count()
        if state.buffer_index < state.n and opens >= 1:
            out.append(SHIFT)
        top = state.top_open_pos()
        if opens >= 1 and top < len(state.stack) - 1:
            if opens > 1 or (state.buffer_index == state.n and top == 0):
                out.append(REDUCE)
        if state.buffer_index < state.n and opens < self.config.open_cap:
            out.extend(Action("nt", label=l) for l in self.labels)
        return out

    def apply(self, state, action):
        self._require(not state.finished and not self.is_final(state),
                      "finished state admits no action")
        if action.kind == "shift":
            self._require(state.buffer_index < state.n, "Shift needs a non-empty buffer")
            self._require(state.open_count() >= 1,
                          "Shift needs an open nonterminal on the stack")
            return self._shift(state)
        if action.kind == "nt":
            self._require(state.buffer_index < state.n, "NT-X needs a non-empty buffer")
            self._require(state.open_count() < self.config.open_cap,
                          "open-nonterminal cap (%d) reached" % self.config.open_cap)
            return replace(state, stack=state.stack + (Open(action.label),))
        if action.kind == "reduce":
            pos = state.top_open_pos()
            self._require(pos != -1, "Reduce needs an open nonterminal")
            above = state.stack[pos + 1:]
            self._require(len(above) >= 1, "Reduce needs an item above the open nonterminal")
            self._require(all(_settled(x) for x in above),
                          "items above the open nonterminal must be completed")
            if state.open_count() == 1:
                self._require(state.buffer_index == state.n and pos == 0,
                              "the last open nonterminal closes only on an "
                              "empty buffer with nothing below it")
            node = Internal(state.stack[pos].label, tuple(item_tree(x) for x in above))
            depth = _depth(above[0]) + 1 if len(above) == 1 else 0
            item = Completed(node, unary_depth=depth)
            return replace(state, stack=state.stack[:pos] + (item,))
        raise TransitionError("action %s not in the top-down system" % action)

    def oracle(self, tree):
        acts = []

        def walk(node):
            if isinstance(node, Leaf):
                acts.append(SHIFT)
                return
            acts.append(Action("nt", label=node.label))
            for child in node.children:
                walk(child)
            acts.append(REDUCE)

        walk(tree)
        return acts


class InOrderSystem(TransitionSystem):
    name = IN_ORDER

    def inventory(self):
        return [SHIFT, REDUCE, FINISH] + [Action("pj", label=l) for l in self.labels]

    def _wrap_blocked(self, state, pos):
        """True when reducing the open nonterminal at `pos` would leave a
        singleton whose unary chain has hit the budget while words remain:
        that state would have no legal action (PJ barred, Shift needs an
        open nonterminal), so the reduce itself is barred."""
        return (pos == len(state.stack) - 1 and pos == 1
                and state.buffer_index < state.n
                and _depth(state.stack[0]) + 1 >= self.config.unary_budget)

    def legal(self, state):
        """Shift after the first word requires a pending projection (two
        settled items with no open nonterminal between them can never be
        merged); PJ needs a settled top item with unary budget left and,
        when no nonterminal is open, a singleton stack, so the base of the
        stack always reduces to one item."""
        if state.finished:
            return []
        out = []
        opens = state.open_count()
        if state.buffer_index < state.n and (not state.stack or opens >= 1):
            out.append(SHIFT)
        top = state.top_open_pos()
        if (top >= 1 and all(_settled(x) for x in state.stack[top + 1:])
                and not self._wrap_blocked(state, top)):
            out.append(REDUCE)
        if (state.buffer_index == state.n and len(state.stack) == 1
                and isinstance(state.stack[0], Completed)):
            out.append(FINISH)
        if (state.stack and _settled(state.stack[-1])
                and _depth(state.stack[-1]) < self.config.unary_budget
                and (opens >= 1 or len(state.stack) == 1)):
            out.extend(Action("pj", label=l) for l in self.labels)
        return out

    def apply(self, state, action):
        self._require(not state.finished, "finished state admits no action")
        if action.kind == "shift":
            self._require(state.buffer_index < state.n, "Shift needs a non-empty buffer")
            self._require(not state.stack or state.open_count() >= 1,
                          "Shift needs a projected nonterminal below")
            return self._shift(state)
        if action.kind == "pj":
            self._require(state.stack and _settled(state.stack[-1]),
                          "PJ-X projects over a completed item or terminal")
            self._require(_depth(state.stack[-1]) < self.config.unary_budget,
                          "unary budget (%d) exhausted" % self.config.unary_budget)
            self._require(state.open_count() >= 1 or len(state.stack) == 1,
                          "PJ-X over a buried item could never reduce to one root")
            return replace(state, stack=state.stack + (Open(action.label),))
        if action.kind == "reduce":
            pos = state.top_open_pos()
            self._require(pos != -1, "Reduce needs a projected nonterminal")
            self._require(pos >= 1, "Reduce needs an item below the projected nonterminal")
            self._require(not self._wrap_blocked(state, pos),
                          "unary wrap would strand the parse at the budget")
            above = state.stack[pos + 1:]
            self._require(all(_settled(x) for x in above),
                          "items above the projected nonterminal must be completed")
            below = state.stack[pos - 1]
            self._require(_settled(below), "the leftmost child must be a completed item")
            children = (item_tree(below),) + tuple(item_tree(x) for x in above)
            node = Internal(state.stack[pos].label, children)
            depth = _depth(below) + 1 if not above else 0
            item = Completed(node, unary_depth=depth)
            return replace(state, stack=state.stack[:pos - 1] + (item,))
        if action.kind == "finish":
            self._require(state.buffer_index == state.n, "Finish needs an empty buffer")
            self._require(len(state.stack) == 1 and isinstance(state.stack[0], Completed),
                          "Finish needs a single completed root")
            return replace(state, finished=True)
        raise TransitionError("action %s not in the in-order system" % action)

    def oracle(self, tree):
        return oracle_variant(tree, k=1)


def oracle_variant(tree: Tree, k: int):
    """Action sequence of the k-in-order family (PJ spelling, trailing
    Finish). Each nonterminal is projected after min(k, arity) of its
    children; only k=1 has execution semantics here."""
    acts = []

    def walk(node):
        if isinstance(node, Leaf):
            acts.append(SHIFT)
            return
        cut = min(k, len(node.children))
        for child in node.children[:cut]:
            walk(child)
        acts.append(Action("pj", label=node.label))
        for child in node.children[cut:]:
            walk(child)
        acts.append(REDUCE)

    walk(tree)
    acts.append(FINISH)
    return acts


def make_system(name: str, labels, config: TransitionConfig = DEFAULT_CONFIG):
    table = {BOTTOM_UP: BottomUpSystem, TOP_DOWN: TopDownSystem, IN_ORDER: InOrderSystem}
    if name not in table:
        raise TransitionError("unknown system %r (expected one of %s)"
                              % (name, ", ".join(SYSTEMS)))
    return table[name](labels, config)


# ---------------------------------------------------------------------------
# generalized traversal order

def traversal_order(tree: Tree, k) -> list:
    """Node visit order of the k-in-order traversal, as root paths.

    k=0 is pre-order, larger k delays a node until min(k, arity) of its
    children are done, and math.inf gives post-order.
    """
    if k != math.inf and (int(k) != k or k < 0):
        raise ValueError("k must be a non-negative integer or math.inf")
    out = []

    def walk(node, path):
        if isinstance(node, Leaf):
            out.append(path)
            return
        cut = len(node.children) if k == math.inf else min(int(k), len(node.children))
        for i in range(cut):
            walk(node.children[i], path + (i,))
        out.append(path)
        for i in range(cut, len(node.children)):
            walk(node.children[i], path + (i,))

    walk(tree, ())
    return out


def node_at(tree: Tree, path):
    node = tree
    for i in path:
        node = node.children[i]
    return node


def traversal_labels(tree: Tree, tokens, k) -> list:
    """Traversal order as token forms / node labels, for display and tests."""
    out = []
    for path in traversal_order(tree, k):
        node = node_at(tree, path)
        out.append(tokens[node.index].form if isinstance(node, Leaf) else node.label)
    return out


# ---------------------------------------------------------------------------
# oracle files

def format_oracle_block(tokens, actions) -> str:
    head = " ".join("%s_%s" % (t.form, t.pos) for t in tokens)
    return "\n".join([head] + [a.spelling() for a in actions]) + "\n"


def write_oracle_file(blocks) -> str:
    """blocks: iterable of (tokens, actions); blank-line separated."""
    return "\n".join(format_oracle_block(toks, acts) for toks, acts in blocks)


def read_oracle_file(text: str):
    out = []
    for chunk in text.split("\n\n"):
        lines = [l for l in chunk.splitlines() if l.strip()]
        if not lines:
            continue
        tokens = []
        for piece in lines[0].split():
            if "_" not in piece:
                raise TransitionError("token %r is not form_pos" % piece)
            form, pos = piece.rsplit("_", 1)
            tokens.append(Token(form, pos))
        actions = [parse_action(l) for l in lines[1:]]
        out.append((tokens, actions))
    return out
