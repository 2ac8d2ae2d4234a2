"""The parsing model: word representation, stack/buffer/history encoders,
composition functions, action distribution and loss, plus the versioned
binary model container.

Defaults follow the shared hyperparameter table: 2-layer LSTMs, 128-dim
stack-LSTM input/hidden, 32-dim learned word embeddings next to frozen
pretrained ones (100-dim English, 80-dim Chinese), 12-dim POS and 16-dim
action embeddings.
"""

import json
import struct
from collections import Counter
from dataclasses import dataclass, fields

import numpy as np

from . import nn, transitions
from .nn import Graph, NNError, Params, StackSequence, glorot
from .trees import Leaf, internal_nodes, star_label
from .transitions import (Action, Open, ParserState, Terminal,
                          TransitionConfig, TransitionError, make_system)

UNK = "<unk>"


@dataclass
class ModelConfig:
    lstm_layers: int = 2
    word_dim: int = 32
    pretrained_dim: int = 100
    pos_dim: int = 12
    action_dim: int = 16
    lstm_input_dim: int = 128
    lstm_hidden_dim: int = 128
    seed: int = 1
    epochs: int = 100
    patience: int = 20
    unk_replace_prob: float = 0.5
    lr0: float = 0.1
    lr_decay: float = 0.05
    l2: float = 1e-6
    unary_budget: int = 3
    open_cap: int = 100

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d):
        cfg = cls()
        for f in fields(cls):
            if f.name in d:
                setattr(cfg, f.name, type(getattr(cfg, f.name))(d[f.name]))
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError("unknown config keys: %s" % ", ".join(sorted(unknown)))
        return cfg

    @classmethod
    def from_file(cls, path):
        d = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError("config line %d is not key=value: %r" % (lineno, line))
                key, value = line.split("=", 1)
                d[key.strip()] = value.strip()
        return cls.from_dict(d)

    def transition_config(self):
        return TransitionConfig(unary_budget=self.unary_budget, open_cap=self.open_cap)


SYSTEM_K = {transitions.BOTTOM_UP: "inf", transitions.TOP_DOWN: "0",
            transitions.IN_ORDER: "1"}


class Vocabulary:
    """Dense id maps for words, POS tags, nonterminal symbols and actions.

    Nonterminal symbols include the starred intermediate labels when the
    system is bottom-up; the action inventory is the system's.
    """

    def __init__(self, system_name, words, word_counts, pos, labels, pretrained_words,
                 config: ModelConfig):
        self.system_name = system_name
        self.k = SYSTEM_K[system_name]
        self.words = list(words)
        self.word_counts = dict(word_counts)
        self.word_id = {w: i for i, w in enumerate(self.words)}
        self.pos = list(pos)
        self.pos_id = {p: i for i, p in enumerate(self.pos)}
        self.labels = list(labels)
        self.system = make_system(system_name, labels, config.transition_config())
        if system_name == transitions.BOTTOM_UP:
            self.nonterminals = sorted(self.labels) + [l + "*" for l in sorted(self.labels)]
        else:
            self.nonterminals = sorted(self.labels)
        self.nt_id = {l: i for i, l in enumerate(self.nonterminals)}
        self.actions = self.system.inventory()
        self.action_id = {a.spelling(): i for i, a in enumerate(self.actions)}
        self.pretrained_words = list(pretrained_words)
        self.pretrained_id = {w: i for i, w in enumerate(self.pretrained_words)}
        self.singletons = {w for w, c in self.word_counts.items() if c == 1}

    def wid(self, form):
        return self.word_id.get(form, self.word_id[UNK])

    def pid(self, tag):
        return self.pos_id.get(tag, self.pos_id[UNK])

    def aid(self, action: Action):
        try:
            return self.action_id[action.spelling()]
        except KeyError:
            raise TransitionError("action %s not in the %s inventory"
                                  % (action, self.system_name)) from None

    def pretrained_row(self, form):
        # the last embedding row is all zeros, for out-of-pretrained words
        return self.pretrained_id.get(form, len(self.pretrained_words))


def build_vocabulary(corpus, system_name, config, pretrained_words=()):
    """corpus: iterable of (tree, tokens) gold pairs."""
    word_counts = Counter()
    pos = set()
    labels = set()
    for tree, tokens in corpus:
        for tok in tokens:
            word_counts[tok.form] += 1
            pos.add(tok.pos)
        labels.update(n.label for n in internal_nodes(tree))
    if not labels:
        raise ValueError("corpus has no internal nodes")
    words = [UNK] + sorted(word_counts)
    return Vocabulary(system_name, words, word_counts, [UNK] + sorted(pos),
                      sorted(labels), pretrained_words, config)


def read_embeddings(path, dim):
    """Pretrained embedding text file: 'word v1 ... vD' per line."""
    words, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise ValueError("embedding line %d has %d values, expected %d"
                                 % (lineno, len(parts) - 1, dim))
            words.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    return words, np.asarray(rows, dtype=nn.DTYPE).reshape(len(words), dim)


class Model:
    """Config + vocabulary + parameter tensors for one transition system."""

    def __init__(self, config: ModelConfig, vocab: Vocabulary, params: Params):
        self.config = config
        self.vocab = vocab
        self.params = params

    @property
    def system(self):
        return self.vocab.system

    def copy(self):
        return Model(self.config, self.vocab, self.params.copy())


def init_params(config: ModelConfig, vocab: Vocabulary, rng,
                pretrained_matrix=None) -> Params:
    p = Params()
    D, H = config.lstm_input_dim, config.lstm_hidden_dim
    p.add("e_word", glorot(rng, (len(vocab.words), config.word_dim)))
    pre = np.zeros((len(vocab.pretrained_words) + 1, config.pretrained_dim), dtype=nn.DTYPE)
    if pretrained_matrix is not None:
        pre[:len(vocab.pretrained_words)] = pretrained_matrix
    p.add("e_pretrained", pre, frozen=True)
    p.add("e_pos", glorot(rng, (len(vocab.pos), config.pos_dim)))
    p.add("e_action", glorot(rng, (len(vocab.actions), config.action_dim)))
    p.add("e_nt", glorot(rng, (len(vocab.nonterminals), D)))
    in_dim = config.pos_dim + config.pretrained_dim + config.word_dim
    p.add("w_input", glorot(rng, (D, in_dim)))
    p.add("b_input", np.zeros(D, dtype=nn.DTYPE))
    for prefix in ("stack", "buffer"):
        nn.add_lstm(p, prefix, D, H, config.lstm_layers, rng)
    nn.add_lstm(p, "history", config.action_dim, H, config.lstm_layers, rng)
    for prefix in ("comp_fwd", "comp_bwd", "bcomp_fwd", "bcomp_bwd"):
        nn.add_lstm(p, prefix, D, H, config.lstm_layers, rng)
    for prefix in ("comp", "bcomp"):
        p.add(prefix + "_proj_W", glorot(rng, (D, 2 * H)))
        p.add(prefix + "_proj_b", np.zeros(D, dtype=nn.DTYPE))
    p.add("w_out", glorot(rng, (len(vocab.actions), 3 * H)))
    p.add("b_out", np.zeros(len(vocab.actions), dtype=nn.DTYPE))
    return p


def new_model(config, vocab, pretrained_matrix=None, seed=None) -> Model:
    rng = np.random.default_rng(config.seed if seed is None else seed)
    return Model(config, vocab, init_params(config, vocab, rng, pretrained_matrix))


# ---------------------------------------------------------------------------
# forward computations

def word_rep(g: Graph, model: Model, token, word_id=None):
    """ReLU(W_input [e_pos; e_pretrained; e_word] + b_input)."""
    vocab = model.vocab
    wid = vocab.wid(token.form) if word_id is None else word_id
    parts = [g.row(g.leaf("e_pos"), vocab.pid(token.pos)),
             g.row(g.leaf("e_pretrained"), vocab.pretrained_row(token.form)),
             g.row(g.leaf("e_word"), wid)]
    return g.relu(g.affine(g.leaf("w_input"), g.concat(parts), g.leaf("b_input")))


def _bi_compose(g, model, kind, nt_symbol, forward_seq, backward_seq):
    cfg = model.config
    e_nt = g.row(g.leaf("e_nt"), model.vocab.nt_id[nt_symbol])
    fwd = nn.lstm_run(g, kind + "_fwd", cfg.lstm_layers, cfg.lstm_hidden_dim,
                      [e_nt] + forward_seq)
    bwd = nn.lstm_run(g, kind + "_bwd", cfg.lstm_layers, cfg.lstm_hidden_dim,
                      [e_nt] + backward_seq)
    return g.relu(g.affine(g.leaf(kind + "_proj_W"), g.concat([fwd, bwd]),
                           g.leaf(kind + "_proj_b")))


def compose(g: Graph, model: Model, label, child_vectors):
    """Unbinarized composition: bi-LSTM over [e_nt, s_0..s_m], both ways."""
    if not child_vectors:
        raise NNError("composition needs at least one child")
    return _bi_compose(g, model, "comp", label, list(child_vectors),
                       list(reversed(child_vectors)))


def compose_binarized(g: Graph, model: Model, label, head, nonhead=None):
    """Binarized composition: the head child always precedes the non-head
    ([e_nt, s_h, s_o] forward, [e_nt, s_o, s_h] backward); a unary node
    composes over the head alone."""
    if nonhead is None:
        return _bi_compose(g, model, "bcomp", label, [head], [head])
    return _bi_compose(g, model, "bcomp", label, [head, nonhead], [nonhead, head])


class Encoder:
    """Incremental stack/buffer/action-history encoding of a parse in
    progress. The buffer stack-LSTM is filled right to left once, so Shift
    is a pop; the stack mirror keeps one vector per parser stack item."""

    def __init__(self, g: Graph, model: Model, tokens, word_ids=None):
        self.g = g
        self.model = model
        self.tokens = tokens
        cfg = model.config
        self.xs = [word_rep(g, model, tok,
                            None if word_ids is None else word_ids[i])
                   for i, tok in enumerate(tokens)]
        self.stack = StackSequence(g, "stack", cfg.lstm_layers, cfg.lstm_hidden_dim)
        self.buffer = StackSequence(g, "buffer", cfg.lstm_layers, cfg.lstm_hidden_dim)
        self.history = StackSequence(g, "history", cfg.lstm_layers, cfg.lstm_hidden_dim)
        for x in reversed(self.xs):
            self.buffer.push(x)
        self.vectors = []  # parser stack mirror, bottom to top

    def summary(self):
        return self.g.concat([self.stack.summary(), self.buffer.summary(),
                              self.history.summary()])

    def _push(self, vec):
        self.stack.push(vec)
        self.vectors.append(vec)

    def _pop(self, count):
        out = []
        for _ in range(count):
            self.stack.pop()
            out.append(self.vectors.pop())
        out.reverse()
        return out

    def advance(self, state: ParserState, action: Action):
        """Mirror `action` applied to `state` (the state it is taken in)."""
        g, model = self.g, self.model
        kind = action.kind
        if kind == "shift":
            self._push(self.xs[state.buffer_index])
            self.buffer.pop()
        elif kind in ("nt", "pj"):
            self._push(g.row(g.leaf("e_nt"), model.vocab.nt_id[action.label]))
        elif kind == "reduce_lr":
            left, right = self._pop(2)
            head, other = (left, right) if action.direction == "l" else (right, left)
            self._push(compose_binarized(g, model, action.label, head, other))
        elif kind == "unary":
            (child,) = self._pop(1)
            self._push(compose_binarized(g, model, action.label, child))
        elif kind == "reduce":
            pos = state.top_open_pos()
            above = len(state.stack) - pos - 1
            if model.vocab.system_name == transitions.TOP_DOWN:
                children = self._pop(above + 1)[1:]  # drop the open-NT vector
                label = state.stack[pos].label
            else:  # in-order: one more item below becomes the leftmost child
                popped = self._pop(above + 2)
                children = [popped[0]] + popped[2:]
                label = state.stack[pos].label
            self._push(compose(g, model, label, children))
        elif kind == "finish":
            pass
        else:
            raise TransitionError("cannot encode action %s" % action)
        self.history.push(g.row(g.leaf("e_action"), model.vocab.aid(action)))


def encode_state(g: Graph, model: Model, state: ParserState, history_actions,
                 tokens, word_ids=None):
    """From-scratch (h_stk, h_buf, h_ah) for a parser state; must agree
    bitwise with the incremental Encoder in 64-bit mode."""
    cfg = model.config
    xs = [word_rep(g, model, tok, None if word_ids is None else word_ids[i])
          for i, tok in enumerate(tokens)]

    def vector_of(node):
        if isinstance(node, Leaf):
            return xs[node.index]
        kids = [vector_of(c) for c in node.children]
        if model.vocab.system_name == transitions.BOTTOM_UP:
            if len(kids) == 1:
                return compose_binarized(g, model, star_label(node), kids[0])
            head = 0 if node.head == "l" else 1
            return compose_binarized(g, model, star_label(node),
                                     kids[head], kids[1 - head])
        return compose(g, model, node.label, kids)

    stack = StackSequence(g, "stack", cfg.lstm_layers, cfg.lstm_hidden_dim)
    for item in state.stack:
        if isinstance(item, Terminal):
            stack.push(xs[item.index])
        elif isinstance(item, Open):
            stack.push(g.row(g.leaf("e_nt"), model.vocab.nt_id[item.label]))
        else:
            stack.push(vector_of(item.tree))
    buffer = StackSequence(g, "buffer", cfg.lstm_layers, cfg.lstm_hidden_dim)
    for i in range(len(tokens) - 1, state.buffer_index - 1, -1):
        buffer.push(xs[i])
    history = StackSequence(g, "history", cfg.lstm_layers, cfg.lstm_hidden_dim)
    for action in history_actions:
        history.push(g.row(g.leaf("e_action"), model.vocab.aid(action)))
    return stack.summary(), buffer.summary(), history.summary()


def legal_action_ids(model: Model, state: ParserState):
    return sorted(model.vocab.aid(a) for a in model.system.legal(state))


def step_log_probs(g: Graph, model: Model, encoder: Encoder, legal_ids):
    """Log-probabilities over the legal actions (in id order)."""
    logits = g.affine(g.leaf("w_out"), encoder.summary(), g.leaf("b_out"))
    return g.log_softmax(g.gather(logits, legal_ids))


def action_distribution(model: Model, state: ParserState, encoder: Encoder):
    """Probabilities over the full inventory; illegal actions get exactly 0.

    Returns (legal_ids, probs) where probs has inventory length.
    """
    legal = legal_action_ids(model, state)
    if not legal:
        raise TransitionError("no legal action in state %r" % (state,))
    lp = step_log_probs(encoder.g, model, encoder, legal)
    probs = np.zeros(len(model.vocab.actions), dtype=nn.DTYPE)
    probs[legal] = np.exp(lp.value)
    return legal, probs


def sentence_loss(g: Graph, model: Model, tokens, gold_actions, word_ids=None):
    """Sum of -log p(gold action) along the gold trajectory."""
    encoder = Encoder(g, model, tokens, word_ids)
    state = transitions.start_state(len(tokens))
    loss = g.constant(np.zeros(()))
    for step, action in enumerate(gold_actions):
        legal = legal_action_ids(model, state)
        aid = model.vocab.aid(action)
        if aid not in legal:
            raise TransitionError(
                "gold action %s illegal at step %d (oracle/legality mismatch)"
                % (action, step))
        lp = step_log_probs(g, model, encoder, legal)
        loss = g.add(loss, g.neg(g.pick(lp, legal.index(aid))))
        encoder.advance(state, action)
        state = model.system.apply(state, action)
    if not model.system.is_final(state):
        raise TransitionError("gold action sequence does not reach a final state")
    return loss


# ---------------------------------------------------------------------------
# model files

MAGIC = b"IOPARS01"
FORMAT_VERSION = 1


def save_model(model: Model, path):
    header = {
        "format_version": FORMAT_VERSION,
        "system": model.vocab.system_name,
        "k": model.vocab.k,
        "config": model.config.to_dict(),
        "vocab": {
            "words": model.vocab.words,
            "word_counts": model.vocab.word_counts,
            "pos": model.vocab.pos,
            "labels": model.vocab.labels,
            "pretrained_words": model.vocab.pretrained_words,
        },
        "frozen": sorted(model.params.frozen),
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(struct.pack("<I", len(model.params.values)))
        for name in model.params.names():
            data = np.ascontiguousarray(model.params[name], dtype=np.float64)
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<B", data.ndim))
            fh.write(struct.pack("<%dq" % data.ndim, *data.shape))
            fh.write(data.tobytes(order="C"))


def load_model(path) -> Model:
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError("%s is not a model file (bad magic)" % path)
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        if header["format_version"] != FORMAT_VERSION:
            raise ValueError("unsupported model format version %r"
                             % header["format_version"])
        config = ModelConfig.from_dict(header["config"])
        v = header["vocab"]
        vocab = Vocabulary(header["system"], v["words"], v["word_counts"], v["pos"],
                           v["labels"], v["pretrained_words"], config)
        params = Params()
        (count,) = struct.unpack("<I", fh.read(4))
        for _ in range(count):
            (nlen,) = struct.unpack("<I", fh.read(4))
            name = fh.read(nlen).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack("<%dq" % ndim, fh.read(8 * ndim))
            size = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(8 * size), dtype=np.float64).reshape(shape)
            params.add(name, data.copy(), frozen=name in set(header["frozen"]))
    model = Model(config, vocab, params)
    _validate_dims(model)
    return model


def _validate_dims(model: Model):
    cfg, vocab, p = model.config, model.vocab, model.params
    expect = {
        "e_word": (len(vocab.words), cfg.word_dim),
        "e_pretrained": (len(vocab.pretrained_words) + 1, cfg.pretrained_dim),
        "e_pos": (len(vocab.pos), cfg.pos_dim),
        "e_action": (len(vocab.actions), cfg.action_dim),
        "e_nt": (len(vocab.nonterminals), cfg.lstm_input_dim),
        "w_input": (cfg.lstm_input_dim,
                    cfg.pos_dim + cfg.pretrained_dim + cfg.word_dim),
        "w_out": (len(vocab.actions), 3 * cfg.lstm_hidden_dim),
    }
    for layer in range(cfg.lstm_layers):
        for prefix in ("stack", "buffer", "history",
                       "comp_fwd", "comp_bwd", "bcomp_fwd", "bcomp_bwd"):
            base = cfg.action_dim if prefix == "history" else cfg.lstm_input_dim
            in_dim = base if layer == 0 else cfg.lstm_hidden_dim
            expect["%s.%d.W" % (prefix, layer)] = (
                4 * cfg.lstm_hidden_dim, in_dim + cfg.lstm_hidden_dim)
    for name, shape in expect.items():
        if name not in p:
            raise ValueError("model file is missing tensor %r" % name)
        if p[name].shape != shape:
            raise ValueError("tensor %r has shape %r, expected %r from the "
                             "hyperparameters" % (name, p[name].shape, shape))
