"""Minimal numeric core: dense float64 tensors on a reverse-mode tape,
LSTM cells, stack-LSTMs with exact pop, and plain SGD with L2.

Training runs in 64-bit so gradient checks can be tight and trajectories
bit-reproducible; `Params.astype` gives a 32-bit copy for inference.
"""

import numpy as np

DTYPE = np.float64


class NNError(Exception):
    pass


class Params:
    """Named parameter tensors; frozen ones are skipped by the optimizer."""

    def __init__(self):
        self.values = {}
        self.frozen = set()

    def add(self, name, array, frozen=False):
        if name in self.values:
            raise NNError("duplicate parameter %r" % name)
        self.values[name] = np.asarray(array, dtype=DTYPE)
        if frozen:
            self.frozen.add(name)
        return self.values[name]

    def __getitem__(self, name):
        return self.values[name]

    def __contains__(self, name):
        return name in self.values

    def names(self):
        return sorted(self.values)

    def copy(self):
        out = Params()
        out.values = {k: v.copy() for k, v in self.values.items()}
        out.frozen = set(self.frozen)
        return out

    def astype(self, dtype):
        out = Params()
        out.values = {k: v.astype(dtype) for k, v in self.values.items()}
        out.frozen = set(self.frozen)
        return out


def glorot(rng, shape):
    limit = np.sqrt(6.0 / (shape[0] + shape[1]))
    return rng.uniform(-limit, limit, size=shape).astype(DTYPE)


class Node:
    __slots__ = ("value", "parents", "bk", "grad")

    def __init__(self, value, parents=(), bk=None):
        self.value = value
        self.parents = parents
        self.bk = bk
        self.grad = None


def _acc(node, g):
    if node.grad is None:
        node.grad = np.zeros_like(node.value)
    node.grad += g


class Graph:
    """One forward/backward tape. Build per sentence and discard."""

    def __init__(self, params: Params, check_finite=True):
        self.params = params
        self.tape = []
        self._leaves = {}
        self._backward_done = False
        self.check_finite = check_finite

    # -- node plumbing ----------------------------------------------------

    def _node(self, value, parents=(), bk=None):
        if self.check_finite and not np.isfinite(value).all():
            raise NNError("non-finite value in forward pass")
        node = Node(value, parents, bk)
        self.tape.append(node)
        return node

    def leaf(self, name):
        node = self._leaves.get(name)
        if node is None:
            node = self._node(self.params[name])
            self._leaves[name] = node
        return node

    def constant(self, array):
        return self._node(np.asarray(array, dtype=DTYPE))

    # -- operations --------------------------------------------------------

    def row(self, table, i):
        def bk(g, out):
            if table.grad is None:
                table.grad = np.zeros_like(table.value)
            table.grad[i] += g
        return self._node(table.value[i], (table,), bk)

    def affine(self, W, x, b):
        def bk(g, out):
            _acc(W, np.outer(g, x.value))
            _acc(x, W.value.T @ g)
            _acc(b, g)
        return self._node(W.value @ x.value + b.value, (W, x, b), bk)

    def matvec(self, W, x):
        def bk(g, out):
            _acc(W, np.outer(g, x.value))
            _acc(x, W.value.T @ g)
        return self._node(W.value @ x.value, (W, x), bk)

    def add(self, a, b):
        def bk(g, out):
            _acc(a, g)
            _acc(b, g)
        return self._node(a.value + b.value, (a, b), bk)

    def mul(self, a, b):
        def bk(g, out):
            _acc(a, g * b.value)
            _acc(b, g * a.value)
        return self._node(a.value * b.value, (a, b), bk)

    def concat(self, nodes):
        sizes = [n.value.shape[0] for n in nodes]

        def bk(g, out):
            off = 0
            for n, size in zip(nodes, sizes):
                _acc(n, g[off:off + size])
                off += size
        return self._node(np.concatenate([n.value for n in nodes]), tuple(nodes), bk)

    def slice(self, a, lo, hi):
        def bk(g, out):
            if a.grad is None:
                a.grad = np.zeros_like(a.value)
            a.grad[lo:hi] += g
        return self._node(a.value[lo:hi], (a,), bk)

    def relu(self, a):
        def bk(g, out):
            _acc(a, g * (out.value > 0))
        return self._node(np.maximum(a.value, 0.0), (a,), bk)

    def tanh(self, a):
        def bk(g, out):
            _acc(a, g * (1.0 - out.value * out.value))
        return self._node(np.tanh(a.value), (a,), bk)

    def sigmoid(self, a):
        def bk(g, out):
            _acc(a, g * out.value * (1.0 - out.value))
        return self._node(1.0 / (1.0 + np.exp(-a.value)), (a,), bk)

    def gather(self, a, idxs):
        idxs = np.asarray(idxs, dtype=np.intp)

        def bk(g, out):
            if a.grad is None:
                a.grad = np.zeros_like(a.value)
            np.add.at(a.grad, idxs, g)
        return self._node(a.value[idxs], (a,), bk)

    def log_softmax(self, a):
        z = a.value - a.value.max()
        y = z - np.log(np.exp(z).sum())

        def bk(g, out):
            _acc(a, g - np.exp(out.value) * g.sum())
        return self._node(y, (a,), bk)

    def pick(self, a, i):
        def bk(g, out):
            if a.grad is None:
                a.grad = np.zeros_like(a.value)
            a.grad[i] += g
        return self._node(a.value[i].copy(), (a,), bk)

    def neg(self, a):
        def bk(g, out):
            _acc(a, -g)
        return self._node(-a.value, (a,), bk)

    # -- backward ------------------------------------------------------------

    def backward(self, loss):
        if self._backward_done:
            raise NNError("backward called twice without a new forward pass")
        self._backward_done = True
        if loss.value.shape != ():
            raise NNError("loss must be scalar, got shape %r" % (loss.value.shape,))
        loss.grad = np.ones((), dtype=DTYPE)
        for node in reversed(self.tape):
            if node.grad is None or node.bk is None:
                continue
            node.bk(node.grad, node)
        if self.check_finite:
            for name, node in self._leaves.items():
                if node.grad is not None and not np.isfinite(node.grad).all():
                    raise NNError("non-finite gradient for %r" % name)

    def grad(self, name):
        """Parameter gradient after backward; zeros when the tensor is
        unused in the graph or frozen (frozen tensors are never updated)."""
        node = self._leaves.get(name)
        if node is None or node.grad is None or name in self.params.frozen:
            return np.zeros_like(self.params[name])
        return node.grad


# ---------------------------------------------------------------------------
# LSTM

def add_lstm(params: Params, prefix, input_dim, hidden_dim, layers, rng):
    """Allocate a multi-layer LSTM: fused gate weights [i; f; g; o] per
    layer, forget bias +1, learned initial states."""
    for layer in range(layers):
        in_dim = input_dim if layer == 0 else hidden_dim
        W = glorot(rng, (4 * hidden_dim, in_dim + hidden_dim))
        b = np.zeros(4 * hidden_dim, dtype=DTYPE)
        b[hidden_dim:2 * hidden_dim] = 1.0
        params.add("%s.%d.W" % (prefix, layer), W)
        params.add("%s.%d.b" % (prefix, layer), b)
        params.add("%s.%d.h0" % (prefix, layer), np.zeros(hidden_dim, dtype=DTYPE))
        params.add("%s.%d.c0" % (prefix, layer), np.zeros(hidden_dim, dtype=DTYPE))


def lstm_initial(g: Graph, prefix, layers):
    return [(g.leaf("%s.%d.h0" % (prefix, layer)), g.leaf("%s.%d.c0" % (prefix, layer)))
            for layer in range(layers)]


def lstm_step(g: Graph, prefix, layers, hidden_dim, prev, x):
    """One step through all layers; returns the new per-layer (h, c) list."""
    H = hidden_dim
    states = []
    inp = x
    for layer in range(layers):
        h, c = prev[layer]
        z = g.affine(g.leaf("%s.%d.W" % (prefix, layer)),
                     g.concat([inp, h]),
                     g.leaf("%s.%d.b" % (prefix, layer)))
        i = g.sigmoid(g.slice(z, 0, H))
        f = g.sigmoid(g.slice(z, H, 2 * H))
        cand = g.tanh(g.slice(z, 2 * H, 3 * H))
        o = g.sigmoid(g.slice(z, 3 * H, 4 * H))
        c2 = g.add(g.mul(f, c), g.mul(i, cand))
        h2 = g.mul(o, g.tanh(c2))
        states.append((h2, c2))
        inp = h2
    return states


def lstm_run(g: Graph, prefix, layers, hidden_dim, xs):
    """Feed a sequence; returns the final top-layer hidden node."""
    state = lstm_initial(g, prefix, layers)
    for x in xs:
        state = lstm_step(g, prefix, layers, hidden_dim, state, x)
    return state[-1][0]


class StackSequence:
    """Stack-LSTM: push advances the recurrence, pop restores the exact
    previous state (states are kept, not recomputed). The summary of the
    empty stack is the learned initial hidden state."""

    def __init__(self, g: Graph, prefix, layers, hidden_dim):
        self.g = g
        self.prefix = prefix
        self.layers = layers
        self.hidden_dim = hidden_dim
        self._states = [lstm_initial(g, prefix, layers)]
        self._inputs = [None]

    def push(self, x):
        self._states.append(lstm_step(self.g, self.prefix, self.layers,
                                      self.hidden_dim, self._states[-1], x))
        self._inputs.append(x)

    def pop(self):
        if len(self._states) == 1:
            raise NNError("pop from empty stack sequence")
        self._states.pop()
        return self._inputs.pop()

    def summary(self):
        return self._states[-1][-1][0]

    def __len__(self):
        return len(self._states) - 1


# ---------------------------------------------------------------------------
# optimization

def learning_rate(epoch, lr0=0.1, decay=0.05):
    """SGD schedule: lr0 / (1 + decay * epoch), epoch counted from 0."""
    return lr0 / (1.0 + decay * epoch)


def sgd_update(params: Params, grads, lr, l2):
    """theta <- theta - lr * (grad + l2 * theta) on trainable tensors."""
    for name in params.names():
        if name in params.frozen:
            continue
        g = grads.get(name)
        if g is None:
            continue
        if not np.isfinite(g).all():
            raise NNError("non-finite gradient for %r: aborting update" % name)
        theta = params.values[name]
        theta -= lr * (g + l2 * theta)
