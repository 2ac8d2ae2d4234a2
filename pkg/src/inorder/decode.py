"""Greedy decoding and ancestral sampling from a trained model."""

from dataclasses import dataclass

import numpy as np

from . import transitions
from .model import Encoder, Model, action_distribution
from .nn import Graph
from .transitions import action_budget

DEFAULT_ALPHA = 0.8
DEFAULT_SAMPLES = 100


class DecodeError(Exception):
    def __init__(self, message, partial_actions=()):
        super().__init__(message)
        self.partial_actions = list(partial_actions)


@dataclass
class Derivation:
    actions: list
    log_prob: float  # sum of log p at alpha=1
    tree: object

    def __post_init__(self):
        if self.log_prob > 1e-9:
            raise DecodeError("derivation log-probability %g > 0" % self.log_prob)


def _decode(model: Model, tokens, choose, check_finite=True) -> Derivation:
    """Run one trajectory; `choose(legal_ids, probs)` picks the action id."""
    system = model.system
    n = len(tokens)
    budget = action_budget(n)
    g = Graph(model.params, check_finite=check_finite)
    encoder = Encoder(g, model, tokens)
    state = transitions.start_state(n)
    actions = []
    log_prob = 0.0
    while not system.is_final(state):
        if len(actions) >= budget:
            raise DecodeError(
                "action budget %d exhausted after %s" %
                (budget, " ".join(a.spelling() for a in actions)), actions)
        legal, probs = action_distribution(model, state, encoder)
        aid = choose(legal, probs)
        action = model.vocab.actions[aid]
        log_prob += float(np.log(probs[aid]))
        encoder.advance(state, action)
        state = system.apply(state, action)
        actions.append(action)
    tree = system.execute(actions, n)
    return Derivation(actions, log_prob, tree)


def parse_greedy(model: Model, tokens) -> Derivation:
    """Argmax at every step; ties break toward the lowest action id."""
    if not tokens:
        raise DecodeError("cannot parse an empty sentence")

    def choose(legal, probs):
        return legal[int(np.argmax(probs[legal]))]

    return _decode(model, tokens, choose)


def sample_step(probs, alpha, rng):
    """Draw an index from probs**alpha, renormalized. probs must sum to 1."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must be in (0, 1], got %r" % alpha)
    q = probs ** alpha
    q /= q.sum()
    return int(rng.choice(len(q), p=q))


def sample(model: Model, tokens, alpha=DEFAULT_ALPHA, count=DEFAULT_SAMPLES,
           seed=1) -> list:
    """`count` ancestral samples with per-step exponentiation by alpha.

    Log-probabilities are reported at alpha=1; the list is sorted by them,
    descending, and duplicates are kept.
    """
    if count < 1:
        raise ValueError("sample count must be >= 1")
    if not tokens:
        raise DecodeError("cannot parse an empty sentence")
    rng = np.random.default_rng(seed)

    def choose(legal, probs):
        sub = probs[legal]
        return legal[sample_step(sub / sub.sum(), alpha, rng)]

    out = [_decode(model, tokens, choose) for _ in range(count)]
    out.sort(key=lambda d: d.log_prob, reverse=True)
    return out
