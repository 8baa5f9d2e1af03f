"""Parsing, reading and predict networks of PRPN on top of :mod:`prpn.autodiff`.

Token positions are 0-based.  ``distances[i - 1]`` is the syntactic distance
of gap ``i``, which sits between token ``i - 1`` and token ``i``, so a
sentence of K tokens has K - 1 distances.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

PRESETS = ("LM", "UP")

# Vocabulary sizes of the reference configurations, kept for documentation.
REFERENCE_VOCAB = {"LM/WSJ": 10_000, "UP/WSJ": 15_800, "UP/AllNLI": 76_000}


@dataclass
class ModelConfig:
    vocab_size: int
    embed_dim: int = 8
    hidden_dim: int = 16
    lookback: int = 5
    memory_span: int = 15
    tau: float = 10.0
    mlp_dim: int = 16
    preset: str = "UP"

    def __post_init__(self):
        if self.lookback < 1:
            raise ValueError("lookback must be >= 1")
        if self.memory_span < 1:
            raise ValueError("memory_span must be >= 1")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if min(self.vocab_size, self.embed_dim, self.hidden_dim, self.mlp_dim) < 1:
            raise ValueError("all sizes must be positive")
        if self.preset not in PRESETS:
            raise ValueError(f"preset must be one of {PRESETS}")

    @classmethod
    def from_preset(cls, preset, vocab_size, scale=1, **overrides):
        """Sized configuration for ``preset`` at a given scale factor.

        The LM variant has an embedding 4x and hidden layers 3x as wide as
        the UP variant at the same scale.
        """
        preset = preset.upper()
        if preset == "UP":
            sizes = dict(embed_dim=2 * scale, hidden_dim=4 * scale, mlp_dim=4 * scale)
        elif preset == "LM":
            sizes = dict(embed_dim=8 * scale, hidden_dim=12 * scale, mlp_dim=12 * scale)
        else:
            raise ValueError(f"unknown preset {preset!r}")
        sizes.update(overrides)
        return cls(vocab_size=vocab_size, preset=preset, **sizes)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


PARAM_SHAPES = {
    "embedding": lambda c: (c.vocab_size, c.embed_dim),
    "conv_weight": lambda c: (c.hidden_dim, (c.lookback + 1) * c.embed_dim),
    "conv_bias": lambda c: (c.hidden_dim,),
    "dist_weight": lambda c: (1, c.hidden_dim),
    "dist_bias": lambda c: (1,),
    "query_hidden": lambda c: (c.hidden_dim, c.hidden_dim),
    "query_input": lambda c: (c.hidden_dim, c.embed_dim),
    "lstm_weight": lambda c: (4 * c.hidden_dim, c.embed_dim + c.hidden_dim),
    "lstm_bias": lambda c: (4 * c.hidden_dim,),
    "pred_dist_weight": lambda c: (1, c.hidden_dim),
    "pred_dist_bias": lambda c: (1,),
    "mlp_weight": lambda c: (c.mlp_dim, 2 * c.hidden_dim),
    "mlp_bias": lambda c: (c.mlp_dim,),
    "out_weight": lambda c: (c.vocab_size, c.mlp_dim),
    "out_bias": lambda c: (c.vocab_size,),
}

PARAM_GROUPS = {
    "parsing": ("conv_weight", "conv_bias", "dist_weight", "dist_bias"),
    "reading": ("query_hidden", "query_input", "lstm_weight", "lstm_bias"),
    "predict": ("pred_dist_weight", "pred_dist_bias", "mlp_weight", "mlp_bias",
                "out_weight", "out_bias"),
    "embedding": ("embedding",),
}


class ModelParams(dict):
    """Name -> leaf :class:`Tensor` for every learned array of the model."""

    def __init__(self, config, arrays):
        super().__init__()
        self.config = config
        for name, shape_of in PARAM_SHAPES.items():
            value = np.array(arrays[name], dtype=np.float64)
            if value.shape != shape_of(config):
                raise ad.ShapeError(f"{name}: expected {shape_of(config)}, got {value.shape}")
            if not np.isfinite(value).all():
                raise ad.NonFiniteError(f"{name} has non-finite entries")
            self[name] = Tensor(value, name=name)

    @classmethod
    def init(cls, config, seed=0, scale=0.05):
        """Weights uniform in [-scale, scale], biases zero."""
        rng = np.random.default_rng(seed)
        arrays = {}
        for name, shape_of in PARAM_SHAPES.items():
            shape = shape_of(config)
            if name.endswith("bias"):
                arrays[name] = np.zeros(shape)
            else:
                arrays[name] = rng.uniform(-scale, scale, size=shape)
        return cls(config, arrays)

    def arrays(self):
        return {name: t.value.copy() for name, t in self.items()}

    def copy(self):
        return ModelParams(self.config, self.arrays())

    def save(self, path):
        ad.save_params(path, self, header={"model_config": self.config.to_dict()})

    @classmethod
    def load(cls, path):
        arrays, header = ad.load_params(path)
        return cls(ModelConfig.from_dict(header["model_config"]), arrays)


@dataclass
class MemoryState:
    """Hidden and memory tapes, oldest entry first.

    ``distances`` holds, for each tape entry at position p, the distance of
    gap p (``None`` for position 0, which has no gap on its left).
    """

    span: int
    h: list = field(default_factory=list)
    c: list = field(default_factory=list)
    distances: list = field(default_factory=list)
    positions: list = field(default_factory=list)

    def __len__(self):
        return len(self.h)

    def write(self, h, c, distance, position):
        keep = slice(-self.span, None)
        return MemoryState(self.span, (self.h + [h])[keep], (self.c + [c])[keep],
                           (self.distances + [distance])[keep],
                           (self.positions + [position])[keep])


# -- parsing network -------------------------------------------------------

def embed(token_ids, params):
    ids = np.asarray(token_ids, dtype=np.int64).reshape(-1)
    vocab = params["embedding"].shape[0]
    if ids.size and (ids.min() < 0 or ids.max() >= vocab):
        raise ValueError(f"token id out of range for vocabulary of {vocab}")
    return ad.take(params["embedding"], ids)


def syntactic_distances(embeddings, params, lookback=None, with_hidden=False):
    """Distances of the K - 1 gaps of a K-token embedded sequence.

    Gap i sees tokens i - L .. i through one convolution window, with L - 1
    zero vectors padded in front.
    """
    lookback = lookback or params.config.lookback
    k, dim = embeddings.shape
    if k < 1:
        raise ValueError("need at least one token")
    padded = ad.concat([ad.constant(np.zeros((lookback - 1, dim))), embeddings], axis=0)
    # padded row of token p is p + L - 1; gap i reads padded rows i-1 .. i+L-1
    windows = np.arange(1, k)[:, None] - 1 + np.arange(lookback + 1)[None, :]
    flat = ad.reshape(ad.take(padded, windows), (k - 1, (lookback + 1) * dim))
    hidden = ad.relu(flat @ params["conv_weight"].T + params["conv_bias"])
    dist = ad.relu(hidden @ params["dist_weight"].T + params["dist_bias"])
    dist = ad.reshape(dist, (k - 1,))
    return (dist, hidden) if with_hidden else dist


def attention_alpha(d_t, d_j, tau):
    """Probability-like score that d_t exceeds d_j, for plain floats."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    return (min(1.0, max(-1.0, (d_t - d_j) * tau)) + 1.0) / 2.0


def alpha_tensor(d_t, d_js, tau):
    return (ad.hardtanh((d_t - d_js) * tau) + 1.0) * 0.5


def gates(alphas):
    """Gate row from the alphas of one timestep.

    ``alphas[k]`` is alpha_j for j = k + 1, i.e. the scores of history
    positions 1 .. t-1; the result has one gate per position 0 .. t-1 with
    ``g[i] = prod(alphas[i:])``.
    """
    a = np.asarray(alphas, dtype=np.float64)
    if a.size and (a.min() < 0 or a.max() > 1):
        raise ValueError("alpha outside [0, 1]")
    return ad.suffix_prod(np.concatenate([[1.0], a])).value


def gate_tensor(d_t, tape_distances, tau):
    """Gate row over tape entries, given the distance of the current gap.

    ``tape_distances`` are the gap distances of the tape entries, oldest
    first.  The oldest entry's own distance never enters a product, so it
    may be ``None``.  Returns ``(gates, alphas)``; ``alphas`` is ``None`` for
    a tape of length <= 1.
    """
    n = len(tape_distances)
    if n <= 1:
        return ad.constant(np.ones(n)), None
    alphas = alpha_tensor(d_t, ad.stack(tape_distances[1:]), tau)
    row = ad.suffix_prod(ad.concat([ad.constant(np.ones(1)), alphas]))
    return row, alphas


# -- reading network -------------------------------------------------------

def _structured_summary(tapes, query, gate_row, scale):
    """Gated attention over tape matrices; returns (summaries, s_tilde, s)."""
    keys = tapes[0]
    s_tilde = ad.softmax((keys @ query) * scale)
    total = ad.clamp_min(ad.sum(gate_row))
    s = gate_row * s_tilde / total
    return [s @ m for m in tapes], s_tilde, s


def reading_step(x_t, state, gate_row, params, distance=None, position=None, trace=None):
    """One LSTM update reading from the gated summary of the tapes.

    Returns ``(h_t, c_t, new_state)``; the new state has (h_t, c_t) appended
    and is truncated to the memory span.
    """
    cfg = params.config
    n = len(state)
    if gate_row.shape != (n,):
        raise ad.ShapeError(f"gate row of length {gate_row.shape} for tape of {n}")
    dim = cfg.hidden_dim
    if n:
        k = params["query_hidden"] @ state.h[-1] + params["query_input"] @ x_t
        (h_sum, c_sum), s_tilde, s = _structured_summary(
            [ad.stack(state.h), ad.stack(state.c)], k, gate_row, 1.0 / np.sqrt(dim))
        if trace is not None:
            trace.append({"kind": "read", "position": position,
                          "gates": gate_row.value.copy(),
                          "s_tilde": s_tilde.value.copy(), "s": s.value.copy()})
    else:
        h_sum = c_sum = ad.constant(np.zeros(dim))
    z = params["lstm_weight"] @ ad.concat([x_t, h_sum]) + params["lstm_bias"]
    i_gate = ad.sigmoid(z[0:dim])
    f_gate = ad.sigmoid(z[dim:2 * dim])
    cand = ad.tanh(z[2 * dim:3 * dim])
    o_gate = ad.sigmoid(z[3 * dim:])
    c_t = f_gate * c_sum + i_gate * cand
    h_t = o_gate * ad.tanh(c_t)
    if position is None:
        position = state.positions[-1] + 1 if n else 0
    return h_t, c_t, state.write(h_t, c_t, distance, position)


# -- predict network -------------------------------------------------------

def _output_head(summary, h_t, params):
    feat = ad.concat([summary, h_t], axis=-1)
    w1, b1 = params["mlp_weight"], params["mlp_bias"]
    hidden = ad.relu(feat @ w1.T + b1)
    return hidden @ params["out_weight"].T + params["out_bias"]


def predict_step(state, params, trace=None):
    """Distribution over the next token given the tapes after step t.

    The distance of the unseen next gap is estimated from h_t; the gates it
    induces over the earlier tape entries control the attention summary fed
    to the output MLP together with h_t.
    """
    if not len(state):
        raise ValueError("predict_step needs at least one written state")
    cfg = params.config
    h_t = state.h[-1]
    d_next = ad.relu(params["pred_dist_weight"] @ h_t + params["pred_dist_bias"])
    d_next = ad.reshape(d_next, ())
    row, alphas = gate_tensor(d_next, state.distances, cfg.tau)
    if len(state) > 1:
        earlier = row[:-1]
        query = params["query_hidden"] @ h_t
        (summary,), s_tilde, s = _structured_summary(
            [ad.stack(state.h[:-1])], query, earlier, 1.0 / np.sqrt(cfg.hidden_dim))
        if trace is not None:
            trace.append({"kind": "predict", "position": state.positions[-1],
                          "alphas": alphas.value.copy(), "gates": earlier.value.copy(),
                          "s_tilde": s_tilde.value.copy(), "s": s.value.copy()})
    else:
        summary = ad.constant(np.zeros(cfg.hidden_dim))
    return ad.softmax(_output_head(summary, h_t, params))


# -- full sentence ---------------------------------------------------------

class LMOutput(tuple):
    """(nll, count, distances): summed NLL tensor, number of predicted
    tokens, and the gap distances used for tree induction."""

    __slots__ = ()

    def __new__(cls, nll, count, distances):
        return super().__new__(cls, (nll, count, distances))

    nll = property(lambda self: self[0])
    count = property(lambda self: self[1])
    distances = property(lambda self: self[2])


def run_reader(ids, params, trace=None):
    """Parsing and reading networks over a sentence.

    Returns ``(distances, hidden_states, final_state)`` where hidden_states
    holds h_0 .. h_{K-2} (the last token is never read for prediction).
    """
    cfg = params.config
    emb = embed(ids, params)
    k = emb.shape[0]
    dist = syntactic_distances(emb, params)
    state = MemoryState(cfg.memory_span)
    hs = []
    for t in range(k - 1):
        d_t = dist[t - 1] if t else None
        if t:
            row, alphas = gate_tensor(d_t, state.distances, cfg.tau)
            if trace is not None and alphas is not None:
                trace.append({"kind": "alpha", "position": t, "alphas": alphas.value.copy()})
        else:
            row = ad.constant(np.zeros(0))
        h_t, _, state = reading_step(emb[t], state, row, params, distance=d_t,
                                     position=t, trace=trace)
        hs.append(h_t)
    return dist, hs, state


def _batched_logits(dist, hs, params, trace=None):
    """Predict-network logits for every step t = 0 .. T-1 at once.

    Row t mirrors :func:`predict_step` on the tapes after step t, with the
    memory span applied through masks.
    """
    cfg = params.config
    steps = len(hs)
    span = cfg.memory_span
    hmat = ad.stack(hs)
    d_next = ad.reshape(ad.relu(hmat @ params["pred_dist_weight"].T + params["pred_dist_bias"]),
                        (steps,))
    gap = ad.concat([ad.constant(np.zeros(1)), dist[: steps - 1]]) if steps > 1 \
        else ad.constant(np.zeros(1))
    t_idx = np.arange(steps)[:, None]
    j_idx = np.arange(steps)[None, :]
    oldest = np.maximum(0, t_idx - span + 1)
    used = ((j_idx >= 1) & (j_idx <= t_idx) & (j_idx > oldest)).astype(np.float64)
    window = (j_idx >= oldest) & (j_idx < t_idx)
    alphas = alpha_tensor(ad.reshape(d_next, (steps, 1)), ad.reshape(gap, (1, steps)), cfg.tau)
    g = ad.suffix_prod(alphas * used + (1.0 - used)) * window.astype(np.float64)
    query = hmat @ params["query_hidden"].T
    scores = (query @ hmat.T) * (1.0 / np.sqrt(cfg.hidden_dim))
    s_tilde = ad.softmax(scores, mask=window)
    total = ad.clamp_min(ad.sum(g, axis=1))
    s = g * s_tilde / ad.reshape(total, (steps, 1))
    if trace is not None:
        for t in range(1, steps):
            lo = int(oldest[t, 0])
            trace.append({"kind": "predict", "position": t,
                          "alphas": alphas.value[t, lo + 1:t + 1].copy(),
                          "gates": g.value[t, lo:t].copy(),
                          "s_tilde": s_tilde.value[t, lo:t].copy(),
                          "s": s.value[t, lo:t].copy()})
    return _output_head(s @ hmat, hmat, params)


def lm_negative_log_likelihood(ids, params, trace=None):
    """Summed next-token NLL over a sentence, left to right.

    ``trace``, when a list, receives dicts with the alphas, gates and
    attention weights of every reading and predict step.
    """
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size < 2:
        raise ValueError("sentence needs at least two tokens")
    dist, hs, _ = run_reader(ids, params, trace)
    logits = _batched_logits(dist, hs, params, trace)
    nll = ad.softmax_cross_entropy(logits, ids[1:])
    return LMOutput(nll, int(ids.size - 1), dist)


def sentence_distances(ids, params):
    """Gap distances only; they depend on the parsing network alone."""
    ids = np.asarray(ids, dtype=np.int64)
    return syntactic_distances(embed(ids, params), params).value
