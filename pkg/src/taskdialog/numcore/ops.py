"""Network building blocks on top of the tape: GRU cell, additive
attention, the joint generate/copy softmax, and inverted dropout.

The GRU cell is a single fused tape node (hand-written backward) because
it dominates the op count of a forward pass; attention and the copy
softmax are compositions of the primitive ops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import (
    EmptySourceError,
    ShapeError,
    Tensor,
    _node,
    accumulate_grad,
    add,
    concat,
    matmul,
    softmax,
    tanh,
    transpose,
)


class ConfigError(ValueError):
    """A caller-supplied setting is outside its legal range."""


@dataclass
class GruParams:
    """Per-gate weights: w_* map input -> hidden, u_* map hidden -> hidden."""

    w_z: Tensor
    u_z: Tensor
    b_z: Tensor
    w_r: Tensor
    u_r: Tensor
    b_r: Tensor
    w_n: Tensor
    u_n: Tensor
    b_n: Tensor

    def tensors(self) -> list[Tensor]:
        return [self.w_z, self.u_z, self.b_z, self.w_r, self.u_r, self.b_r,
                self.w_n, self.u_n, self.b_n]

    @property
    def input_dim(self) -> int:
        return self.w_z.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w_z.shape[0]


def gru_cell(x: Tensor, h_prev: Tensor, p: GruParams) -> Tensor:
    """One GRU step.

    z = sigmoid(Wz x + Uz h + bz)
    r = sigmoid(Wr x + Ur h + br)
    n = tanh(Wn x + r * (Un h) + bn)
    h' = (1 - z) * n + z * h
    """
    if x.data.ndim != 1 or h_prev.data.ndim != 1:
        raise ShapeError("gru_cell works on vectors")
    if x.data.shape[0] != p.input_dim:
        raise ShapeError(f"input dim {x.data.shape[0]} != {p.input_dim}")
    if h_prev.data.shape[0] != p.hidden_dim:
        raise ShapeError(f"hidden dim {h_prev.data.shape[0]} != {p.hidden_dim}")

    xd, hd = x.data, h_prev.data
    z = 1.0 / (1.0 + np.exp(-(p.w_z.data @ xd + p.u_z.data @ hd + p.b_z.data)))
    r = 1.0 / (1.0 + np.exp(-(p.w_r.data @ xd + p.u_r.data @ hd + p.b_r.data)))
    u = p.u_n.data @ hd
    n = np.tanh(p.w_n.data @ xd + r * u + p.b_n.data)
    out_data = (1.0 - z) * n + z * hd

    def backward(g):
        dz = g * (hd - n)
        dn = g * (1.0 - z)
        dh = g * z
        dpre_n = dn * (1.0 - n * n)
        accumulate_grad(p.w_n, np.outer(dpre_n, xd))
        accumulate_grad(p.b_n, dpre_n)
        dx = p.w_n.data.T @ dpre_n
        dr = dpre_n * u
        du = dpre_n * r
        accumulate_grad(p.u_n, np.outer(du, hd))
        dh = dh + p.u_n.data.T @ du
        dpre_r = dr * r * (1.0 - r)
        accumulate_grad(p.w_r, np.outer(dpre_r, xd))
        accumulate_grad(p.u_r, np.outer(dpre_r, hd))
        accumulate_grad(p.b_r, dpre_r)
        dx += p.w_r.data.T @ dpre_r
        dh = dh + p.u_r.data.T @ dpre_r
        dpre_z = dz * z * (1.0 - z)
        accumulate_grad(p.w_z, np.outer(dpre_z, xd))
        accumulate_grad(p.u_z, np.outer(dpre_z, hd))
        accumulate_grad(p.b_z, dpre_z)
        dx += p.w_z.data.T @ dpre_z
        dh = dh + p.u_z.data.T @ dpre_z
        accumulate_grad(x, dx)
        accumulate_grad(h_prev, dh)

    return _node(out_data, (x, h_prev, *p.tensors()), backward)


@dataclass
class AttnParams:
    """Additive attention: score_i = v . tanh(Wq q + Wk k_i)."""

    query_proj: Tensor  # (A, D)
    key_proj: Tensor    # (A, D)
    score_vec: Tensor   # (A,)

    def tensors(self) -> list[Tensor]:
        return [self.query_proj, self.key_proj, self.score_vec]


def attention(query: Tensor, keys: Tensor, p: AttnParams) -> tuple[Tensor, Tensor]:
    """Attend a query vector over a (L, D) key matrix.

    Returns (context, weights): weights = softmax over additive scores,
    context = weights @ keys.
    """
    return AttentionPool(keys, p).attend(query)


class AttentionPool:
    """A key set with its projection cached, reusable across queries.

    Decoders attend over the same pool at every step; projecting the keys
    once spares the dominant matmul.
    """

    def __init__(self, keys: Tensor, params: AttnParams):
        if keys.data.ndim != 2:
            raise ShapeError("attention keys must be a (L, D) matrix")
        if keys.data.shape[0] == 0:
            raise EmptySourceError("attention over an empty key set")
        self.keys = keys
        self.params = params
        self._projected = matmul(keys, transpose(params.key_proj))  # (L, A)

    def attend(self, query: Tensor) -> tuple[Tensor, Tensor]:
        q_proj = matmul(self.params.query_proj, query)           # (A,)
        scores = matmul(tanh(add(self._projected, q_proj)), self.params.score_vec)
        weights = softmax(scores)
        context = matmul(weights, self.keys)
        return context, weights


class JointDistribution:
    """Output of the joint generate/copy softmax.

    probs[:V] are generation shares per vocab id, probs[V:] copy shares
    per source position; the probability of a surface token is the sum of
    its generation share and every copy share aligned to it.
    """

    def __init__(self, probs: Tensor, vocab, alignment: list[str]):
        self.probs = probs
        self.vocab = vocab
        self.alignment = alignment
        self._vocab_size = len(vocab)

    def _indices(self, token: str) -> list[int]:
        idx = []
        vid = self.vocab.id_of(token)
        if vid is not None:
            idx.append(vid)
        for pos, tok in enumerate(self.alignment):
            if tok == token:
                idx.append(self._vocab_size + pos)
        return idx

    def token_prob(self, token: str) -> Tensor:
        """Differentiable probability of a surface token (0 if unreachable)."""
        from .tensor import gather_sum

        return gather_sum(self.probs, self._indices(token))

    def merged(self) -> dict[str, float]:
        p = self.probs.data
        out = {tok: float(p[i]) for i, tok in enumerate(self.vocab.tokens)}
        for pos, tok in enumerate(self.alignment):
            out[tok] = out.get(tok, 0.0) + float(p[self._vocab_size + pos])
        return out

    def argmax_token(self) -> str:
        p = self.probs.data
        best_tok = None
        best = -1.0
        merged_copy: dict[str, float] = {}
        for pos, tok in enumerate(self.alignment):
            merged_copy[tok] = merged_copy.get(tok, 0.0) + float(p[self._vocab_size + pos])
        for i, tok in enumerate(self.vocab.tokens):
            mass = float(p[i]) + merged_copy.pop(tok, 0.0)
            if mass > best:
                best, best_tok = mass, tok
        for tok, mass in merged_copy.items():
            if mass > best:
                best, best_tok = mass, tok
        return best_tok


def copy_combine(gen_scores: Tensor, copy_scores: Tensor | None,
                 alignment: list[str], vocab) -> JointDistribution:
    """Single softmax over generation scores and per-position copy scores.

    With an empty copy source this degrades to a plain softmax over the
    vocabulary.
    """
    if copy_scores is not None and copy_scores.data.shape[0] != len(alignment):
        raise ShapeError("copy_scores and alignment must have equal length")
    if copy_scores is None or copy_scores.data.shape[0] == 0:
        joint = gen_scores
        alignment = []
    else:
        joint = concat([gen_scores, copy_scores])
    return JointDistribution(softmax(joint), vocab, alignment)


def bce_with_logit(logit: Tensor, target: float) -> Tensor:
    """Binary cross-entropy straight from the logit.

    Equals -[z log sigmoid(s) + (1-z) log(1 - sigmoid(s))] but computed as
    logaddexp(0, s) - z*s, which stays finite for saturated logits.
    """
    if logit.data.ndim != 0:
        raise ShapeError("bce_with_logit works on a scalar logit")
    z = float(target)
    s = logit.data

    def backward(g):
        accumulate_grad(logit, g * (1.0 / (1.0 + np.exp(-s)) - z))

    return _node(np.logaddexp(0.0, s) - z * s, (logit,), backward)


def dropout(x: Tensor, rate: float, training: bool, rng: np.random.Generator) -> Tensor:
    """Inverted dropout: zero with probability `rate`, scale survivors."""
    if not 0.0 <= rate < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x
    mask = (rng.random(x.data.shape) >= rate).astype(x.data.dtype) / (1.0 - rate)

    def backward(g):
        accumulate_grad(x, g * mask)

    return _node(x.data * mask, (x,), backward)
