"""Parameter container for the five-component dialogue network.

One embedding table is shared by the encoder and every decoder. Weights
init uniform in [-0.08, 0.08], biases zero; the attention dimension
equals the hidden dimension throughout.
"""

from __future__ import annotations

import numpy as np

from ..kb import MATCH_BINS
from ..numcore import AttnParams, GruParams, Tensor, load_checkpoint, save_checkpoint

INIT_SCALE = 0.08
EMBED_NOISE = 0.01


def _uniform(rng, shape, dtype):
    return Tensor(rng.uniform(-INIT_SCALE, INIT_SCALE, size=shape).astype(dtype),
                  requires_grad=True)


def _zeros(shape, dtype):
    return Tensor(np.zeros(shape, dtype=dtype), requires_grad=True)


def _gru(rng, input_dim, hidden_dim, dtype) -> GruParams:
    return GruParams(
        w_z=_uniform(rng, (hidden_dim, input_dim), dtype),
        u_z=_uniform(rng, (hidden_dim, hidden_dim), dtype),
        b_z=_zeros((hidden_dim,), dtype),
        w_r=_uniform(rng, (hidden_dim, input_dim), dtype),
        u_r=_uniform(rng, (hidden_dim, hidden_dim), dtype),
        b_r=_zeros((hidden_dim,), dtype),
        w_n=_uniform(rng, (hidden_dim, input_dim), dtype),
        u_n=_uniform(rng, (hidden_dim, hidden_dim), dtype),
        b_n=_zeros((hidden_dim,), dtype),
    )


def _attn(rng, dim, dtype) -> AttnParams:
    return AttnParams(query_proj=_uniform(rng, (dim, dim), dtype),
                      key_proj=_uniform(rng, (dim, dim), dtype),
                      score_vec=_uniform(rng, (dim,), dtype))


class ModelParams:
    def __init__(self, vocab_size: int, embedding_dim: int, hidden_dim: int,
                 rng: np.random.Generator, dtype=np.float32,
                 embedding_init: np.ndarray | None = None):
        self.vocab_size = vocab_size
        self.embedding_dim = embedding_dim
        self.hidden_dim = hidden_dim
        self.dtype = np.dtype(dtype)

        v, e, h = vocab_size, embedding_dim, hidden_dim
        if embedding_init is not None:
            if embedding_init.shape != (v, e):
                raise ValueError(f"embedding init shape {embedding_init.shape} != {(v, e)}")
            self.embedding = Tensor(embedding_init.astype(dtype), requires_grad=True)
        else:
            self.embedding = _uniform(rng, (v, e), dtype)

        self.encoder = _gru(rng, e, h, dtype)

        self.inf_gru = _gru(rng, h + e, h, dtype)
        self.inf_attn = _attn(rng, h, dtype)
        self.inf_gen = _uniform(rng, (v, h), dtype)
        self.inf_copy = _uniform(rng, (h, h), dtype)

        self.req_gru = _gru(rng, h + e, h, dtype)
        self.req_attn = _attn(rng, h, dtype)
        self.req_out = _uniform(rng, (h,), dtype)

        self.respslot_gru = _gru(rng, h + e + MATCH_BINS, h, dtype)
        self.respslot_attn = _attn(rng, h, dtype)
        self.respslot_out = _uniform(rng, (h,), dtype)

        self.resp_gru = _gru(rng, 2 * h + e + MATCH_BINS, h, dtype)
        self.resp_attn_enc = _attn(rng, h, dtype)
        self.resp_attn_belief = _attn(rng, h, dtype)
        self.resp_gen = _uniform(rng, (v, h), dtype)
        self.resp_copy = _uniform(rng, (h, h), dtype)

    _GRU_FIELDS = ("w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_n", "u_n", "b_n")
    _ATTN_FIELDS = ("query_proj", "key_proj", "score_vec")

    def tensors(self) -> dict[str, Tensor]:
        out = {"embedding": self.embedding}
        for prefix, gru in (("encoder", self.encoder), ("inf.gru", self.inf_gru),
                            ("req.gru", self.req_gru), ("respslot.gru", self.respslot_gru),
                            ("resp.gru", self.resp_gru)):
            for f in self._GRU_FIELDS:
                out[f"{prefix}.{f}"] = getattr(gru, f)
        for prefix, attn in (("inf.attn", self.inf_attn), ("req.attn", self.req_attn),
                             ("respslot.attn", self.respslot_attn),
                             ("resp.attn_enc", self.resp_attn_enc),
                             ("resp.attn_belief", self.resp_attn_belief)):
            for f in self._ATTN_FIELDS:
                out[f"{prefix}.{f}"] = getattr(attn, f)
        out["inf.gen"] = self.inf_gen
        out["inf.copy"] = self.inf_copy
        out["req.out"] = self.req_out
        out["respslot.out"] = self.respslot_out
        out["resp.gen"] = self.resp_gen
        out["resp.copy"] = self.resp_copy
        return out

    def load_arrays(self, arrays: dict[str, np.ndarray]):
        tensors = self.tensors()
        missing = set(tensors) - set(arrays)
        extra = set(arrays) - set(tensors)
        if missing or extra:
            raise ValueError(f"parameter set mismatch: missing={sorted(missing)} extra={sorted(extra)}")
        for name, tensor in tensors.items():
            arr = arrays[name]
            if arr.shape != tensor.data.shape:
                raise ValueError(f"shape mismatch for {name}: {arr.shape} != {tensor.data.shape}")
            tensor.data = arr.astype(self.dtype)

    def save(self, path, extra: dict | None = None):
        save_checkpoint(path, self.tensors(), extra)

    @staticmethod
    def restore(path, vocab_size, embedding_dim, hidden_dim, dtype=np.float32):
        arrays, extra = load_checkpoint(path)
        params = ModelParams(vocab_size, embedding_dim, hidden_dim,
                             np.random.default_rng(0), dtype=dtype)
        params.load_arrays(arrays)
        return params, extra


def load_word_vectors(path, dim: int) -> dict[str, np.ndarray]:
    """Read a GloVe-style text file: token then `dim` floats per line."""
    vectors = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            parts = line.rstrip().split(" ")
            if len(parts) != dim + 1:
                continue
            vectors[parts[0]] = np.asarray(parts[1:], dtype=np.float32)
    return vectors


def build_embedding_init(tokens: list[str], dim: int, rng: np.random.Generator,
                         vectors: dict[str, np.ndarray] | None) -> np.ndarray | None:
    """Pretrained rows where available; missing tokens get the average of
    the found vectors plus small uniform noise so they stay distinct."""
    if not vectors:
        return None
    found = [vectors[t] for t in tokens if t in vectors]
    if not found:
        return None
    avg = np.mean(found, axis=0)
    out = np.empty((len(tokens), dim), dtype=np.float32)
    for i, tok in enumerate(tokens):
        if tok in vectors:
            out[i] = vectors[tok]
        else:
            out[i] = avg + rng.uniform(-EMBED_NOISE, EMBED_NOISE, size=dim)
    return out
