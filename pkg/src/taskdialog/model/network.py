"""The dialogue network forward pass.

Five cooperating parts, all reading one encoder pass over the previous
agent response, the serialized previous belief, and the user utterance:

  1. informable slot value decoders (weight-tied GRU, generate-or-copy
     over the encoder source),
  2. per-slot requestable binary classifiers,
  3. per-slot response-placeholder binary classifiers conditioned on the
     KB match indicator,
  4. a word copy probability gate built from 1-3,
  5. the copy-gated response decoder attending over both the encoder
     states and the belief-decoder states.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..corpus.beliefs import serialize_belief
from ..corpus.schema import BeliefState, SlotSchema
from ..corpus.vocab import EOS, GO, Vocab
from ..kb import KBTable, MatchIndicator, encode_match_count, query
from ..numcore import (
    AttentionPool,
    JointDistribution,
    Tensor,
    concat,
    copy_combine,
    dot,
    dropout,
    gru_cell,
    matmul,
    mul,
    pack,
    row,
    rows,
    sigmoid,
    stack,
    tanh,
    transpose,
)
from .params import ModelParams

DEFAULT_MAX_VALUE_LEN = 8
DEFAULT_MAX_RESPONSE_LEN = 50
DECISION_THRESHOLD = 0.5

GREEDY = "greedy"
TEACHER = "teacher"


@dataclass
class RunContext:
    """Per-call switches: dropout only fires in training mode."""

    training: bool = False
    dropout_rate: float = 0.0
    rng: np.random.Generator | None = None

    def drop(self, t: Tensor) -> Tensor:
        if not self.training or self.dropout_rate == 0.0:
            return t
        return dropout(t, self.dropout_rate, True, self.rng)


EVAL_CONTEXT = RunContext()


@dataclass
class EncodeResult:
    hiddens: Tensor                 # (L, H)
    last: Tensor                    # (H,)
    source_tokens: tuple[str, ...]
    cache: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.source_tokens)


@dataclass
class InformableDecode:
    slot: str
    value_tokens: tuple[str, ...]       # without the end marker
    step_tokens: tuple[str, ...]        # emitted/forced tokens incl. end marker
    hiddens: list[Tensor]
    distributions: list[JointDistribution]


@dataclass
class SlotClassification:
    slot: str
    prob: Tensor      # scalar in (0, 1)
    logit: Tensor
    hidden: Tensor


@dataclass
class BeliefTrace:
    informable: dict[str, InformableDecode]
    requestable: dict[str, SlotClassification]
    response: dict[str, SlotClassification] = field(default_factory=dict)

    def informable_values(self) -> dict[str, tuple[str, ...]]:
        return {slot: dec.value_tokens for slot, dec in self.informable.items()}


class CopyProbVector:
    """Per-token copy gate: 1 for generated informable value tokens,
    classifier probability for slot-name and placeholder tokens, 0 for
    everything else. Value tokens win collisions."""

    def __init__(self, one_tokens, req_probs: dict[str, Tensor], resp_probs: dict[str, Tensor]):
        self._gates: dict[str, Tensor | None] = {}
        for slot, prob in req_probs.items():
            self._gates[slot] = prob
        for slot, prob in resp_probs.items():
            self._gates[slot] = prob
        for tok in one_tokens:
            self._gates[tok] = None  # exact 1.0

    def value(self, token: str) -> float:
        if token not in self._gates:
            return 0.0
        gate = self._gates[token]
        return 1.0 if gate is None else float(gate.data)

    def gate(self, token: str) -> Tensor | None:
        """Tensor gate for graph use; None means the constant 1."""
        return self._gates.get(token)

    def tokens(self):
        return self._gates.keys()


@dataclass
class ResponseDecode:
    tokens: tuple[str, ...]
    distributions: list[JointDistribution]


@dataclass
class TurnPrediction:
    belief: BeliefState
    match: MatchIndicator
    response_tokens: tuple[str, ...]
    trace: BeliefTrace
    response_slots: frozenset[str]
    kb_results: list[dict]
    copy_probs: CopyProbVector


def safe_lookup(table: KBTable | None, constraints: dict) -> tuple[MatchIndicator, list[dict]]:
    """Query tolerant of missing tables/attributes: a binding constraint
    the table cannot express matches nothing."""
    if table is None:
        return encode_match_count(0), []
    from ..kb import normalize_value

    known, impossible = {}, False
    for slot, value in constraints.items():
        norm = normalize_value(value)
        if norm in ("", "dontcare"):
            continue
        if slot in table.attributes:
            known[slot] = norm
        else:
            impossible = True
    if impossible:
        return encode_match_count(0), []
    results = query(table, known)
    return encode_match_count(len(results)), results


class DialogueNetwork:
    def __init__(self, params: ModelParams, vocab: Vocab, schema: SlotSchema,
                 max_value_len: int = DEFAULT_MAX_VALUE_LEN,
                 max_response_len: int = DEFAULT_MAX_RESPONSE_LEN):
        self.params = params
        self.vocab = vocab
        self.schema = schema
        self.max_value_len = max_value_len
        self.max_response_len = max_response_len

    # -- encoding -----------------------------------------------------------

    def encode_input(self, prev_response, prev_belief_tokens, user_utterance,
                     ctx: RunContext = EVAL_CONTEXT) -> EncodeResult:
        source = tuple(prev_response) + tuple(prev_belief_tokens) + tuple(user_utterance)
        if not source:
            raise ValueError("encoder input is empty; a turn always carries the user utterance")
        ids = self.vocab.encode(source)
        emb = ctx.drop(rows(self.params.embedding, ids))
        h = self._zero_hidden()
        hiddens = []
        for i in range(len(source)):
            h = gru_cell(row(emb, i), h, self.params.encoder)
            hiddens.append(h)
        return EncodeResult(hiddens=stack(hiddens), last=h, source_tokens=source)

    def _zero_hidden(self) -> Tensor:
        return Tensor(np.zeros(self.params.hidden_dim, dtype=self.params.dtype))

    def _embed_token(self, token: str, ctx: RunContext) -> Tensor:
        idx = self.vocab.id_of(token)
        if idx is None:
            idx = self.vocab.unk_id
        return ctx.drop(row(self.params.embedding, idx))

    # per-encoding caches: attention pools and the projected copy keys
    def _enc_pool(self, enc: EncodeResult, name: str, attn) -> AttentionPool:
        key = f"pool.{name}"
        if key not in enc.cache:
            enc.cache[key] = AttentionPool(enc.hiddens, attn)
        return enc.cache[key]

    def _inf_copy_keys(self, enc: EncodeResult) -> Tensor:
        if "inf_copy_keys" not in enc.cache:
            enc.cache["inf_copy_keys"] = tanh(
                matmul(enc.hiddens, transpose(self.params.inf_copy)))
        return enc.cache["inf_copy_keys"]

    # -- informable slot value decoding --------------------------------------

    def decode_informable_slot(self, slot: str, enc: EncodeResult,
                               mode: str = GREEDY, gold_value=None,
                               ctx: RunContext = EVAL_CONTEXT) -> InformableDecode:
        if slot not in self.schema.informable_slots:
            raise ValueError(f"unknown informable slot {slot!r}")
        if mode == TEACHER and gold_value is None:
            raise ValueError("teacher mode needs the gold value tokens")
        end_marker = self.schema.end_marker(slot)
        pool = self._enc_pool(enc, "inf", self.params.inf_attn)
        copy_keys = self._inf_copy_keys(enc)
        alignment = list(enc.source_tokens)

        targets = list(gold_value) + [end_marker] if mode == TEACHER else None
        limit = len(targets) if targets is not None else self.max_value_len + 1

        h = enc.last
        prev = slot  # the slot's own start symbol
        step_tokens: list[str] = []
        hiddens: list[Tensor] = []
        dists: list[JointDistribution] = []
        for j in range(limit):
            context, _ = pool.attend(h)
            h = gru_cell(concat([context, self._embed_token(prev, ctx)]), h, self.params.inf_gru)
            hiddens.append(h)
            h_out = ctx.drop(h)
            gen_scores = matmul(self.params.inf_gen, h_out)
            copy_scores = matmul(copy_keys, h_out)
            dist = copy_combine(gen_scores, copy_scores, alignment, self.vocab)
            dists.append(dist)
            tok = targets[j] if targets is not None else dist.argmax_token()
            step_tokens.append(tok)
            prev = tok
            if targets is None and tok == end_marker:
                break
        value = tuple(t for t in step_tokens if t != end_marker)
        if targets is None:
            value = value[:self.max_value_len]
        return InformableDecode(slot=slot, value_tokens=value,
                                step_tokens=tuple(step_tokens),
                                hiddens=hiddens, distributions=dists)

    # -- requestable slot classification -------------------------------------

    def _req_context(self, enc: EncodeResult) -> Tensor:
        # the query is the encoder's last state for every slot, so one
        # context serves all classifiers
        if "req_context" not in enc.cache:
            pool = self._enc_pool(enc, "req", self.params.req_attn)
            enc.cache["req_context"] = pool.attend(enc.last)[0]
        return enc.cache["req_context"]

    def classify_requestable(self, slot: str, enc: EncodeResult,
                             ctx: RunContext = EVAL_CONTEXT) -> SlotClassification:
        if slot not in self.schema.requestable_slots:
            raise ValueError(f"unknown requestable slot {slot!r}")
        context = self._req_context(enc)
        x = concat([context, self._embed_token(slot, ctx)])
        hidden = gru_cell(x, enc.last, self.params.req_gru)
        logit = dot(self.params.req_out, ctx.drop(hidden))
        return SlotClassification(slot=slot, prob=sigmoid(logit), logit=logit, hidden=hidden)

    # -- response slot classification -----------------------------------------

    def _belief_ir_pool(self, trace: BeliefTrace) -> AttentionPool | None:
        vectors = []
        for slot in self.schema.informable_slots:
            vectors.extend(trace.informable[slot].hiddens)
        for slot in self.schema.requestable_slots:
            vectors.append(trace.requestable[slot].hidden)
        if not vectors:
            return None
        return AttentionPool(stack(vectors), self.params.respslot_attn)

    def classify_response_slot(self, slot: str, trace: BeliefTrace, d: MatchIndicator,
                               pool: AttentionPool | None = None,
                               ctx: RunContext = EVAL_CONTEXT) -> SlotClassification:
        if slot not in self.schema.response_slots:
            raise ValueError(f"unknown response slot {slot!r}")
        requestable = self.schema.requestable_for(slot)
        anchor = trace.requestable[requestable].hidden
        if pool is None:
            pool = self._belief_ir_pool(trace)
        if pool is not None:
            context, _ = pool.attend(anchor)
        else:
            context = self._zero_hidden()
        d_t = Tensor(d.as_array(self.params.dtype))
        x = concat([context, self._embed_token(slot, ctx), d_t])
        hidden = gru_cell(x, anchor, self.params.respslot_gru)
        logit = dot(self.params.respslot_out, ctx.drop(hidden))
        return SlotClassification(slot=slot, prob=sigmoid(logit), logit=logit, hidden=hidden)

    # -- word copy probability -------------------------------------------------

    def word_copy_probability(self, trace: BeliefTrace) -> CopyProbVector:
        value_tokens = []
        for dec in trace.informable.values():
            value_tokens.extend(dec.value_tokens)
        req_probs = {s: c.prob for s, c in trace.requestable.items()}
        resp_probs = {s: c.prob for s, c in trace.response.items()}
        return CopyProbVector(value_tokens, req_probs, resp_probs)

    # -- response decoding -------------------------------------------------------

    def _copy_candidates(self, trace: BeliefTrace, pc: CopyProbVector):
        """(token, trace hidden, gate) per candidate; informable value
        occurrences first, then slot names, then placeholders."""
        candidates = []
        for slot in self.schema.informable_slots:
            dec = trace.informable[slot]
            for tok, hidden in zip(dec.value_tokens, dec.hiddens):
                candidates.append((tok, hidden, None))  # gate 1 by construction
        for slot in self.schema.requestable_slots:
            cls = trace.requestable[slot]
            candidates.append((slot, cls.hidden, pc.gate(slot)))
        for slot in self.schema.response_slots:
            cls = trace.response[slot]
            candidates.append((slot, cls.hidden, pc.gate(slot)))
        return candidates

    def _belief_full_pool(self, trace: BeliefTrace) -> AttentionPool | None:
        vectors = []
        for slot in self.schema.informable_slots:
            vectors.extend(trace.informable[slot].hiddens)
        for slot in self.schema.requestable_slots:
            vectors.append(trace.requestable[slot].hidden)
        for slot in self.schema.response_slots:
            vectors.append(trace.response[slot].hidden)
        if not vectors:
            return None
        return AttentionPool(stack(vectors), self.params.resp_attn_belief)

    def _response_decoder_state(self, enc: EncodeResult, trace: BeliefTrace,
                                d: MatchIndicator, pc: CopyProbVector):
        enc_pool = self._enc_pool(enc, "resp", self.params.resp_attn_enc)
        belief_pool = self._belief_full_pool(trace)
        d_t = Tensor(d.as_array(self.params.dtype))
        candidates = self._copy_candidates(trace, pc)
        alignment = [tok for tok, _, _ in candidates]
        if candidates:
            cand_keys = tanh(matmul(stack([h for _, h, _ in candidates]),
                                    transpose(self.params.resp_copy)))
            one = Tensor(np.asarray(1.0, dtype=self.params.dtype))
            gates = pack([gate if gate is not None else one for _, _, gate in candidates])
        else:
            cand_keys = None
            gates = None
        return enc_pool, belief_pool, d_t, cand_keys, gates, alignment

    def _response_step(self, h: Tensor, prev: str, state, ctx: RunContext):
        enc_pool, belief_pool, d_t, cand_keys, gates, alignment = state
        ctx_enc, _ = enc_pool.attend(h)
        ctx_belief = belief_pool.attend(h)[0] if belief_pool is not None else self._zero_hidden()
        x = concat([ctx_enc, ctx_belief, self._embed_token(prev, ctx), d_t])
        h = gru_cell(x, h, self.params.resp_gru)
        h_out = ctx.drop(h)
        gen_scores = matmul(self.params.resp_gen, h_out)
        copy_scores = mul(matmul(cand_keys, h_out), gates) if cand_keys is not None else None
        return h, copy_combine(gen_scores, copy_scores, alignment, self.vocab)

    def decode_response(self, enc: EncodeResult, trace: BeliefTrace, d: MatchIndicator,
                        pc: CopyProbVector, mode: str = GREEDY, gold_response=None,
                        beam_width: int = 1,
                        ctx: RunContext = EVAL_CONTEXT) -> ResponseDecode:
        if mode == TEACHER and gold_response is None:
            raise ValueError("teacher mode needs the gold response tokens")
        state = self._response_decoder_state(enc, trace, d, pc)
        if mode == GREEDY and beam_width > 1:
            return self._beam_decode_response(state, enc.last, beam_width, ctx)

        targets = list(gold_response) + [EOS] if mode == TEACHER else None
        limit = len(targets) if targets is not None else self.max_response_len + 1
        h = enc.last
        prev = GO
        out_tokens: list[str] = []
        dists: list[JointDistribution] = []
        for j in range(limit):
            h, dist = self._response_step(h, prev, state, ctx)
            dists.append(dist)
            tok = targets[j] if targets is not None else dist.argmax_token()
            prev = tok
            if tok == EOS:
                break
            out_tokens.append(tok)
        if targets is None:
            out_tokens = out_tokens[:self.max_response_len]
        return ResponseDecode(tokens=tuple(out_tokens), distributions=dists)

    def _beam_decode_response(self, state, h0: Tensor, beam_width: int,
                              ctx: RunContext) -> ResponseDecode:
        """Width-k search over summed token log probabilities; ties break
        like the greedy path (vocab order first, copy-only tokens after)."""
        beams = [(0.0, (), h0, GO, [])]  # (logprob, tokens, hidden, prev, dists)
        finished: list[tuple[float, tuple, list]] = []
        for _ in range(self.max_response_len + 1):
            grown = []
            for logp, tokens, h, prev, dists in beams:
                new_h, dist = self._response_step(h, prev, state, ctx)
                merged = dist.merged()
                top = sorted(merged.items(), key=lambda kv: -kv[1])[:beam_width]
                for tok, p in top:
                    step_logp = logp + float(np.log(max(p, 1e-30)))
                    if tok == EOS:
                        finished.append((step_logp, tokens, dists + [dist]))
                    else:
                        grown.append((step_logp, tokens + (tok,), new_h, tok,
                                      dists + [dist]))
            if not grown:
                break
            grown.sort(key=lambda b: -b[0])
            beams = grown[:beam_width]
        if not finished:
            finished = [(logp, tokens, dists) for logp, tokens, _, _, dists in beams]
        finished.sort(key=lambda b: -b[0])
        best_logp, tokens, dists = finished[0]
        return ResponseDecode(tokens=tuple(tokens[:self.max_response_len]),
                              distributions=dists)

    # -- full pipeline ---------------------------------------------------------------

    def build_trace(self, enc: EncodeResult, mode: str = GREEDY,
                    gold_belief: BeliefState | None = None,
                    ctx: RunContext = EVAL_CONTEXT) -> BeliefTrace:
        """Informable decoding plus requestable classification (the parts
        that precede the KB query)."""
        informable = {}
        for slot in self.schema.informable_slots:
            gold = gold_belief.informable.get(slot, ()) if gold_belief is not None else None
            informable[slot] = self.decode_informable_slot(slot, enc, mode=mode,
                                                           gold_value=gold, ctx=ctx)
        requestable = {slot: self.classify_requestable(slot, enc, ctx=ctx)
                       for slot in self.schema.requestable_slots}
        return BeliefTrace(informable=informable, requestable=requestable)

    def classify_all_response_slots(self, trace: BeliefTrace, d: MatchIndicator,
                                    ctx: RunContext = EVAL_CONTEXT):
        pool = self._belief_ir_pool(trace)
        for slot in self.schema.response_slots:
            trace.response[slot] = self.classify_response_slot(slot, trace, d,
                                                               pool=pool, ctx=ctx)

    def belief_from_trace(self, trace: BeliefTrace) -> BeliefState:
        informable = {slot: trace.informable[slot].value_tokens
                      for slot in self.schema.informable_slots}
        requestable = {slot for slot in self.schema.requestable_slots
                       if float(trace.requestable[slot].prob.data) > DECISION_THRESHOLD}
        return BeliefState(informable, requestable)

    def predict_turn(self, prev_response, prev_belief: BeliefState, user_utterance,
                     table: KBTable | None, beam_width: int = 1,
                     ctx: RunContext = EVAL_CONTEXT) -> TurnPrediction:
        belief_tokens = serialize_belief(prev_belief, self.schema)
        enc = self.encode_input(prev_response, belief_tokens, user_utterance, ctx=ctx)
        trace = self.build_trace(enc, mode=GREEDY, ctx=ctx)
        belief = self.belief_from_trace(trace)
        match, results = safe_lookup(table, belief.constraints())
        self.classify_all_response_slots(trace, match, ctx=ctx)
        pc = self.word_copy_probability(trace)
        decoded = self.decode_response(enc, trace, match, pc, mode=GREEDY,
                                       beam_width=beam_width, ctx=ctx)
        predicted_slots = frozenset(
            slot for slot in self.schema.response_slots
            if float(trace.response[slot].prob.data) > DECISION_THRESHOLD)
        return TurnPrediction(belief=belief, match=match,
                              response_tokens=decoded.tokens, trace=trace,
                              response_slots=predicted_slots, kb_results=results,
                              copy_probs=pc)
