"""Joint end-to-end optimization of the four losses, plus the
dialogue-level inference loop used for evaluation."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .corpus import (
    BeliefState,
    Corpus,
    TurnExample,
    Vocab,
    build_vocab,
    make_turn_examples,
    serialize_belief,
    tokenize,
    vocab_token_streams,
)
from .corpus.vocab import EOS
from .kb import encode_match_count
from .metrics import build_report
from .model import (
    GREEDY,
    TEACHER,
    DialogueNetwork,
    ModelParams,
    RunContext,
    build_embedding_init,
    load_word_vectors,
)
from .numcore import (
    OptimError,
    OptimizerState,
    Tensor,
    adam_step,
    add_n,
    backward,
    bce_with_logit,
    log_clamped,
    neg,
    no_grad,
    scale,
    zero_grads,
)

PROB_FLOOR = 1e-10


class ConfigError(ValueError):
    """A TrainConfig field is outside its legal range."""


class TrainAbort(RuntimeError):
    """Training hit a non-finite loss; carries the last good parameters."""

    def __init__(self, message, params: ModelParams | None = None):
        super().__init__(message)
        self.params = params


@dataclass
class TrainConfig:
    learning_rate: float = 0.00025
    dropout_rate: float = 0.5
    hidden_dim: int = 128
    embedding_dim: int = 300
    alpha_inf: float = 1.5
    alpha_req: float = 9.0
    alpha_resp_slot: float = 8.0
    alpha_resp: float = 0.5
    batch_size: int = 32
    epochs: int = 10
    seed: int = 0
    eval_belief_feed: str = "predicted"
    min_count: int = 2
    max_value_len: int = 8
    max_response_len: int = 50
    patience: int = 5
    eval_every: int = 1
    beam_width: int = 1
    embeddings_path: str | None = None

    def validate(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigError("dropout_rate must be in [0, 1)")
        for name in ("alpha_inf", "alpha_req", "alpha_resp_slot", "alpha_resp"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.eval_belief_feed not in ("predicted", "gold"):
            raise ConfigError("eval_belief_feed must be 'predicted' or 'gold'")
        for name in ("hidden_dim", "embedding_dim", "batch_size", "epochs",
                     "min_count", "beam_width"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        return self

    def to_json(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_json(obj: dict) -> "TrainConfig":
        known = {f for f in TrainConfig.__dataclass_fields__}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return TrainConfig(**obj).validate()


@dataclass
class LossBundle:
    l_inf: Tensor
    l_req: Tensor
    l_resp_slot: Tensor
    l_resp: Tensor
    total: Tensor
    clamped: bool = False

    def values(self) -> dict[str, float]:
        return {"inf": self.l_inf.item(), "req": self.l_req.item(),
                "resp_slot": self.l_resp_slot.item(), "resp": self.l_resp.item(),
                "total": self.total.item()}


def _zero_scalar(dtype) -> Tensor:
    return Tensor(np.asarray(0.0, dtype=dtype))


def _mean_of(parts: list[Tensor], dtype) -> Tensor:
    if not parts:
        return _zero_scalar(dtype)
    return scale(add_n(parts), 1.0 / len(parts))


def compute_losses(example: TurnExample, net: DialogueNetwork, config: TrainConfig,
                   rng: np.random.Generator) -> LossBundle:
    """Teacher-forced forward pass with the gold KB match indicator; the
    four losses are per-slot/per-token means as in the model definition."""
    schema = net.schema
    dtype = net.params.dtype
    ctx = RunContext(training=True, dropout_rate=config.dropout_rate, rng=rng)
    clamped = False

    belief_tokens = serialize_belief(example.prev_belief, schema)
    enc = net.encode_input(example.prev_response, belief_tokens,
                           example.user_utterance, ctx=ctx)
    trace = net.build_trace(enc, mode=TEACHER, gold_belief=example.gold_belief, ctx=ctx)

    slot_losses = []
    for slot in schema.informable_slots:
        dec = trace.informable[slot]
        step_losses = []
        for dist, target in zip(dec.distributions, dec.step_tokens):
            p = dist.token_prob(target)
            if float(p.data) < PROB_FLOOR:
                clamped = True
            step_losses.append(neg(log_clamped(p, PROB_FLOOR)))
        slot_losses.append(_mean_of(step_losses, dtype))
    l_inf = _mean_of(slot_losses, dtype)

    req_losses = [bce_with_logit(trace.requestable[slot].logit,
                                 1.0 if slot in example.gold_belief.requestable else 0.0)
                  for slot in schema.requestable_slots]
    l_req = _mean_of(req_losses, dtype)

    d = encode_match_count(example.gold_match_count)
    net.classify_all_response_slots(trace, d, ctx=ctx)
    resp_slot_losses = [bce_with_logit(trace.response[slot].logit,
                                       1.0 if slot in example.gold_response_slots else 0.0)
                        for slot in schema.response_slots]
    l_resp_slot = _mean_of(resp_slot_losses, dtype)

    pc = net.word_copy_probability(trace)
    decoded = net.decode_response(enc, trace, d, pc, mode=TEACHER,
                                  gold_response=example.gold_response, ctx=ctx)
    targets = list(example.gold_response) + [EOS]
    resp_losses = []
    for dist, target in zip(decoded.distributions, targets):
        p = dist.token_prob(target)
        if float(p.data) < PROB_FLOOR:
            clamped = True
        resp_losses.append(neg(log_clamped(p, PROB_FLOOR)))
    l_resp = _mean_of(resp_losses, dtype)

    total = add_n([scale(l_inf, config.alpha_inf), scale(l_req, config.alpha_req),
                   scale(l_resp_slot, config.alpha_resp_slot), scale(l_resp, config.alpha_resp)])
    return LossBundle(l_inf=l_inf, l_req=l_req, l_resp_slot=l_resp_slot,
                      l_resp=l_resp, total=total, clamped=clamped)


# ---------------------------------------------------------------------------
# inference over dialogues
# ---------------------------------------------------------------------------


@dataclass
class TurnOutput:
    belief: BeliefState
    match_bin: int
    response_tokens: tuple[str, ...]
    response_slots: frozenset[str]


@dataclass
class DialoguePrediction:
    dialogue_id: str
    turns: list[TurnOutput] = field(default_factory=list)


def run_inference(dialogues, net: DialogueNetwork, corpus: Corpus,
                  config: TrainConfig) -> list[DialoguePrediction]:
    """Turn-by-turn prediction. eval_belief_feed picks whether each turn
    sees the model's own previous belief/response or the gold ones."""
    predictions = []
    with no_grad():
        for dialogue in dialogues:
            table = corpus.table_for(dialogue)
            prev_belief = BeliefState.empty()
            prev_response: tuple[str, ...] = ()
            pred = DialoguePrediction(dialogue_id=dialogue.id)
            for turn in dialogue.turns:
                result = net.predict_turn(prev_response, prev_belief,
                                          tuple(tokenize(turn.user)), table,
                                          beam_width=config.beam_width)
                pred.turns.append(TurnOutput(
                    belief=result.belief,
                    match_bin=result.match.bin_index,
                    response_tokens=result.response_tokens,
                    response_slots=result.response_slots,
                ))
                if config.eval_belief_feed == "gold":
                    prev_belief = turn.belief
                    prev_response = tuple(tokenize(turn.agent_delex))
                else:
                    prev_belief = result.belief
                    prev_response = result.response_tokens
            predictions.append(pred)
    return predictions


def evaluate_split(net: DialogueNetwork, corpus: Corpus, split: str,
                   config: TrainConfig) -> dict:
    dialogues = corpus.split(split)
    predictions = run_inference(dialogues, net, corpus, config)
    report = build_report(dialogues, predictions, net.schema, corpus.table_for)
    report["split"] = split
    report["belief_feed"] = config.eval_belief_feed
    return report


# ---------------------------------------------------------------------------
# training loop
# ---------------------------------------------------------------------------


@dataclass
class TrainedModel:
    net: DialogueNetwork
    params: ModelParams
    vocab: Vocab
    config: TrainConfig
    optimizer: OptimizerState
    history: list[dict] = field(default_factory=list)

    def save(self, path):
        extra = {
            "config": self.config.to_json(),
            "vocab": self.vocab.to_json(),
            "schema": self.net.schema.to_json(),
        }
        self.params.save(path, extra)


def build_network(corpus: Corpus, config: TrainConfig) -> tuple[DialogueNetwork, Vocab]:
    config.validate()
    vocab = build_vocab(vocab_token_streams(corpus.split("train")),
                        corpus.schema, min_count=config.min_count)
    init_rng = np.random.default_rng(config.seed)
    embedding_init = None
    if config.embeddings_path:
        vectors = load_word_vectors(config.embeddings_path, config.embedding_dim)
        embedding_init = build_embedding_init(vocab.tokens, config.embedding_dim,
                                              init_rng, vectors)
    params = ModelParams(len(vocab), config.embedding_dim, config.hidden_dim,
                         init_rng, embedding_init=embedding_init)
    net = DialogueNetwork(params, vocab, corpus.schema,
                          max_value_len=config.max_value_len,
                          max_response_len=config.max_response_len)
    return net, vocab


def _composite(report: dict) -> float:
    if report["succ_f1"] is None:
        return float("-inf")
    return report["succ_f1"] + (report["bleu"] or 0.0)


def train(corpus: Corpus, config: TrainConfig, log_fn=None) -> TrainedModel:
    """Epoch loop with seeded shuffling, loss-averaged mini-groups, one
    Adam step per group, periodic validation, and best-composite
    checkpoint retention."""
    config.validate()
    net, vocab = build_network(corpus, config)
    params = net.params
    named = params.tensors()
    optimizer = OptimizerState(learning_rate=config.learning_rate)
    shuffle_rng = np.random.default_rng(config.seed + 1)
    dropout_rng = np.random.default_rng(config.seed + 2)

    examples = make_turn_examples(corpus.split("train"), corpus.schema)
    if not examples:
        raise ConfigError("training split has no turns")
    eval_split = "dev" if corpus.split("dev") else "train"

    model = TrainedModel(net=net, params=params, vocab=vocab, config=config,
                         optimizer=optimizer)
    best: dict[str, np.ndarray] | None = None
    best_score = float("-inf")
    stagnant = 0

    def snapshot():
        return {name: t.data.copy() for name, t in named.items()}

    last_good = snapshot()
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(examples))
        epoch_losses = []
        component_sums = {"inf": 0.0, "req": 0.0, "resp_slot": 0.0, "resp": 0.0}
        for start in range(0, len(order), config.batch_size):
            group = [examples[i] for i in order[start:start + config.batch_size]]
            zero_grads(named)
            group_total = 0.0
            for example in group:
                bundle = compute_losses(example, net, config, dropout_rng)
                values = bundle.values()
                if not np.isfinite(values["total"]):
                    params.load_arrays(last_good)
                    raise TrainAbort(
                        f"non-finite loss at epoch {epoch} ({example.dialogue_id}"
                        f" turn {example.turn_index})", params)
                group_total += values["total"]
                for key in component_sums:
                    component_sums[key] += values[key]
                backward(scale(bundle.total, 1.0 / len(group)))
            try:
                adam_step(named, optimizer)
            except OptimError as err:
                params.load_arrays(last_good)
                raise TrainAbort(str(err), params) from err
            epoch_losses.append(group_total / len(group))
        last_good = snapshot()

        record = {"epoch": epoch, "split": "train",
                  "loss": float(np.mean(epoch_losses)),
                  "loss_components": {k: v / len(examples)
                                      for k, v in component_sums.items()}}
        if epoch % config.eval_every == 0 or epoch == config.epochs:
            report = evaluate_split(net, corpus, eval_split, config)
            record["metrics"] = {k: report[k] for k in ("bleu", "emr", "succ_f1")}
            record["eval_split"] = eval_split
            score = _composite(report)
            if score > best_score:
                best_score = score
                best = snapshot()
                stagnant = 0
            else:
                stagnant += 1
            if config.patience and stagnant >= config.patience:
                model.history.append(record)
                if log_fn:
                    log_fn(record)
                break
        model.history.append(record)
        if log_fn:
            log_fn(record)

    if best is not None:
        params.load_arrays(best)
    return model


def load_trained(path) -> tuple[DialogueNetwork, TrainConfig]:
    """Rebuild a network from a checkpoint written by TrainedModel.save."""
    from .corpus import SlotSchema
    from .numcore import load_checkpoint

    arrays, extra = load_checkpoint(path)
    config = TrainConfig.from_json(extra["config"])
    vocab = Vocab.from_json(extra["vocab"])
    schema = SlotSchema.from_json(extra["schema"])
    params = ModelParams(len(vocab), config.embedding_dim, config.hidden_dim,
                         np.random.default_rng(0))
    params.load_arrays(arrays)
    net = DialogueNetwork(params, vocab, schema,
                          max_value_len=config.max_value_len,
                          max_response_len=config.max_response_len)
    return net, config


def write_jsonl(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
