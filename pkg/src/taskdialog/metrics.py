"""Evaluation suite: turn-level slot precision/recall/F1, corpus BLEU,
Entity Match Rate and dialogue-level Success F1."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass

from .kb import KBTable, query


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float

    @staticmethod
    def from_counts(tp: int, fp: int, fn: int) -> "PRF":
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        return PRF(p, r, f1)

    def to_json(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def slot_prf(predicted: list, gold: list) -> PRF:
    """Micro-averaged over aligned per-turn item sets."""
    if len(predicted) != len(gold):
        raise ValueError("predicted/gold turn lists must align")
    tp = fp = fn = 0
    for pred_set, gold_set in zip(predicted, gold):
        pred_set, gold_set = set(pred_set), set(gold_set)
        tp += len(pred_set & gold_set)
        fp += len(pred_set - gold_set)
        fn += len(gold_set - pred_set)
    return PRF.from_counts(tp, fp, fn)


def _ngrams(tokens, n):
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def bleu(candidates: list, references: list) -> float:
    """Corpus BLEU-4, uniform weights, standard brevity penalty, no
    smoothing: any n-gram order with zero matches zeroes the score."""
    if len(candidates) != len(references):
        raise ValueError("candidate/reference lists must align")
    if not candidates:
        return 0.0
    clipped = [0] * 4
    totals = [0] * 4
    cand_len = ref_len = 0
    for cand, ref in zip(candidates, references):
        cand, ref = list(cand), list(ref)
        cand_len += len(cand)
        ref_len += len(ref)
        for n in range(1, 5):
            counts = Counter(_ngrams(cand, n))
            ref_counts = Counter(_ngrams(ref, n))
            totals[n - 1] += sum(counts.values())
            clipped[n - 1] += sum(min(c, ref_counts[g]) for g, c in counts.items())
    if cand_len == 0 or any(c == 0 for c in clipped):
        return 0.0
    log_precision = sum(math.log(c / t) for c, t in zip(clipped, totals)) / 4.0
    brevity = 1.0 if cand_len > ref_len else math.exp(1.0 - ref_len / cand_len)
    return brevity * math.exp(log_precision)


def _record_set_key(records: list[dict]) -> frozenset:
    return frozenset(json.dumps(r, sort_keys=True) for r in records)


def entity_match_rate(items: list[tuple[dict, dict, KBTable | None]]) -> float:
    """Each item is (generated final constraints, gold final constraints,
    table). A dialogue scores 1 iff both constraint sets retrieve the same
    records; dialogues without gold constraints are not scored."""
    scored = 0
    matched = 0
    for generated, gold, table in items:
        if not gold or table is None:
            continue
        scored += 1
        try:
            gen_records = _record_set_key(_safe_query(table, generated))
        except Exception:
            gen_records = frozenset()
        gold_records = _record_set_key(_safe_query(table, gold))
        if gen_records == gold_records:
            matched += 1
    return matched / scored if scored else 0.0


def _safe_query(table: KBTable, constraints: dict) -> list[dict]:
    from .kb import normalize_value

    known = {}
    for slot, value in constraints.items():
        norm = normalize_value(value)
        if norm in ("", "dontcare"):
            continue
        if slot not in table.attributes:
            return []
        known[slot] = norm
    return query(table, known)


def success_f1(generated_slot_sets: list, gold_slot_sets: list) -> float:
    """Dialogue-level response-slot F1: per dialogue, the placeholder set
    over all generated responses vs. over all gold responses;
    micro-averaged counts across dialogues."""
    if len(generated_slot_sets) != len(gold_slot_sets):
        raise ValueError("generated/gold dialogue lists must align")
    tp = fp = fn = 0
    for gen, gold in zip(generated_slot_sets, gold_slot_sets):
        gen, gold = set(gen), set(gold)
        tp += len(gen & gold)
        fp += len(gen - gold)
        fn += len(gold - gen)
    prf = PRF.from_counts(tp, fp, fn)
    return prf.f1


def informable_items(belief_constraints: dict) -> set:
    """(slot, space-joined lowercase value) pairs for nonempty values."""
    items = set()
    for slot, tokens in belief_constraints.items():
        if isinstance(tokens, str):
            value = tokens
        else:
            value = " ".join(tokens)
        value = value.strip().lower()
        if value:
            items.add((slot, value))
    return items


def build_report(gold_dialogues, predictions, schema, table_resolver) -> dict:
    """Assemble the full evaluation payload.

    gold_dialogues: corpus Dialogue list; predictions: aligned
    DialoguePrediction list; table_resolver: dialogue -> KBTable or None.
    """
    from .corpus import response_slots_in, tokenize

    if len(gold_dialogues) != len(predictions):
        raise ValueError("dialogue/prediction lists must align")
    if not gold_dialogues:
        return {"inf": None, "req": None, "bleu": None, "emr": None,
                "succ_f1": None, "per_dialogue": [], "dialogues": 0, "turns": 0}

    inf_pred, inf_gold = [], []
    req_pred, req_gold = [], []
    cands, refs = [], []
    emr_items = []
    gen_slot_sets, gold_slot_sets = [], []
    per_dialogue = []

    for dialogue, pred in zip(gold_dialogues, predictions):
        if len(dialogue.turns) != len(pred.turns):
            raise ValueError(f"turn count mismatch in dialogue {dialogue.id!r}")
        table = table_resolver(dialogue)
        gen_slots, gold_slots = set(), set()
        for turn, turn_pred in zip(dialogue.turns, pred.turns):
            inf_pred.append(informable_items(turn_pred.belief.constraints()))
            inf_gold.append(informable_items(turn.belief.constraints()))
            req_pred.append(set(turn_pred.belief.requestable))
            req_gold.append(set(turn.belief.requestable))
            gold_tokens = tuple(tokenize(turn.agent_delex))
            cands.append(turn_pred.response_tokens)
            refs.append(gold_tokens)
            gen_slots |= set(response_slots_in(turn_pred.response_tokens, schema))
            gold_slots |= set(response_slots_in(gold_tokens, schema))
        gen_slot_sets.append(gen_slots)
        gold_slot_sets.append(gold_slots)
        gen_final = pred.turns[-1].belief.constraints() if pred.turns else {}
        gold_final = dialogue.turns[-1].belief.constraints() if dialogue.turns else {}
        emr_items.append((gen_final, gold_final, table))
        per_dialogue.append({
            "dialogue_id": dialogue.id,
            "generated_slots": sorted(gen_slots),
            "gold_slots": sorted(gold_slots),
            "generated_final_constraints": {k: " ".join(v) for k, v in gen_final.items()},
            "gold_final_constraints": {k: " ".join(v) for k, v in gold_final.items()},
        })

    inf = slot_prf(inf_pred, inf_gold)
    req = slot_prf(req_pred, req_gold)
    return {
        "inf": inf.to_json(),
        "req": req.to_json(),
        "bleu": bleu(cands, refs),
        "emr": entity_match_rate(emr_items),
        "succ_f1": success_f1(gen_slot_sets, gold_slot_sets),
        "per_dialogue": per_dialogue,
        "dialogues": len(gold_dialogues),
        "turns": len(cands),
    }
