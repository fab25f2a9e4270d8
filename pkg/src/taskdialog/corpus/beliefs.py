"""Belief-state serialization: the flat token form consumed by the
encoder, and its (total) inverse."""

from __future__ import annotations

from dataclasses import dataclass

from .schema import END_BELIEF, BeliefState, SlotSchema


def serialize_belief(belief: BeliefState, schema: SlotSchema) -> list[str]:
    """Schema order: each informable slot's value tokens then its end
    marker (empty slots emit the bare marker), then requested slot names,
    then the end-of-belief marker."""
    tokens = []
    for slot in schema.informable_slots:
        tokens.extend(belief.informable.get(slot, ()))
        tokens.append(schema.end_marker(slot))
    for slot in schema.requestable_slots:
        if slot in belief.requestable:
            tokens.append(slot)
    tokens.append(END_BELIEF)
    return tokens


@dataclass
class ParsedBelief:
    belief: BeliefState
    valid: bool


def parse_belief(tokens, schema: SlotSchema) -> ParsedBelief:
    """Total inverse of serialize_belief. Missing markers degrade to a
    best-effort parse with valid=False; unknown tokens between markers are
    kept as value tokens; duplicate requestable names collapse."""
    tokens = list(tokens)
    valid = True
    informable: dict[str, tuple[str, ...]] = {}
    pos = 0
    for slot in schema.informable_slots:
        marker = schema.end_marker(slot)
        try:
            idx = tokens.index(marker, pos)
        except ValueError:
            informable[slot] = ()
            valid = False
            continue
        informable[slot] = tuple(tokens[pos:idx])
        pos = idx + 1
    try:
        end = tokens.index(END_BELIEF, pos)
    except ValueError:
        end = len(tokens)
        valid = False
    requestable = set()
    for tok in tokens[pos:end]:
        if tok in schema.requestable_slots:
            requestable.add(tok)
        else:
            valid = False
    return ParsedBelief(BeliefState(informable, requestable), valid)
