"""Core data shapes shared by ingestion, the model and evaluation."""

from __future__ import annotations

from dataclasses import dataclass, field

END_BELIEF = "end_belief"
PLACEHOLDER_SUFFIX = "_SLOT"


class SchemaError(ValueError):
    """Slot inventory violates its structural rules."""


@dataclass(frozen=True)
class SlotSchema:
    """Slot inventory: informable constraints, requestable attributes, and
    the response placeholder token paired with each requestable slot."""

    informable_slots: tuple[str, ...]
    requestable_slots: tuple[str, ...]
    response_slots: tuple[str, ...]

    def __post_init__(self):
        if len(self.requestable_slots) != len(self.response_slots):
            raise SchemaError("requestable and response slots must pair up one-to-one")
        for name, slots in (("informable", self.informable_slots),
                            ("requestable", self.requestable_slots),
                            ("response", self.response_slots)):
            if len(set(slots)) != len(slots):
                raise SchemaError(f"duplicate {name} slot names")

    @staticmethod
    def build(informable, requestable) -> "SlotSchema":
        informable = tuple(informable)
        requestable = tuple(requestable)
        return SlotSchema(informable, requestable,
                          tuple(placeholder_token(s) for s in requestable))

    def end_marker(self, slot: str) -> str:
        return f"end_{slot}"

    def requestable_for(self, placeholder: str) -> str | None:
        try:
            return self.requestable_slots[self.response_slots.index(placeholder)]
        except ValueError:
            return None

    def placeholder_for(self, requestable: str) -> str:
        return self.response_slots[self.requestable_slots.index(requestable)]

    def reserved_tokens(self) -> list[str]:
        """Schema-derived tokens that a vocabulary must always carry."""
        out = []
        for slot in self.informable_slots:
            out.append(slot)
            out.append(self.end_marker(slot))
        for slot in self.requestable_slots:
            if slot not in out:
                out.append(slot)
        out.append(END_BELIEF)
        out.extend(self.response_slots)
        return out

    def to_json(self) -> dict:
        return {
            "informable_slots": list(self.informable_slots),
            "requestable_slots": list(self.requestable_slots),
            "response_slots": list(self.response_slots),
        }

    @staticmethod
    def from_json(obj: dict) -> "SlotSchema":
        return SlotSchema(tuple(obj["informable_slots"]),
                          tuple(obj["requestable_slots"]),
                          tuple(obj["response_slots"]))


def placeholder_token(slot: str) -> str:
    return f"{slot}{PLACEHOLDER_SUFFIX}"


@dataclass
class BeliefState:
    """Informable slot values plus the set of requested slots."""

    informable: dict[str, tuple[str, ...]] = field(default_factory=dict)
    requestable: set[str] = field(default_factory=set)

    @staticmethod
    def empty() -> "BeliefState":
        return BeliefState({}, set())

    def is_empty(self) -> bool:
        return not self.requestable and not any(self.informable.values())

    def copy(self) -> "BeliefState":
        return BeliefState(dict(self.informable), set(self.requestable))

    def validate(self, schema: SlotSchema):
        for slot in self.informable:
            if slot not in schema.informable_slots:
                raise SchemaError(f"informable slot {slot!r} not in schema")
        for slot in self.requestable:
            if slot not in schema.requestable_slots:
                raise SchemaError(f"requestable slot {slot!r} not in schema")

    def value_tokens(self) -> list[str]:
        """All informable value tokens, schema-independent order of dict."""
        out = []
        for tokens in self.informable.values():
            out.extend(tokens)
        return out

    def constraints(self) -> dict[str, tuple[str, ...]]:
        return {slot: tokens for slot, tokens in self.informable.items() if tokens}

    def to_json(self, schema: SlotSchema | None = None) -> dict:
        req = sorted(self.requestable)
        if schema is not None:
            order = {s: i for i, s in enumerate(schema.requestable_slots)}
            req = sorted(self.requestable, key=lambda s: order.get(s, len(order)))
        return {
            "informable": {slot: list(tokens) for slot, tokens in self.informable.items() if tokens},
            "requestable": req,
        }

    @staticmethod
    def from_json(obj: dict) -> "BeliefState":
        informable = {slot: tuple(tokens) for slot, tokens in obj.get("informable", {}).items()}
        return BeliefState(informable, set(obj.get("requestable", [])))


@dataclass
class Turn:
    user: str
    agent_raw: str
    agent_delex: str
    belief: BeliefState
    kb_match_count: int


@dataclass
class Dialogue:
    id: str
    turns: list[Turn]
    split: str = "train"
    table: str | None = None


@dataclass
class TurnExample:
    """One training/evaluation unit: everything the model sees and must
    produce for a single dialogue turn."""

    dialogue_id: str
    turn_index: int
    prev_response: tuple[str, ...]
    prev_belief: BeliefState
    user_utterance: tuple[str, ...]
    gold_belief: BeliefState
    gold_response: tuple[str, ...]
    gold_response_slots: frozenset[str]
    gold_match_count: int
