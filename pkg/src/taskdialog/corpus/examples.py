"""Turn-example construction: the dialogue-to-supervision flattening."""

from __future__ import annotations

from .schema import BeliefState, Dialogue, SlotSchema, TurnExample
from .text import tokenize


def response_slots_in(tokens, schema: SlotSchema) -> frozenset:
    return frozenset(tok for tok in tokens if tok in schema.response_slots)


def make_turn_examples(dialogues: list[Dialogue], schema: SlotSchema) -> list[TurnExample]:
    """One example per turn. The previous turn's gold belief and gold
    delexicalized response become the next turn's inputs; turn 0 starts
    from an empty history."""
    examples = []
    for dialogue in dialogues:
        prev_belief = BeliefState.empty()
        prev_response: tuple[str, ...] = ()
        for idx, turn in enumerate(dialogue.turns):
            gold_response = tuple(tokenize(turn.agent_delex))
            examples.append(TurnExample(
                dialogue_id=dialogue.id,
                turn_index=idx,
                prev_response=prev_response,
                prev_belief=prev_belief.copy(),
                user_utterance=tuple(tokenize(turn.user)),
                gold_belief=turn.belief.copy(),
                gold_response=gold_response,
                gold_response_slots=response_slots_in(gold_response, schema),
                gold_match_count=turn.kb_match_count,
            ))
            prev_belief = turn.belief
            prev_response = gold_response
    return examples


def vocab_token_streams(dialogues: list[Dialogue]):
    """Token streams that feed vocabulary counting: user utterances,
    delexicalized responses, and belief value tokens."""
    for dialogue in dialogues:
        for turn in dialogue.turns:
            yield tokenize(turn.user)
            yield tokenize(turn.agent_delex)
            for tokens in turn.belief.informable.values():
                yield list(tokens)
