"""Dataset ingestion, delexicalization, belief serialization and
turn-example construction."""

from .beliefs import ParsedBelief, parse_belief, serialize_belief
from .examples import make_turn_examples, response_slots_in, vocab_token_streams
from .loaders import (
    Corpus,
    IngestionError,
    ParseError,
    load_corpus,
    safe_match_count,
    save_canonical,
)
from .schema import (
    END_BELIEF,
    BeliefState,
    Dialogue,
    SchemaError,
    SlotSchema,
    Turn,
    TurnExample,
    placeholder_token,
)
from .text import (
    delexicalize,
    delexicalize_with_values,
    detokenize,
    table_substitutions,
    tokenize,
)
from .vocab import EOS, GO, PAD, UNK, Vocab, build_vocab, reserved_tokens

__all__ = [
    "BeliefState", "Corpus", "Dialogue", "END_BELIEF", "EOS", "GO",
    "IngestionError", "PAD", "ParseError", "ParsedBelief", "SchemaError",
    "SlotSchema", "Turn", "TurnExample", "UNK", "Vocab", "build_vocab",
    "delexicalize", "delexicalize_with_values", "detokenize", "load_corpus",
    "make_turn_examples", "parse_belief", "placeholder_token",
    "reserved_tokens", "response_slots_in", "safe_match_count",
    "save_canonical", "serialize_belief", "table_substitutions", "tokenize",
    "vocab_token_streams",
]
