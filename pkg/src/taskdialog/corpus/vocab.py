"""Token vocabulary with reserved control/schema symbols."""

from __future__ import annotations

from collections import Counter

from .schema import SlotSchema

PAD = "<pad>"
UNK = "<unk>"
GO = "<go>"
EOS = "<eos>"


class Vocab:
    def __init__(self, tokens: list[str], reserved_count: int):
        self.tokens = list(tokens)
        self.reserved_count = reserved_count
        self._ids = {tok: i for i, tok in enumerate(self.tokens)}
        if len(self._ids) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._ids

    def id_of(self, token: str):
        return self._ids.get(token)

    def token_of(self, idx: int) -> str:
        return self.tokens[idx]

    @property
    def pad_id(self) -> int:
        return self._ids[PAD]

    @property
    def unk_id(self) -> int:
        return self._ids[UNK]

    @property
    def go_id(self) -> int:
        return self._ids[GO]

    @property
    def eos_id(self) -> int:
        return self._ids[EOS]

    def encode(self, tokens) -> list[int]:
        unk = self.unk_id
        return [self._ids.get(tok, unk) for tok in tokens]

    def to_json(self) -> dict:
        return {"tokens": self.tokens, "reserved_count": self.reserved_count}

    @staticmethod
    def from_json(obj: dict) -> "Vocab":
        return Vocab(obj["tokens"], obj["reserved_count"])


def reserved_tokens(schema: SlotSchema) -> list[str]:
    out = [PAD, UNK, GO, EOS]
    for tok in schema.reserved_tokens():
        if tok not in out:
            out.append(tok)
    return out


def build_vocab(token_streams, schema: SlotSchema, min_count: int = 2) -> Vocab:
    """Count tokens across streams; keep those with count >= min_count.
    Reserved and schema tokens always survive the cutoff. Order is
    (count desc, token asc) so identical corpora build identical vocabs."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter()
    for stream in token_streams:
        counts.update(stream)
    reserved = reserved_tokens(schema)
    reserved_set = set(reserved)
    kept = [tok for tok, n in counts.items() if n >= min_count and tok not in reserved_set]
    kept.sort(key=lambda tok: (-counts[tok], tok))
    return Vocab(reserved + kept, reserved_count=len(reserved))
