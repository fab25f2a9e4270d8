"""Relational KB: tables, constraint queries, the match-count indicator
and response lexicalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus.schema import BeliefState, SlotSchema
from .corpus.text import detokenize

EMPTY_VALUE = ""
DONTCARE = "dontcare"
FALLBACK_LITERAL = "unknown"

MATCH_BINS = 5


class QueryError(ValueError):
    """Constraint references an attribute the table does not have."""


def normalize_value(value) -> str:
    """Lowercase, single-space-joined comparison form. Accepts a string or
    a token sequence."""
    if isinstance(value, str):
        parts = value.split()
    else:
        parts = [str(p) for p in value]
    return " ".join(p.lower() for p in parts)


@dataclass
class KBTable:
    name: str
    attributes: tuple[str, ...]
    records: list[dict[str, str]]

    @staticmethod
    def from_records(name: str, records) -> "KBTable":
        attrs: list[str] = []
        for record in records:
            for key in record:
                if key not in attrs:
                    attrs.append(key)
        filled = [{a: str(record.get(a, EMPTY_VALUE)) for a in attrs} for record in records]
        return KBTable(name, tuple(attrs), filled)

    def __len__(self) -> int:
        return len(self.records)


def query(table: KBTable, constraints: dict) -> list[dict[str, str]]:
    """Records whose constrained attributes equal the constraint values
    after normalization. 'dontcare' and empty constraints are skipped."""
    active = {}
    for slot, value in constraints.items():
        norm = normalize_value(value)
        if norm in ("", DONTCARE):
            continue
        if slot not in table.attributes:
            raise QueryError(f"unknown attribute {slot!r} for table {table.name!r}")
        active[slot] = norm
    if not active:
        return list(table.records)
    return [r for r in table.records
            if all(normalize_value(r[slot]) == v for slot, v in active.items())]


@dataclass(frozen=True)
class MatchIndicator:
    """One-hot over {0, 1, 2, 3, >=4} matched records."""

    bins: tuple[float, float, float, float, float]

    def __post_init__(self):
        if sorted(self.bins) != [0.0, 0.0, 0.0, 0.0, 1.0]:
            raise ValueError("match indicator must be one-hot")

    @property
    def bin_index(self) -> int:
        return self.bins.index(1.0)

    def as_array(self, dtype=np.float32) -> np.ndarray:
        return np.asarray(self.bins, dtype=dtype)


def encode_match_count(n: int) -> MatchIndicator:
    if n < 0:
        raise ValueError(f"match count must be >= 0, got {n}")
    bins = [0.0] * MATCH_BINS
    bins[min(n, MATCH_BINS - 1)] = 1.0
    return MatchIndicator(tuple(bins))


def match_indicator_for(table: KBTable, constraints: dict) -> tuple[MatchIndicator, list[dict]]:
    results = query(table, constraints)
    return encode_match_count(len(results)), results


def lexicalize(delex_response, results: list[dict], belief: BeliefState,
               schema: SlotSchema) -> str:
    """Fill placeholder tokens from the first result record; fall back to
    the belief's own constraint value, then to a fixed literal, so the
    output never contains placeholders."""
    record = results[0] if results else {}
    out = []
    for tok in delex_response:
        attr = schema.requestable_for(tok)
        if attr is None:
            out.append(tok)
            continue
        value = str(record.get(attr, "")).strip()
        if not value and attr in belief.informable and belief.informable[attr]:
            value = " ".join(belief.informable[attr])
        out.append(value if value else FALLBACK_LITERAL)
    return detokenize(out)
