"""Tokenization and response delexicalization.

The tokenizer is a fixed, deterministic re-implementation: lowercase,
split words (letters/digits/underscore) from punctuation, one token per
punctuation character. Placeholder tokens keep their canonical
``<attr>_SLOT`` casing so they stay recognizable after tokenization.
"""

from __future__ import annotations

import re

from .schema import PLACEHOLDER_SUFFIX, SlotSchema

_TOKEN_RE = re.compile(r"[A-Za-z0-9_]+|[^\sA-Za-z0-9_]")
_PLACEHOLDER_RE = re.compile(r"^([A-Za-z0-9]+)_slot$", re.IGNORECASE)


def tokenize(text: str) -> list[str]:
    out = []
    for raw in _TOKEN_RE.findall(text):
        m = _PLACEHOLDER_RE.match(raw)
        if m:
            out.append(m.group(1).lower() + PLACEHOLDER_SUFFIX)
        else:
            out.append(raw.lower())
    return out


def detokenize(tokens) -> str:
    """Space join with punctuation pulled back onto the previous word."""
    text = ""
    for tok in tokens:
        if text and (len(tok) > 1 or tok.isalnum() or tok in "('\"$"):
            text += " "
        text += tok
    return text


def _value_pattern(value: str) -> re.Pattern:
    # whole-word match, tolerant of whitespace runs inside the value
    parts = [re.escape(p) for p in value.split()]
    body = r"\s+".join(parts)
    return re.compile(rf"(?<![A-Za-z0-9]){body}(?![A-Za-z0-9])", re.IGNORECASE)


def _substitutions(record: dict, schema: SlotSchema) -> list[tuple[str, str]]:
    subs = []
    for attr, value in record.items():
        if attr not in schema.requestable_slots:
            continue
        value = (value or "").strip()
        if not value:
            continue
        subs.append((value, schema.placeholder_for(attr)))
    # longest value first so prefixes never shadow their extensions
    subs.sort(key=lambda it: (-len(it[0]), it[1]))
    return subs


def delexicalize(response: str, record: dict, schema: SlotSchema) -> list[str]:
    """Replace the record's attribute values in a raw response by their
    placeholder tokens (longest match first, case-insensitive), then
    tokenize. Responses without attribute mentions pass through."""
    text = response
    for value, placeholder in _substitutions(record, schema):
        text = _value_pattern(value).sub(placeholder, text)
    return tokenize(text)


def delexicalize_with_values(response: str, values_to_placeholders: list[tuple[str, str]]) -> str:
    """Corpus-wide delexicalization against a prebuilt value table; returns
    raw text (tokenization is the caller's job)."""
    pairs = [(v, p) for v, p in values_to_placeholders if v.strip()]
    pairs.sort(key=lambda it: (-len(it[0]), it[1], it[0]))
    text = response
    for value, placeholder in pairs:
        text = _value_pattern(value).sub(placeholder, text)
    return text


def table_substitutions(records, schema: SlotSchema) -> list[tuple[str, str]]:
    """Every (value, placeholder) pair a record set can produce."""
    seen = set()
    pairs = []
    for record in records:
        for attr, value in record.items():
            if attr not in schema.requestable_slots:
                continue
            value = (value or "").strip()
            if not value:
                continue
            key = (value.lower(), attr)
            if key not in seen:
                seen.add(key)
                pairs.append((value, schema.placeholder_for(attr)))
    return pairs
