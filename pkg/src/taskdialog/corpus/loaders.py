"""Dataset ingestion.

Three on-disk formats are accepted; raw CamRest-style and KVRET-style
exports are converted on load so everything downstream consumes one
canonical shape:

canonical  directory with {train,dev,test}.json (any subset) plus an
           optional kb.json, or a single dataset file. Each dataset file
           is {"schema": {...}, "dialogues": [{id, table?, split?,
           turns: [{user, agent_raw, agent_delex, belief, kb_match_count}]}]}.
           kb.json maps table name -> array of flat string records (a bare
           array means a single table named "kb").

camrest    directory with CamRest676.json, CamRestDB.json and
           CamRestOTGY.json; one restaurant table; splits cut
           train/dev/test at fixed 3:1:1 proportions in file order.

kvret      directory with kvret_{train,dev,test}_public.json and
           optionally kvret_entities.json; one table per scenario intent;
           the slot inventory is derived from the annotations.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .. import kb as _kb
from .schema import BeliefState, Dialogue, SlotSchema, Turn
from .text import delexicalize_with_values, table_substitutions, tokenize

SPLITS = ("train", "dev", "test")


class IngestionError(ValueError):
    """Annotation inconsistent with the schema; names dialogue and turn."""


class ParseError(ValueError):
    """Malformed JSON; carries the file and location."""


@dataclass
class Corpus:
    schema: SlotSchema
    dialogues: list[Dialogue]
    kb: dict = field(default_factory=dict)

    def split(self, name: str) -> list[Dialogue]:
        return [d for d in self.dialogues if d.split == name]

    def table_for(self, dialogue: Dialogue):
        if dialogue.table is not None:
            return self.kb.get(dialogue.table)
        if len(self.kb) == 1:
            return next(iter(self.kb.values()))
        return None


def load_corpus(path, format: str) -> Corpus:
    loaders = {"canonical": _load_canonical, "camrest": _load_camrest, "kvret": _load_kvret}
    if format not in loaders:
        raise ValueError(f"unknown corpus format {format!r}; expected one of {sorted(loaders)}")
    return loaders[format](os.fspath(path))


def _read_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as err:
        raise ParseError(f"{path}: line {err.lineno} column {err.colno}: {err.msg}") from None
    except OSError as err:
        raise ParseError(f"{path}: {err}") from None


def safe_match_count(table, constraints: dict) -> int:
    """Match count for ingestion: missing table or constraints on
    attributes the table lacks count as zero matches for that slot."""
    if table is None:
        return 0
    known = {k: v for k, v in constraints.items() if k in table.attributes}
    unknown = [k for k, v in constraints.items()
               if k not in table.attributes and _is_binding(v)]
    if unknown:
        return 0
    return len(_kb.query(table, known))


def _is_binding(value) -> bool:
    return _kb.normalize_value(value) not in ("", _kb.DONTCARE)


# ---------------------------------------------------------------------------
# canonical
# ---------------------------------------------------------------------------


def _load_canonical(path: str) -> Corpus:
    if os.path.isdir(path):
        split_files = [(s, os.path.join(path, f"{s}.json")) for s in SPLITS]
        split_files = [(s, p) for s, p in split_files if os.path.exists(p)]
        if not split_files:
            raise ParseError(f"{path}: no train.json/dev.json/test.json found")
        kb_path = os.path.join(path, "kb.json")
    else:
        split_files = [(None, path)]
        kb_path = os.path.join(os.path.dirname(path), "kb.json")

    schema = None
    dialogues: list[Dialogue] = []
    for default_split, file_path in split_files:
        payload = _read_json(file_path)
        file_schema = SlotSchema.from_json(payload["schema"])
        if schema is None:
            schema = file_schema
        elif schema != file_schema:
            raise IngestionError(f"{file_path}: schema differs from other splits")
        for raw in payload["dialogues"]:
            dialogues.append(_parse_canonical_dialogue(raw, schema, default_split, file_path))

    kb = _load_kb_file(kb_path) if os.path.exists(kb_path) else {}
    return Corpus(schema, dialogues, kb)


def _parse_canonical_dialogue(raw: dict, schema: SlotSchema, default_split, file_path) -> Dialogue:
    did = str(raw["id"])
    turns = []
    for idx, t in enumerate(raw["turns"]):
        belief = BeliefState.from_json(t["belief"])
        try:
            belief.validate(schema)
        except Exception as err:
            raise IngestionError(f"{file_path}: dialogue {did!r} turn {idx}: {err}") from None
        count = int(t.get("kb_match_count", 0))
        if count < 0:
            raise IngestionError(f"{file_path}: dialogue {did!r} turn {idx}: negative kb_match_count")
        turns.append(Turn(user=t["user"], agent_raw=t["agent_raw"],
                          agent_delex=t["agent_delex"], belief=belief,
                          kb_match_count=count))
    return Dialogue(id=did, turns=turns,
                    split=raw.get("split", default_split or "train"),
                    table=raw.get("table"))


def _load_kb_file(path: str) -> dict:
    payload = _read_json(path)
    if isinstance(payload, list):
        payload = {"kb": payload}
    return {name: _kb.KBTable.from_records(name, records) for name, records in payload.items()}


def save_canonical(corpus: Corpus, out_dir) -> None:
    """Write a corpus back out in the canonical layout (one file per
    split plus kb.json)."""
    os.makedirs(out_dir, exist_ok=True)
    for split in SPLITS:
        dialogues = corpus.split(split)
        payload = {
            "schema": corpus.schema.to_json(),
            "dialogues": [{
                "id": d.id,
                **({"table": d.table} if d.table else {}),
                "turns": [{
                    "user": t.user,
                    "agent_raw": t.agent_raw,
                    "agent_delex": t.agent_delex,
                    "belief": t.belief.to_json(corpus.schema),
                    "kb_match_count": t.kb_match_count,
                } for t in d.turns],
            } for d in dialogues],
        }
        with open(os.path.join(out_dir, f"{split}.json"), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=1, sort_keys=True)
    kb_payload = {name: table.records for name, table in corpus.kb.items()}
    with open(os.path.join(out_dir, "kb.json"), "w", encoding="utf-8") as fh:
        json.dump(kb_payload, fh, indent=1, sort_keys=True)


# ---------------------------------------------------------------------------
# CamRest-style raw export
# ---------------------------------------------------------------------------


def _proportional_splits(n: int) -> list[str]:
    """3:1:1 in file order: dev and test take a rounded fifth each."""
    dev = round(n / 5)
    test = round(n / 5)
    train = n - dev - test
    return ["train"] * train + ["dev"] * dev + ["test"] * test


def _load_camrest(path: str) -> Corpus:
    dialogues_raw = _read_json(os.path.join(path, "CamRest676.json"))
    db_raw = _read_json(os.path.join(path, "CamRestDB.json"))
    ontology = _read_json(os.path.join(path, "CamRestOTGY.json"))

    schema = SlotSchema.build(list(ontology["informable"].keys()),
                              list(ontology["requestable"]))
    table = _kb.KBTable.from_records("restaurant", db_raw)
    subs = table_substitutions(table.records, schema)

    splits = _proportional_splits(len(dialogues_raw))
    dialogues = []
    for i, raw in enumerate(dialogues_raw):
        did = str(raw.get("dialogue_id", i))
        belief = BeliefState.empty()
        turns = []
        for idx, t in enumerate(raw["dial"]):
            belief = belief.copy()
            requested = set()
            for act in t["usr"].get("slu", []):
                if act["act"] == "inform":
                    for slot, value in act["slots"]:
                        if slot not in schema.informable_slots:
                            raise IngestionError(
                                f"dialogue {did!r} turn {idx}: unknown informable slot {slot!r}")
                        belief.informable[slot] = tuple(tokenize(str(value)))
                elif act["act"] == "request":
                    for _, slot in act["slots"]:
                        if slot not in schema.requestable_slots:
                            raise IngestionError(
                                f"dialogue {did!r} turn {idx}: unknown requestable slot {slot!r}")
                        requested.add(slot)
            belief.requestable = requested
            sent = t["sys"]["sent"]
            turns.append(Turn(
                user=t["usr"]["transcript"],
                agent_raw=sent,
                agent_delex=delexicalize_with_values(sent, subs),
                belief=belief.copy(),
                kb_match_count=safe_match_count(table, belief.constraints()),
            ))
        dialogues.append(Dialogue(id=did, turns=turns, split=splits[i], table=table.name))
    return Corpus(schema, dialogues, {table.name: table})


# ---------------------------------------------------------------------------
# KVRET-style raw export
# ---------------------------------------------------------------------------


def _load_kvret(path: str) -> Corpus:
    split_payloads = {}
    for split in SPLITS:
        file_path = os.path.join(path, f"kvret_{split}_public.json")
        if os.path.exists(file_path):
            split_payloads[split] = _read_json(file_path)
    if not split_payloads:
        raise ParseError(f"{path}: no kvret_*_public.json files found")

    informable: set[str] = set()
    requestable: set[str] = set()
    table_items: dict[str, list[dict]] = {}
    table_seen: dict[str, set[str]] = {}
    for payload in split_payloads.values():
        for raw in payload:
            intent = raw["scenario"]["task"]["intent"]
            items = (raw["scenario"].get("kb") or {}).get("items") or []
            bucket = table_items.setdefault(intent, [])
            seen = table_seen.setdefault(intent, set())
            for item in items:
                key = json.dumps(item, sort_keys=True)
                if key not in seen:
                    seen.add(key)
                    bucket.append(item)
            for t in raw["dialogue"]:
                if t["turn"] != "assistant":
                    continue
                data = t.get("data", {})
                informable.update((data.get("slots") or {}).keys())
                requestable.update(k for k, v in (data.get("requested") or {}).items() if v)

    schema = SlotSchema.build(sorted(informable), sorted(requestable))
    kb = {name: _kb.KBTable.from_records(name, items) for name, items in sorted(table_items.items())}

    dialogues = []
    for split, payload in split_payloads.items():
        for i, raw in enumerate(payload):
            intent = raw["scenario"]["task"]["intent"]
            did = str(raw["scenario"].get("uuid", f"{split}-{i}"))
            table = kb.get(intent)
            subs = table_substitutions(table.records, schema) if table else []
            belief = BeliefState.empty()
            turns = []
            pending_user: list[str] = []
            for t in raw["dialogue"]:
                data = t.get("data", {})
                if t["turn"] == "driver":
                    pending_user.append(data.get("utterance", ""))
                    continue
                belief = belief.copy()
                for slot, value in (data.get("slots") or {}).items():
                    belief.informable[slot] = tuple(tokenize(str(value)))
                belief.requestable = {k for k, v in (data.get("requested") or {}).items() if v}
                sent = data.get("utterance", "")
                turns.append(Turn(
                    user=" ".join(pending_user).strip(),
                    agent_raw=sent,
                    agent_delex=delexicalize_with_values(sent, subs),
                    belief=belief.copy(),
                    kb_match_count=safe_match_count(table, belief.constraints()),
                ))
                pending_user = []
            dialogues.append(Dialogue(id=did, turns=turns, split=split, table=intent))
    return Corpus(schema, dialogues, kb)
