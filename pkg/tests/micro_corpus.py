"""A 5-dialogue restaurant corpus, small enough to overfit in minutes.

Built programmatically so the gold kb_match_count always agrees with the
bundled table, then written in the canonical on-disk layout.
"""

import json
import os

from taskdialog.corpus import BeliefState, SlotSchema
from taskdialog.kb import KBTable, query

INFORMABLE = ["food", "pricerange", "area"]
REQUESTABLE = ["address", "area", "food", "phone", "postcode", "pricerange", "name"]

KB_RECORDS = [
    {"name": "da vinci pizzeria", "food": "italian", "pricerange": "cheap", "area": "north",
     "address": "20 milton road chesterton", "phone": "01223 351707", "postcode": "cb41jy"},
    {"name": "golden wok", "food": "chinese", "pricerange": "moderate", "area": "north",
     "address": "191 histon road chesterton", "phone": "01223 350688", "postcode": "cb43hl"},
    {"name": "nandos", "food": "portuguese", "pricerange": "cheap", "area": "south",
     "address": "cambridge leisure park clifton way", "phone": "01223 327908", "postcode": "cb17dy"},
    {"name": "curry prince", "food": "indian", "pricerange": "moderate", "area": "east",
     "address": "451 newmarket road fen ditton", "phone": "01223 566388", "postcode": "cb58jj"},
    {"name": "pizza hut city centre", "food": "italian", "pricerange": "cheap", "area": "centre",
     "address": "regent street city centre", "phone": "01223 323737", "postcode": "cb21ab"},
    {"name": "the missing sock", "food": "international", "pricerange": "cheap", "area": "east",
     "address": "finders corner newmarket road", "phone": "01223 812660", "postcode": "cb259aq"},
]

# (user, informable updates, requested, delex response)
DIALOGUE_SCRIPTS = [
    [
        ("i want a cheap restaurant in the north part of town",
         {"pricerange": "cheap", "area": "north"}, [],
         "name_SLOT is a pricerange_SLOT restaurant in the area_SLOT of town"),
        ("what is their address and phone number",
         {}, ["address", "phone"],
         "name_SLOT is at address_SLOT and their phone is phone_SLOT"),
    ],
    [
        ("i am looking for a moderately priced chinese restaurant",
         {"pricerange": "moderate", "food": "chinese"}, [],
         "name_SLOT serves food_SLOT food in the pricerange_SLOT price range"),
        ("what is the postcode",
         {}, ["postcode"],
         "the postcode of name_SLOT is postcode_SLOT"),
    ],
    [
        ("find me an expensive french restaurant",
         {"pricerange": "expensive", "food": "french"}, [],
         "i am sorry there are no french restaurants in the expensive price range"),
        ("how about a cheap italian restaurant in the centre",
         {"pricerange": "cheap", "food": "italian", "area": "centre"}, [],
         "name_SLOT is a food_SLOT restaurant in the area_SLOT area"),
    ],
    [
        ("i need a cheap restaurant",
         {"pricerange": "cheap"}, [],
         "there are several pricerange_SLOT restaurants what type of food do you want"),
        ("italian food please",
         {"food": "italian"}, [],
         "name_SLOT serves food_SLOT food would you like the address"),
        ("yes give me the address please",
         {}, ["address"],
         "the address of name_SLOT is address_SLOT"),
    ],
    [
        ("is there an indian restaurant in the east part of town",
         {"food": "indian", "area": "east"}, [],
         "yes name_SLOT is in the area_SLOT part of town"),
        ("do they have a moderate price range and what is the phone number",
         {"pricerange": "moderate"}, ["phone", "pricerange"],
         "name_SLOT is in the pricerange_SLOT price range and the phone number is phone_SLOT"),
    ],
]


def micro_schema() -> SlotSchema:
    return SlotSchema.build(INFORMABLE, REQUESTABLE)


def build_micro_dataset() -> dict:
    schema = micro_schema()
    table = KBTable.from_records("restaurant", KB_RECORDS)
    dialogues = []
    for d_idx, script in enumerate(DIALOGUE_SCRIPTS):
        belief = BeliefState.empty()
        turns = []
        for user, informs, requests, delex in script:
            belief = belief.copy()
            for slot, value in informs.items():
                belief.informable[slot] = tuple(value.split())
            belief.requestable = set(requests)
            results = query(table, belief.constraints())
            raw = delex
            record = results[0] if results else {}
            for slot in REQUESTABLE:
                raw = raw.replace(f"{slot}_SLOT", record.get(slot, "unknown"))
            turns.append({
                "user": user,
                "agent_raw": raw,
                "agent_delex": delex,
                "belief": belief.to_json(schema),
                "kb_match_count": len(results),
            })
        dialogues.append({"id": f"micro-{d_idx}", "table": "restaurant", "turns": turns})
    return {"schema": schema.to_json(), "dialogues": dialogues}


def write_micro_corpus(directory) -> str:
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "train.json"), "w", encoding="utf-8") as fh:
        json.dump(build_micro_dataset(), fh, indent=1, sort_keys=True)
    with open(os.path.join(directory, "kb.json"), "w", encoding="utf-8") as fh:
        json.dump({"restaurant": KB_RECORDS}, fh, indent=1, sort_keys=True)
    return str(directory)
