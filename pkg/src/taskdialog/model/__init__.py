"""The structured-belief dialogue network."""

from .network import (
    DECISION_THRESHOLD,
    DEFAULT_MAX_RESPONSE_LEN,
    DEFAULT_MAX_VALUE_LEN,
    EVAL_CONTEXT,
    GREEDY,
    TEACHER,
    BeliefTrace,
    CopyProbVector,
    DialogueNetwork,
    EncodeResult,
    InformableDecode,
    ResponseDecode,
    RunContext,
    SlotClassification,
    TurnPrediction,
    safe_lookup,
)
from .params import ModelParams, build_embedding_init, load_word_vectors

__all__ = [
    "BeliefTrace", "CopyProbVector", "DECISION_THRESHOLD",
    "DEFAULT_MAX_RESPONSE_LEN", "DEFAULT_MAX_VALUE_LEN", "DialogueNetwork",
    "EVAL_CONTEXT", "EncodeResult", "GREEDY", "InformableDecode",
    "ModelParams", "ResponseDecode", "RunContext", "SlotClassification",
    "TEACHER", "TurnPrediction", "build_embedding_init", "load_word_vectors",
    "safe_lookup",
]
