import numpy as np
import pytest

from taskdialog.corpus import SlotSchema, build_vocab
from taskdialog.model import DialogueNetwork, ModelParams


def micro_schema():
    return SlotSchema.build(["food", "area"], ["phone", "address"])


MICRO_STREAMS = [
    ["i", "want", "cheap", "italian", "food", "in", "the", "north"],
    ["what", "is", "the", "phone", "number", "and", "address", "?"],
    ["name_SLOT", "is", "at", "address_SLOT", "phone", "phone_SLOT"],
    ["there", "are", "no", "matches", "sorry", "."],
]


def make_micro_net(seed=3, hidden=5, emb=6, dtype=np.float32,
                   schema=None) -> DialogueNetwork:
    schema = schema or micro_schema()
    vocab = build_vocab(MICRO_STREAMS, schema, min_count=1)
    params = ModelParams(len(vocab), emb, hidden,
                         np.random.default_rng(seed), dtype=dtype)
    return DialogueNetwork(params, vocab, schema, max_value_len=4, max_response_len=10)


@pytest.fixture
def micro_net():
    return make_micro_net()


class TokenList:
    """Minimal vocab stand-in for numcore tests: a token list + id lookup."""

    def __init__(self, tokens):
        self.tokens = list(tokens)
        self._ids = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    def id_of(self, token):
        return self._ids.get(token)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_CRITERIA = {
    "test_gradient_correctness": "gradient correctness (full turn loss vs finite differences)",
    "test_distribution_normalization": "decoder distributions normalize (1000 steps per decoder)",
    "test_structural_validity_fuzz": "structural belief validity over 10,000 random predictions",
    "test_micro_corpus_overfit": "micro-corpus overfit (loss, F1s, BLEU, runtime)",
    "test_overfit_checkpoint_evaluates_perfectly": "overfit checkpoint: evaluate CLI reports all 1.0",
    "test_overfit_server_reproduces_gold_transcript": "overfit server: scripted conversation matches gold",
    "test_kb_oracle_equivalence": "KB query equals brute force; match-count binning",
    "test_metric_oracles": "metric oracles (PRF/SuccF1 counting, BLEU hand cases)",
    "test_determinism": "seeded training/inference determinism",
    "test_desk_scale_camrest_training": "desk-scale restaurant-corpus training thresholds",
}

_acceptance_results: list[tuple[str, str]] = []


@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    setattr(item, "rep_" + rep.when, rep)
    name = getattr(item, "originalname", item.name)
    if name in ACCEPTANCE_CRITERIA and rep.when == "call":
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        _acceptance_results.append((ACCEPTANCE_CRITERIA[name], status))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for label, status in _acceptance_results:
        terminalreporter.write_line(f"[{status}] {label}")
