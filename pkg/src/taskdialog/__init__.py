"""taskdialog: a turn-level task-oriented dialogue engine.

Tracks a structured belief state (per-slot informable values plus
requestable-slot flags) over a conversation, queries a relational KB with
the tracked constraints, and generates delexicalized agent responses with
a copy-gated decoder. Ships its own numeric core, trainer, evaluation
metrics, CLI and HTTP serving layer.
"""

__version__ = "0.1.0"
