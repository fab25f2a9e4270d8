"""Command-line entry points: train, evaluate, serve, prepare.

Settings resolve as flag > environment variable > config file. Environment
variables use the TASKDIALOG_ prefix (TASKDIALOG_CHECKPOINT,
TASKDIALOG_SPLIT, TASKDIALOG_BELIEF_FEED, TASKDIALOG_PORT, TASKDIALOG_KB,
TASKDIALOG_DATA, TASKDIALOG_FORMAT).

Exit codes: 0 ok, 2 invalid config/input, 3 training aborted on a
non-finite loss, 4 checkpoint mismatch.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .corpus import ParseError, load_corpus, save_canonical
from .numcore import CheckpointError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NAN = 3
EXIT_CHECKPOINT = 4

ENV_PREFIX = "TASKDIALOG_"

CONFIG_EXTRA_KEYS = ("data_path", "data_format", "checkpoint_path", "log_path")


def _env(name: str):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))


def _resolve(flag_value, name: str, file_value=None):
    if flag_value is not None:
        return flag_value
    env_value = _env(name)
    if env_value is not None:
        return env_value
    return file_value


def _read_config_file(path) -> tuple[dict, dict]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise ValueError(f"cannot read config {path}: {err}") from None
    extras = {k: raw.pop(k) for k in list(raw) if k in CONFIG_EXTRA_KEYS}
    return raw, extras


def cmd_train(args) -> int:
    from .trainer import ConfigError, TrainAbort, TrainConfig, train, write_jsonl

    try:
        raw, extras = _read_config_file(args.config)
        config = TrainConfig.from_json(raw)
    except (ValueError, ConfigError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    data_path = _resolve(args.data, "data", extras.get("data_path"))
    data_format = _resolve(args.format, "format", extras.get("data_format")) or "canonical"
    checkpoint_path = _resolve(args.checkpoint, "checkpoint",
                               extras.get("checkpoint_path")) or "model.ckpt"
    log_path = _resolve(None, "log", extras.get("log_path"))
    if not data_path or not os.path.exists(data_path):
        print(f"error: corpus path {data_path!r} does not exist", file=sys.stderr)
        return EXIT_CONFIG

    try:
        corpus = load_corpus(data_path, data_format)
    except (ParseError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    records = []
    try:
        model = train(corpus, config, log_fn=records.append)
    except TrainAbort as err:
        print(f"error: {err}", file=sys.stderr)
        if err.params is not None and checkpoint_path:
            # last-good parameters are still worth keeping for inspection
            err.params.save(checkpoint_path + ".aborted")
        return EXIT_NAN
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    model.save(checkpoint_path)
    if log_path:
        write_jsonl(records, log_path)
    final = records[-1] if records else {}
    print(json.dumps({"checkpoint": checkpoint_path,
                      "epochs": len(records),
                      "final": final}, sort_keys=True))
    return EXIT_OK


def _load_checkpoint_net(path):
    from .trainer import load_trained

    if not path or not os.path.exists(path):
        raise CheckpointError(f"checkpoint {path!r} does not exist")
    return load_trained(path)


def cmd_evaluate(args) -> int:
    from .trainer import evaluate_split

    checkpoint = _resolve(args.checkpoint, "checkpoint")
    split = _resolve(args.split, "split") or "test"
    belief_feed = _resolve(args.belief_feed, "belief_feed")
    beam_width = _resolve(args.beam_width, "beam_width")
    data_path = _resolve(args.data, "data")
    data_format = _resolve(args.format, "format") or "canonical"

    try:
        net, config = _load_checkpoint_net(checkpoint)
    except (CheckpointError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CHECKPOINT
    if belief_feed:
        config.eval_belief_feed = belief_feed
    if beam_width:
        config.beam_width = int(beam_width)
    try:
        config.validate()
    except Exception as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    if not data_path or not os.path.exists(data_path):
        print(f"error: corpus path {data_path!r} does not exist", file=sys.stderr)
        return EXIT_CONFIG
    try:
        corpus = load_corpus(data_path, data_format)
    except (ParseError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    if corpus.schema != net.schema:
        print("error: corpus schema does not match the checkpoint schema",
              file=sys.stderr)
        return EXIT_CHECKPOINT

    report = evaluate_split(net, corpus, split, config)
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .kb import KBTable
    from .service import create_app

    checkpoint = _resolve(args.checkpoint, "checkpoint")
    kb_path = _resolve(args.kb, "kb")
    port = int(_resolve(args.port, "port") or 8080)

    try:
        net, _ = _load_checkpoint_net(checkpoint)
    except (CheckpointError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CHECKPOINT

    table = None
    if kb_path:
        try:
            with open(kb_path, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
        except (OSError, json.JSONDecodeError) as err:
            print(f"error: cannot read kb {kb_path}: {err}", file=sys.stderr)
            return EXIT_CONFIG
        if isinstance(payload, list):
            table = KBTable.from_records("kb", payload)
        else:
            if args.table:
                name = args.table
            elif len(payload) == 1:
                name = next(iter(payload))
            else:
                print(f"error: kb file has tables {sorted(payload)}; pick one with --table",
                      file=sys.stderr)
                return EXIT_CONFIG
            if name not in payload:
                print(f"error: table {name!r} not in kb file", file=sys.stderr)
                return EXIT_CONFIG
            table = KBTable.from_records(name, payload[name])

    app = create_app(net, table, checkpoint_name=os.path.basename(checkpoint))
    uvicorn.run(app, host=args.host, port=port, log_level="warning")
    return EXIT_OK


def cmd_prepare(args) -> int:
    try:
        corpus = load_corpus(args.data, args.format)
    except (ParseError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    save_canonical(corpus, args.out)
    counts = {s: len(corpus.split(s)) for s in ("train", "dev", "test")}
    print(json.dumps({"out": args.out, "dialogues": counts,
                      "kb_tables": sorted(corpus.kb)}, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="taskdialog",
                                     description="structured-belief dialogue engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model from a JSON config")
    p_train.add_argument("--config", required=True)
    p_train.add_argument("--data", help="corpus path (overrides config data_path)")
    p_train.add_argument("--format", choices=["canonical", "camrest", "kvret"])
    p_train.add_argument("--checkpoint", help="output checkpoint path")
    p_train.set_defaults(fn=cmd_train)

    p_eval = sub.add_parser("evaluate", help="run inference + metrics on a split")
    p_eval.add_argument("--checkpoint")
    p_eval.add_argument("--data")
    p_eval.add_argument("--format", choices=["canonical", "camrest", "kvret"])
    p_eval.add_argument("--split", choices=["train", "dev", "test"])
    p_eval.add_argument("--belief-feed", dest="belief_feed",
                        choices=["predicted", "gold"])
    p_eval.add_argument("--beam-width", dest="beam_width", type=int,
                        help="response search width (default 1 = greedy)")
    p_eval.set_defaults(fn=cmd_evaluate)

    p_serve = sub.add_parser("serve", help="serve dialogue turns over HTTP")
    p_serve.add_argument("--checkpoint")
    p_serve.add_argument("--kb", help="kb.json path")
    p_serve.add_argument("--table", help="table name when the kb file has several")
    p_serve.add_argument("--port", type=int)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.set_defaults(fn=cmd_serve)

    p_prep = sub.add_parser("prepare", help="convert a raw corpus to canonical layout")
    p_prep.add_argument("--data", required=True)
    p_prep.add_argument("--format", required=True, choices=["camrest", "kvret", "canonical"])
    p_prep.add_argument("--out", required=True)
    p_prep.set_defaults(fn=cmd_prepare)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
