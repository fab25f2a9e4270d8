import json
import subprocess
import sys
import time
from pathlib import Path

import httpx
import pytest

from taskdialog.cli import main

from micro_corpus import write_micro_corpus

DATA = Path(__file__).parent / "data"


def cli_config(corpus_dir, checkpoint, log_path=None, **overrides) -> dict:
    config = {
        "learning_rate": 0.003, "dropout_rate": 0.0, "hidden_dim": 16,
        "embedding_dim": 8, "alpha_inf": 1.5, "alpha_req": 9.0,
        "alpha_resp_slot": 8.0, "alpha_resp": 0.5, "batch_size": 8,
        "epochs": 2, "seed": 3, "min_count": 1, "eval_every": 50,
        "patience": 0, "max_value_len": 6, "max_response_len": 16,
        "data_path": str(corpus_dir), "data_format": "canonical",
        "checkpoint_path": str(checkpoint),
    }
    if log_path:
        config["log_path"] = str(log_path)
    config.update(overrides)
    return config


def write_config(path, config):
    path.write_text(json.dumps(config))
    return str(path)


def test_train_writes_checkpoint_and_log(tmp_path, capsys):
    corpus_dir = write_micro_corpus(tmp_path / "micro")
    ckpt = tmp_path / "model.ckpt"
    log = tmp_path / "train.jsonl"
    cfg = write_config(tmp_path / "cfg.json", cli_config(corpus_dir, ckpt, log))
    assert main(["train", "--config", cfg]) == 0
    assert ckpt.exists()
    lines = [json.loads(l) for l in log.read_text().splitlines()]
    assert len(lines) == 2 and lines[0]["epoch"] == 1
    out = json.loads(capsys.readouterr().out)
    assert out["checkpoint"] == str(ckpt)


def test_train_missing_corpus_exits_2(tmp_path, capsys):
    cfg = write_config(tmp_path / "cfg.json",
                       cli_config(tmp_path / "nowhere", tmp_path / "m.ckpt"))
    assert main(["train", "--config", cfg]) == 2


def test_train_invalid_config_exits_2(tmp_path):
    corpus_dir = write_micro_corpus(tmp_path / "micro")
    cfg = write_config(tmp_path / "cfg.json",
                       cli_config(corpus_dir, tmp_path / "m.ckpt", learning_rate=-1))
    assert main(["train", "--config", cfg]) == 2


def test_train_nan_abort_exits_3(tmp_path, monkeypatch):
    import taskdialog.cli as cli_mod
    from taskdialog.trainer import TrainAbort

    corpus_dir = write_micro_corpus(tmp_path / "micro")
    ckpt = tmp_path / "m.ckpt"
    cfg = write_config(tmp_path / "cfg.json", cli_config(corpus_dir, ckpt))

    import taskdialog.trainer as tr_mod

    def aborting(corpus, config, log_fn=None):
        raise TrainAbort("non-finite loss (induced)")

    monkeypatch.setattr(tr_mod, "train", aborting)
    assert cli_mod.main(["train", "--config", cfg]) == 3


def test_flag_beats_env(trained, capsys, monkeypatch):
    corpus_dir, ckpt = trained
    capsys.readouterr()
    monkeypatch.setenv("TASKDIALOG_SPLIT", "dev")
    assert main(["evaluate", "--checkpoint", str(ckpt), "--data", str(corpus_dir),
                 "--split", "train"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["split"] == "train"  # the flag wins over the env var


def test_log_records_carry_loss_components(tmp_path):
    corpus_dir = write_micro_corpus(tmp_path / "micro")
    ckpt = tmp_path / "m.ckpt"
    log = tmp_path / "t.jsonl"
    cfg = write_config(tmp_path / "cfg.json", cli_config(corpus_dir, ckpt, log))
    assert main(["train", "--config", cfg]) == 0
    record = json.loads(log.read_text().splitlines()[0])
    assert set(record["loss_components"]) == {"inf", "req", "resp_slot", "resp"}
    assert all(v >= 0 for v in record["loss_components"].values())


def test_train_same_seed_byte_identical_checkpoints(tmp_path):
    corpus_dir = write_micro_corpus(tmp_path / "micro")
    ckpt1, ckpt2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    cfg1 = write_config(tmp_path / "c1.json", cli_config(corpus_dir, ckpt1))
    cfg2 = write_config(tmp_path / "c2.json", cli_config(corpus_dir, ckpt2))
    assert main(["train", "--config", cfg1]) == 0
    assert main(["train", "--config", cfg2]) == 0
    assert ckpt1.read_bytes() == ckpt2.read_bytes()


@pytest.fixture
def trained(tmp_path):
    corpus_dir = write_micro_corpus(tmp_path / "micro")
    ckpt = tmp_path / "model.ckpt"
    cfg = write_config(tmp_path / "cfg.json", cli_config(corpus_dir, ckpt))
    assert main(["train", "--config", cfg]) == 0
    return corpus_dir, ckpt


def test_evaluate_prints_report(trained, capsys):
    corpus_dir, ckpt = trained
    capsys.readouterr()
    code = main(["evaluate", "--checkpoint", str(ckpt), "--data", str(corpus_dir),
                 "--split", "train", "--belief-feed", "gold"])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report) >= {"inf", "req", "bleu", "emr", "succ_f1", "per_dialogue"}
    assert report["belief_feed"] == "gold"
    assert report["dialogues"] == 5


def test_evaluate_empty_split_null_metrics(trained, capsys):
    corpus_dir, ckpt = trained
    capsys.readouterr()
    assert main(["evaluate", "--checkpoint", str(ckpt), "--data", str(corpus_dir),
                 "--split", "dev"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["dialogues"] == 0
    assert report["bleu"] is None and report["inf"] is None


def test_evaluate_gold_and_predicted_reports_differ(trained, capsys):
    corpus_dir, ckpt = trained
    capsys.readouterr()
    main(["evaluate", "--checkpoint", str(ckpt), "--data", str(corpus_dir),
          "--split", "train", "--belief-feed", "gold"])
    gold_report = json.loads(capsys.readouterr().out)
    main(["evaluate", "--checkpoint", str(ckpt), "--data", str(corpus_dir),
          "--split", "train", "--belief-feed", "predicted"])
    pred_report = json.loads(capsys.readouterr().out)
    assert gold_report["belief_feed"] == "gold"
    assert pred_report["belief_feed"] == "predicted"


def test_evaluate_missing_checkpoint_exits_4(trained):
    corpus_dir, _ = trained
    assert main(["evaluate", "--checkpoint", "/nonexistent.ckpt",
                 "--data", str(corpus_dir), "--split", "train"]) == 4


def test_evaluate_schema_mismatch_exits_4(trained):
    _, ckpt = trained
    assert main(["evaluate", "--checkpoint", str(ckpt),
                 "--data", str(DATA / "kvret_raw"), "--format", "kvret",
                 "--split", "train"]) == 4


def test_env_var_fallback(trained, capsys, monkeypatch):
    corpus_dir, ckpt = trained
    capsys.readouterr()
    monkeypatch.setenv("TASKDIALOG_CHECKPOINT", str(ckpt))
    monkeypatch.setenv("TASKDIALOG_DATA", str(corpus_dir))
    monkeypatch.setenv("TASKDIALOG_SPLIT", "train")
    assert main(["evaluate"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["split"] == "train"


def test_prepare_converts_raw_corpus(tmp_path, capsys):
    out_dir = tmp_path / "canon"
    assert main(["prepare", "--data", str(DATA / "camrest_raw"),
                 "--format", "camrest", "--out", str(out_dir)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["dialogues"] == {"train": 3, "dev": 1, "test": 1}
    assert (out_dir / "train.json").exists() and (out_dir / "kb.json").exists()


def test_serve_end_to_end_over_http(trained, tmp_path):
    corpus_dir, ckpt = trained
    port = 8765
    proc = subprocess.Popen(
        [sys.executable, "-m", "taskdialog.cli", "serve",
         "--checkpoint", str(ckpt), "--kb", str(Path(corpus_dir) / "kb.json"),
         "--port", str(port)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    base = f"http://127.0.0.1:{port}"
    try:
        for _ in range(50):
            try:
                if httpx.get(base + "/v1/health", timeout=1).status_code == 200:
                    break
            except httpx.TransportError:
                time.sleep(0.2)
        else:
            raise AssertionError("server did not come up")
        schema = httpx.get(base + "/v1/schema").json()
        assert "informable_slots" in schema
        turn = httpx.post(base + "/v1/turn",
                          json={"session_id": "t", "user_utterance": "cheap food"},
                          timeout=10).json()
        assert "belief" in turn and "response_text" in turn
    finally:
        proc.terminate()
        proc.wait(timeout=10)
