import numpy as np
import pytest

from taskdialog import numcore as nc


def test_adam_first_step_approaches_signed_lr():
    lr = 0.01
    for g in (0.7, -2.5):
        p = nc.Tensor([0.0], requires_grad=True)
        p.grad = np.array([g], dtype=np.float32)
        state = nc.OptimizerState(learning_rate=lr, epsilon=1e-12)
        nc.adam_step({"p": p}, state)
        assert np.isclose(p.data[0], -lr * np.sign(g), atol=1e-6)


def test_adam_zero_grad_keeps_params_and_decays_moments():
    # zero grad from a fresh state: update is exactly zero
    p = nc.Tensor([1.0], requires_grad=True)
    p.grad = np.array([0.0], dtype=np.float32)
    state = nc.OptimizerState(learning_rate=0.1)
    nc.adam_step({"p": p}, state)
    assert p.data[0] == 1.0

    # zero grad after a real step: both moments decay by their betas
    p.grad = np.array([2.0], dtype=np.float32)
    nc.adam_step({"p": p}, state)
    m_before = state.first_moment["p"].copy()
    v_before = state.second_moment["p"].copy()
    p.grad = np.array([0.0], dtype=np.float32)
    nc.adam_step({"p": p}, state)
    assert np.isclose(state.first_moment["p"][0], 0.9 * m_before[0])
    assert np.isclose(state.second_moment["p"][0], 0.999 * v_before[0])


def test_adam_two_steps_constant_grad_hand_recurrence():
    # hand-executed recurrence, lr=0.1, grad=1 at both steps
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
    m = v = 0.0
    theta = 0.0
    for t in (1, 2):
        m = b1 * m + (1 - b1) * 1.0
        v = b2 * v + (1 - b2) * 1.0
        m_hat = m / (1 - b1 ** t)
        v_hat = v / (1 - b2 ** t)
        theta -= lr * m_hat / (np.sqrt(v_hat) + eps)

    p = nc.Tensor([0.0], requires_grad=True)
    state = nc.OptimizerState(learning_rate=lr, beta1=b1, beta2=b2, epsilon=eps)
    for _ in range(2):
        p.grad = np.array([1.0], dtype=np.float32)
        nc.adam_step({"p": p}, state)
    assert np.isclose(p.data[0], theta, atol=1e-7)
    assert state.step_count == 2


def test_adam_nan_grad_aborts_with_diagnostics():
    p = nc.Tensor([0.0], requires_grad=True)
    p.grad = np.array([np.nan], dtype=np.float32)
    with pytest.raises(nc.OptimError, match="p"):
        nc.adam_step({"p": p}, nc.OptimizerState())


def test_checkpoint_roundtrip_and_determinism(tmp_path, rng):
    tensors = {
        "emb": nc.Tensor(rng.normal(size=(7, 3)).astype(np.float32)),
        "w": nc.Tensor(rng.normal(size=(2, 2)).astype(np.float32)),
        "b": nc.Tensor(rng.normal(size=2).astype(np.float32)),
    }
    extra = {"vocab": ["a", "b"], "hidden_dim": 2}
    path1, path2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    nc.save_checkpoint(path1, tensors, extra)
    nc.save_checkpoint(path2, tensors, extra)
    assert path1.read_bytes() == path2.read_bytes()

    loaded, loaded_extra = nc.load_checkpoint(path1)
    assert loaded_extra == extra
    assert set(loaded) == set(tensors)
    for name, t in tensors.items():
        assert np.array_equal(loaded[name], t.data)
        assert loaded[name].dtype == t.data.dtype


def test_checkpoint_version_mismatch_rejected(tmp_path):
    import json
    import struct

    manifest = json.dumps({"version": "other", "tensors": [], "extra": {}}).encode()
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(struct.pack("<Q", len(manifest)) + manifest)
    with pytest.raises(nc.CheckpointError, match="version"):
        nc.load_checkpoint(bad)


def test_checkpoint_truncated_rejected(tmp_path):
    bad = tmp_path / "trunc.ckpt"
    bad.write_bytes(b"\x05")
    with pytest.raises(nc.CheckpointError):
        nc.load_checkpoint(bad)
