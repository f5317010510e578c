import json
import os

import numpy as np
import pytest

import ovfl

TINY = {
    "T": 3,
    "seeds": [1],
    "world": {
        "slots_per_round": 8,
        "rss_per_slot": 6,
        "train_slots": 4,
        "test_slots": 4,
        "num_sus": 2,
    },
    "extractor_hidden": [5],
    "embedding_dim": 3,
    "head_hidden": [4],
}


def test_version():
    assert ovfl.__version__


def test_mlp_forward_shapes_and_determinism():
    net = ovfl.Mlp([4, 6, 2], seed=7)
    x = np.random.default_rng(0).normal(size=(5, 4))
    out = net.forward(x)
    assert out.shape == (5, 2)
    again = ovfl.Mlp([4, 6, 2], seed=7).forward(x)
    np.testing.assert_array_equal(out, again)
    assert net.num_params == 4 * 6 + 6 + 6 * 2 + 2


def test_mse_loss():
    pred = np.zeros((1, 2))
    labels = np.array([[1.0, 3.0]])
    assert ovfl.mse_loss(pred, labels) == pytest.approx(5.0)


def test_quantize_uniform_lossless_at_b32():
    x = np.random.default_rng(1).normal(size=(4, 4))
    rec, payload, side = ovfl.quantize_uniform(x, 32)
    np.testing.assert_array_equal(rec, x)
    assert payload == 16 * 32
    assert side == 0


def test_quantize_uniform_b1_cell_centers():
    x = np.array([[0.0, 0.3, 0.5, 1.0]])
    rec, payload, side = ovfl.quantize_uniform(x, 1)
    np.testing.assert_allclose(rec, [[0.25, 0.25, 0.75, 0.75]])
    assert payload == 4
    assert side == 64


def test_quantize_hex_zero_tensor():
    rec, payload, side = ovfl.quantize_hex(np.zeros((2, 4)), 2)
    np.testing.assert_array_equal(rec, np.zeros((2, 4)))
    assert payload == 8 * 2
    assert side == 32


def test_environment_round_shapes():
    env = ovfl.Environment(json.dumps(TINY), seed=3)
    features, labels, train_rows, test_rows = env.next_round()
    assert len(features) == 2
    assert features[0].shape == (8, 8)  # 2 position dims + 6 readings
    assert labels.shape == (8, 2)
    assert train_rows == 4 and test_rows == 4


def test_run_experiment_writes_deterministic_csvs(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert ovfl.run_experiment(json.dumps(TINY), str(out_a)) == 0
    assert ovfl.run_experiment(json.dumps(TINY), str(out_b)) == 0
    name = "ovfl-u32-E1-v1-N2-K2_seed1.csv"
    content_a = (out_a / name).read_bytes()
    content_b = (out_b / name).read_bytes()
    assert content_a == content_b
    lines = content_a.decode().strip().split("\n")
    assert lines[0] == "round,train_loss,test_loss,bits_up,bits_down,cum_bits,wall_ms"
    assert len(lines) == 4


def test_seed_override(tmp_path):
    assert ovfl.run_experiment(json.dumps(TINY), str(tmp_path), seed=42) == 0
    assert (tmp_path / "ovfl-u32-E1-v1-N2-K2_seed42.csv").exists()


def test_preset_names():
    names = ovfl.preset_names()
    assert len(names) == 8
    assert "fig4_loss_vs_rounds" in names
    assert "fig12_bus_trace" in names


def test_bad_config_raises():
    with pytest.raises(Exception, match="bits_per_component"):
        ovfl.run_experiment(json.dumps({"quantizer": {"bits_per_component": 0}}))
