import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import fd_gradient_check, naive_conv, naive_ppn

from ppnqaoa.ppn import (
    CLAMP_MAX,
    ConvLayer,
    ModelFileError,
    PpnModel,
    TrainConfig,
    composed_loss,
    conv2d,
    denormalize,
    load_model,
    normalize,
    ppn_compose,
    ppn_forward,
    prediction_error,
    save_model,
    train,
)
from ppnqaoa.schedules import tqa_params
from ppnqaoa.simulator import ParameterSet


def random_labels(rng, n, s, T):
    return [rng.uniform(0, 1, size=(n, 1, 2, s + k)) for k in range(T + 1)]


def small_random_model(seed, n_blocks=2, scale=1.0):
    m = PpnModel.initialize(n_blocks, seed)
    rng = np.random.default_rng(seed + 1)
    for layer in m.layers():
        layer.kernel *= scale
        layer.bias[:] = rng.normal(0, 0.05, layer.bias.shape)
    return m


# ---- conv2d ----

def test_conv_zero_layer():
    layer = ConvLayer(np.zeros((3, 2, 2, 2)), np.zeros(3), 1)
    out = conv2d(np.ones((2, 4, 5)), layer)
    assert out.shape == (3, 5, 6) and not out.any()


def test_conv_identity_kernel():
    x = np.random.default_rng(0).normal(size=(1, 3, 4))
    out = conv2d(x, ConvLayer(np.ones((1, 1, 1, 1)), np.zeros(1), 0))
    assert np.array_equal(out, x)


def test_conv_matches_naive():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 3, 4))
    k, b = rng.normal(size=(5, 2, 2, 2)), rng.normal(size=5)
    np.testing.assert_allclose(conv2d(x, ConvLayer(k, b, 1)), naive_conv(x, k, b, 1), rtol=0, atol=1e-12)


def test_conv_channel_mismatch():
    with pytest.raises(ValueError):
        conv2d(np.ones((3, 2, 2)), ConvLayer(np.ones((1, 2, 1, 1)), np.zeros(1), 0))


# ---- initialization ----

def test_uniform_init_bounds():
    m = PpnModel.initialize(2, 0)
    for layer in m.layers():
        bound = 1 / math.sqrt(layer.kernel[0].size)
        assert np.abs(layer.kernel).max() <= bound and np.abs(layer.bias).max() <= bound
        assert layer.bias.any()


def test_he_init_scale():
    m = PpnModel.initialize(4, 0, init="he")
    big = m.blocks[0][0]
    assert not big.bias.any()
    assert big.kernel.std() == pytest.approx(math.sqrt(2 / 576), rel=0.05)


def test_init_is_seeded_and_validated():
    a, b = PpnModel.initialize(1, 3), PpnModel.initialize(1, 3)
    assert all(np.array_equal(x, y) for x, y in zip(a.tensors(), b.tensors()))
    with pytest.raises(ValueError):
        PpnModel.initialize(1, 0, init="xavier")


# ---- forward / compose ----

def test_zero_model_outputs_zero():
    m = PpnModel.initialize(4, zero=True)
    out = ppn_forward(m, np.full((1, 2, 3), 0.4), clamp=False)
    assert out.shape == (1, 2, 4) and not out.any()


@pytest.mark.parametrize("p", range(1, 13))
def test_shape_law(p):
    m = PpnModel.initialize(4, 0)
    assert ppn_forward(m, np.full((1, 2, p), 0.3)).shape == (1, 2, p + 1)


def test_forward_matches_naive_pipeline():
    m = small_random_model(3)
    x = np.random.default_rng(4).uniform(size=(1, 2, 3))
    np.testing.assert_allclose(ppn_forward(m, x, clamp=False), naive_ppn(m, x), rtol=0, atol=1e-10)


def test_batch_forward_matches_single():
    m = small_random_model(5)
    xs = np.random.default_rng(6).uniform(size=(4, 1, 2, 2))
    batch = ppn_forward(m, xs)
    for i in range(4):
        np.testing.assert_allclose(batch[i], ppn_forward(m, xs[i]), rtol=0, atol=1e-13)


def test_residual_block_with_zero_convs_is_identity():
    m = small_random_model(7, n_blocks=1)
    without = PpnModel(m.up1, m.up2, [], m.down)
    zero_blk = PpnModel.initialize(1, zero=True).blocks
    with_zero = PpnModel(m.up1, m.up2, zero_blk, m.down)
    x = np.random.default_rng(8).uniform(size=(1, 2, 2))
    assert np.array_equal(ppn_forward(with_zero, x, clamp=False), ppn_forward(without, x, clamp=False))


def test_compose_laws():
    m = small_random_model(9)
    x = np.random.default_rng(10).uniform(size=(1, 2, 1))
    assert np.array_equal(ppn_compose(m, x, 1), ppn_forward(m, x))
    assert np.array_equal(ppn_compose(m, x, 3), ppn_compose(m, ppn_compose(m, x, 2), 1))
    assert ppn_compose(m, x, 9).shape == (1, 2, 10)
    with pytest.raises(ValueError):
        ppn_compose(m, x, 0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 1000), p=st.integers(1, 4), a=st.integers(1, 3), b=st.integers(1, 3))
def test_compose_associative_and_clamped(seed, p, a, b):
    m = PpnModel.initialize(2, seed)
    x = np.random.default_rng(seed).uniform(size=(1, 2, p))
    out = ppn_compose(m, x, a + b)
    assert np.array_equal(out, ppn_compose(m, ppn_compose(m, x, a), b))
    assert np.all(out >= 0) and np.all(out < 1)


# ---- normalization ----

def test_normalize_examples():
    x = normalize(ParameterSet([math.pi / 2], [math.pi / 4]))
    assert x.shape == (1, 2, 1)
    assert x[0, 0, 0] == 0.5 and x[0, 1, 0] == 0.5
    tqa = normalize(tqa_params(2, 0.625))
    np.testing.assert_allclose(tqa[0], [[0.09947, 0.19894], [0.19894, 0.0]], rtol=0, atol=1e-5)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), p=st.integers(1, 6))
def test_normalize_roundtrip(seed, p):
    rng = np.random.default_rng(seed)
    ps = ParameterSet(rng.uniform(0, math.pi, p), rng.uniform(0, math.pi / 2, p))
    back = denormalize(normalize(ps))
    np.testing.assert_allclose(back.gammas, ps.gammas, rtol=0, atol=1e-15)
    np.testing.assert_allclose(back.betas, ps.betas, rtol=0, atol=1e-15)


def test_normalize_errors():
    with pytest.raises(ValueError):
        normalize(ParameterSet([math.pi], [0.1]))
    with pytest.raises(ValueError):
        denormalize(np.array([[[1.0], [0.2]]]))
    with pytest.raises(ValueError):
        denormalize(np.array([[[-0.1], [0.2]]]))


# ---- losses ----

def test_prediction_error_examples():
    a = np.array([[[0.2], [0.3]]])
    assert prediction_error(a, a) == 0
    assert prediction_error(a, a + 0.1) == pytest.approx(0.02, abs=1e-15)
    with pytest.raises(ValueError):
        prediction_error(a, np.zeros((1, 2, 2)))


def test_composed_loss_zero_cases():
    zero = PpnModel.initialize(2, zero=True)
    labels = [np.zeros((3, 1, 2, 1 + k)) for k in range(5)]
    assert composed_loss(zero, labels) == 0.0
    m = small_random_model(11)
    x = np.random.default_rng(12).uniform(size=(2, 1, 2, 1))
    exact = [x] + [ppn_compose(m, x, t, clamp=False) for t in range(1, 4)]
    assert composed_loss(m, exact, 1, 3) == 0.0


def test_composed_loss_arithmetic():
    m = small_random_model(13)
    x = np.array([[[[0.3], [0.2]]]])
    y = ppn_forward(m, x, clamp=False) + 0.1
    assert composed_loss(m, [x, y], s=1, T=1) == pytest.approx(0.04, abs=1e-14)


def test_composed_loss_missing_depth():
    m = PpnModel.initialize(1, 0)
    with pytest.raises(ValueError):
        composed_loss(m, [np.zeros((1, 1, 2, 1)), np.zeros((1, 1, 2, 2))], s=1, T=2)


@pytest.mark.parametrize("p, T", [(1, 2), (2, 1), (3, 1)])
def test_gradient_check(p, T):
    rng = np.random.default_rng(p)
    m = small_random_model(20 + p, scale=0.5)
    labels = random_labels(rng, 2, p, T)
    worst, checked, _ = fd_gradient_check(m, labels, p, T)
    assert sum(checked) >= 12 * 2 and worst < 1e-4


# ---- training ----

def test_zero_lr_keeps_weights():
    m = PpnModel.initialize(1, 0)
    before = [a.copy() for a in m.tensors()]
    cfg = TrainConfig(epochs_phase1=3, epochs_phase2=2, lr_phase1=0.0, lr_phase2=0.0, T=2)
    _, hist = train(m, random_labels(np.random.default_rng(0), 4, 1, 2), cfg)
    assert len(hist) == 5
    assert all(np.array_equal(a, b) for a, b in zip(before, m.tensors()))


def test_single_instance_overfit():
    rng = np.random.default_rng(3)
    labels = random_labels(rng, 1, 1, 1)
    m = PpnModel.initialize(1, 0)
    cfg = TrainConfig(epochs_phase1=5000, epochs_phase2=0, lr_phase1=1e-3, batch_phase1=1, T=1)
    _, hist = train(m, labels, cfg)
    assert hist[-1] < 1e-4


def test_training_is_deterministic():
    labels = random_labels(np.random.default_rng(1), 5, 1, 2)
    cfg = TrainConfig(epochs_phase1=4, epochs_phase2=2, lr_phase1=1e-3, lr_phase2=1e-4,
                      batch_phase1=2, batch_phase2=3, T=2)
    a, ha = train(PpnModel.initialize(1, 7), labels, cfg)
    b, hb = train(PpnModel.initialize(1, 7), labels, cfg)
    assert ha == hb
    assert all(np.array_equal(x, y) for x, y in zip(a.tensors(), b.tensors()))


def test_training_rejects_bad_config():
    labels = random_labels(np.random.default_rng(1), 2, 1, 1)
    with pytest.raises(ValueError):
        train(PpnModel.initialize(1, 0), labels, TrainConfig(batch_phase1=0, T=1))
    with pytest.raises(ValueError):
        train(PpnModel.initialize(1, 0), labels, TrainConfig(T=3))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_training_aborts_on_nonfinite_loss():
    labels = random_labels(np.random.default_rng(1), 2, 1, 1)
    labels[1][0, 0, 0, 0] = np.inf
    with pytest.raises(FloatingPointError):
        train(PpnModel.initialize(1, 0), labels, TrainConfig(epochs_phase1=1, epochs_phase2=0, T=1))


# ---- persistence ----

def test_save_load_roundtrip(tmp_path):
    m = small_random_model(30, n_blocks=3)
    path = tmp_path / "m.ppn"
    save_model(m, path)
    back = load_model(path)
    assert back.n_blocks == 3
    assert all(np.array_equal(a, b) for a, b in zip(m.tensors(), back.tensors()))
    x = np.full((1, 2, 2), 0.25)
    assert np.array_equal(ppn_forward(m, x), ppn_forward(back, x))


def test_load_default_depth_from_file(tmp_path):
    path = tmp_path / "m.ppn"
    save_model(PpnModel.initialize(4, 1), path)
    assert load_model(path).n_blocks == 4


def test_load_truncated_or_corrupt(tmp_path):
    path = tmp_path / "m.ppn"
    save_model(PpnModel.initialize(1, 1), path)
    data = path.read_bytes()
    for bad in (data[:-100], data[:10], data[:40] + bytes([data[40] ^ 1]) + data[41:]):
        path.write_bytes(bad)
        with pytest.raises(ModelFileError):
            load_model(path)


def test_clamp_bound():
    m = small_random_model(40, scale=20.0)
    out = ppn_compose(m, np.full((1, 2, 1), 0.5), 4)
    assert out.max() <= CLAMP_MAX and out.min() >= 0.0
