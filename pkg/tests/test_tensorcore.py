import math

import numpy as np
import pytest

from ferroscope.tensorcore import (
    ELU,
    Adam,
    AdamHyper,
    AdamState,
    Concat,
    Conv2d,
    Dense,
    Dropout,
    MaxPool2,
    Mode,
    Network,
    PReLU,
    ReLU,
    Sigmoid,
    Upsample2x,
    adam_step,
    bce_with_logits,
    decode_parameters,
    encode_parameters,
    grad_check,
    l1_loss,
    load_parameters,
    save_parameters,
    softmax,
    softmax_cross_entropy,
)
from ferroscope.utils.errors import FormatError, NonFiniteError, ShapeError, StateError


def _mixed_network(seed: int) -> Network:
    """Small graph touching every layer kind."""
    rng = np.random.default_rng(seed)
    net = Network(f"mix{seed}", (2, 8, 8), seed=seed)
    net.add("conv_a", Conv2d(2, 3, 3, 1, 1, rng=rng))
    net.add("prelu", PReLU(float(rng.uniform(0.1, 0.4))))
    net.add("pool", MaxPool2())
    net.add("up", Upsample2x())
    net.add("cat", Concat(), inputs=["up", "input"])
    net.add("conv_b", Conv2d(5, 2, 3, 2, 1, rng=rng))
    net.add("elu", ELU())
    net.add("relu", ReLU())
    net.add("drop", Dropout(0.3))
    net.add("dense", Dense(32, 3, rng=rng))
    net.add("sig", Sigmoid())
    return net


def test_identity_conv_passes_input_through(rng):
    layer = Conv2d(2, 2, 1, 1, 0)
    layer.params["weight"].data = np.eye(2, dtype=np.float32).reshape(2, 2, 1, 1)
    net = Network("id", (2, 5, 5))
    net.add("conv", layer)
    x = rng.standard_normal((3, 2, 5, 5)).astype(np.float32)
    assert np.array_equal(net.run(x), x)


def test_identity_dense(rng):
    layer = Dense(4, 4)
    layer.params["weight"].data = np.eye(4, dtype=np.float32)
    net = Network("id", (4,))
    net.add("fc", layer)
    v = rng.standard_normal((1, 4)).astype(np.float32)
    assert np.array_equal(net.run(v), v)


def test_elu_negative_one():
    net = Network("elu", (1,))
    net.add("elu", ELU(1.0))
    out = net.run(np.array([[-1.0]], dtype=np.float32))
    assert out[0, 0] == pytest.approx(math.exp(-1) - 1, abs=1e-6)


def test_conv_output_size_formula():
    for h, k, s, p in [(8, 3, 1, 1), (9, 4, 2, 1), (16, 3, 2, 0), (7, 2, 3, 2)]:
        net = Network("c", (1, h, h))
        net.add("conv", Conv2d(1, 2, k, s, p))
        expected = (h + 2 * p - k) // s + 1
        assert net.output_shape == (2, expected, expected)
        assert net.run(np.zeros((1, 1, h, h), dtype=np.float32)).shape == (1, 2, expected, expected)


def test_dense_weight_gradient_is_outer_product(rng):
    layer = Dense(3, 2)
    net = Network("fc", (3,))
    net.add("fc", layer)
    x = rng.standard_normal((1, 3)).astype(np.float32)
    out = net.forward(x, Mode.TRAIN)["fc"]
    net.backward(np.ones_like(out))
    assert np.allclose(layer.params["weight"].grad, np.outer(np.ones(2), x[0]))
    assert np.allclose(layer.params["bias"].grad, np.ones(2))


def test_prelu_slope_gradient_on_negative_input():
    layer = PReLU(0.25)
    net = Network("p", (1,))
    net.add("prelu", layer)
    out = net.forward(np.array([[-2.0]], dtype=np.float32), Mode.TRAIN)["prelu"]
    assert out[0, 0] == pytest.approx(-0.5)
    net.backward(np.ones_like(out))
    assert layer.params["slope"].grad[0] == pytest.approx(-2.0)


def test_backward_without_forward_is_state_error():
    net = Network("fc", (3,))
    net.add("fc", Dense(3, 1))
    with pytest.raises(StateError):
        net.backward(np.ones((1, 1), dtype=np.float32))
    net.run(np.ones((1, 3), dtype=np.float32))
    with pytest.raises(StateError):
        net.backward(np.ones((1, 1), dtype=np.float32))


def test_shape_mismatch_names_layer():
    net = Network("s", (1, 8, 8))
    net.add("conv", Conv2d(1, 2, 3))
    with pytest.raises(ShapeError, match="input"):
        net.run(np.zeros((1, 2, 8, 8), dtype=np.float32))
    with pytest.raises(ShapeError, match="dense"):
        net.add("dense", Dense(10, 2))


def test_eval_forward_is_pure(rng):
    net = _mixed_network(3)
    x = rng.standard_normal((2, 2, 8, 8)).astype(np.float32)
    assert np.array_equal(net.run(x), net.run(x))


def test_dropout_only_in_training():
    net = Network("d", (100,), seed=5)
    net.add("drop", Dropout(0.5))
    x = np.ones((1, 100), dtype=np.float32)
    assert np.array_equal(net.run(x, Mode.EVAL), x)
    first = net.run(x, Mode.TRAIN)
    assert set(np.unique(first)) <= {0.0, 2.0}
    assert np.array_equal(first, net.run(x, Mode.TRAIN))
    net.advance()
    assert not np.array_equal(first, net.run(x, Mode.TRAIN))


def test_softmax_rows_sum_to_one(rng):
    probs = softmax(rng.standard_normal((20, 6)) * 10)
    assert np.all(probs > 0)
    assert np.allclose(probs.sum(axis=1), 1.0, atol=1e-6)


def test_cross_entropy_gradient_matches_softmax():
    logits = np.array([[2.0, 0.0, -1.0]], dtype=np.float32)
    loss, grad = softmax_cross_entropy(logits, np.array([0]))
    p = softmax(logits.astype(np.float64))
    assert loss == pytest.approx(-math.log(p[0, 0]), rel=1e-6)
    expected = p.copy()
    expected[0, 0] -= 1.0
    assert np.allclose(grad, expected, atol=1e-6)


def test_bce_with_logits_is_stable_for_large_logits():
    loss, grad = bce_with_logits(np.array([[80.0], [-80.0]], dtype=np.float32), np.array([[1.0], [0.0]]))
    assert loss == pytest.approx(0.0, abs=1e-12)
    assert np.all(np.isfinite(grad))


def test_l1_loss_value_and_gradient():
    loss, grad = l1_loss(np.array([1.0, -1.0, 0.5, 0.0]), np.zeros(4))
    assert loss == pytest.approx(0.625)
    assert np.allclose(grad, [0.25, -0.25, 0.25, 0.0])


def test_grad_check_linear_network(rng):
    net = Network("lin", (5,))
    net.add("fc", Dense(5, 3, rng=rng))
    assert grad_check(net, rng.standard_normal((2, 5))) < 1e-5


def test_grad_check_conv_elu_dense(rng):
    net = Network("ced", (1, 8, 8))
    net.add("conv1", Conv2d(1, 2, 3, 1, 1, rng=rng))
    net.add("elu", ELU())
    net.add("conv2", Conv2d(2, 2, 3, 2, 0, rng=rng))
    net.add("fc", Dense(18, 2, rng=rng))
    assert grad_check(net, rng.standard_normal((2, 1, 8, 8))) < 1e-3


def test_grad_check_with_dropout_mask_held_fixed(rng):
    net = Network("drop", (1, 8, 8), seed=9)
    net.add("conv", Conv2d(1, 2, 3, 1, 1, rng=rng))
    net.add("drop", Dropout(0.4))
    net.add("fc", Dense(128, 2, rng=rng))
    assert grad_check(net, rng.standard_normal((2, 1, 8, 8))) < 1e-3


def test_grad_check_twenty_random_networks():
    for seed in range(20):
        net = _mixed_network(seed)
        x = np.random.default_rng(100 + seed).standard_normal((2, 2, 8, 8))
        assert grad_check(net, x, seed=seed) < 1e-3, f"network seed {seed}"


def test_adam_zero_gradient_leaves_params():
    params = {"w": np.array([1.5, -2.0], dtype=np.float32)}
    new, state = adam_step(params, {"w": np.zeros(2, dtype=np.float32)}, AdamState())
    assert np.array_equal(new["w"], params["w"])
    assert np.all(state.m["w"] == 0) and np.all(state.v["w"] == 0)
    assert state.step == 1


def test_adam_first_step_moves_by_learning_rate():
    new, _ = adam_step({"p": np.array([0.0])}, {"p": np.array([1.0])}, AdamState(), AdamHyper(lr=0.1))
    assert new["p"][0] == pytest.approx(-0.1, rel=1e-6)


def test_adam_is_deterministic():
    params = {"p": np.array([0.3, 0.7])}
    grads = {"p": np.array([0.2, -0.5])}
    a, sa = adam_step(params, grads, AdamState())
    b, sb = adam_step(params, grads, AdamState())
    assert np.array_equal(a["p"], b["p"]) and np.array_equal(sa.v["p"], sb.v["p"])


def test_adam_rejects_non_finite_gradient():
    with pytest.raises(NonFiniteError) as info:
        adam_step({"layer.w": np.zeros(2)}, {"layer.w": np.array([np.nan, 0.0])}, AdamState())
    assert info.value.name == "layer.w"


def test_adam_optimizer_updates_network_in_place(rng):
    net = Network("fc", (2,))
    net.add("fc", Dense(2, 1, rng=rng))
    before = net.parameters()[0].data.copy()
    opt = Adam(net.parameters(), AdamHyper(lr=0.01))
    net.forward(np.ones((1, 2), dtype=np.float32), Mode.TRAIN)
    net.backward(np.ones((1, 1), dtype=np.float32))
    opt.step()
    assert not np.array_equal(before, net.parameters()[0].data)
    opt.zero_grad()
    assert np.all(net.parameters()[0].grad == 0)


def test_parameter_names_are_network_scoped():
    net = _mixed_network(0)
    names = list(net.named_parameters())
    assert "mix0.conv_a.weight" in names
    assert "mix0.prelu.slope" in names


def test_descriptor_rebuilds_same_architecture():
    net = _mixed_network(1)
    clone = Network.from_descriptor(net.descriptor())
    assert clone.descriptor() == net.descriptor()
    assert clone.layer_census() == net.layer_census()


def test_fsck1_roundtrip_is_bit_exact(tmp_path, rng):
    params = {p.name: p.data for p in _mixed_network(2).parameters()}
    path = tmp_path / "net.fsck"
    save_parameters(path, params)
    loaded = load_parameters(path)
    assert list(loaded) == list(params)
    for name in params:
        assert loaded[name].tobytes() == params[name].astype("<f4").tobytes()
    assert path.read_bytes()[:5] == b"FSCK1"


def test_fsck1_rejects_bad_magic_and_truncation():
    payload = encode_parameters({"w": np.ones((2, 2), dtype=np.float32)})
    with pytest.raises(FormatError):
        decode_parameters(b"XXXX1" + payload[5:])
    with pytest.raises(FormatError):
        decode_parameters(payload[:-3])
