# coding=utf-8
"""
张量、自动微分、网络层、优化器与检查点
"""

from collections import OrderedDict

import numpy as np
import pytest

from shopradar.core.errors import CheckpointFormatError, NumericError, ShapeError
from shopradar.numerics import (
    LSTM,
    AdaGradState,
    MultiHeadSelfAttention,
    ParameterSet,
    Tensor,
    adagrad_step,
    attention,
    clip_by_global_norm,
    dot,
    forward_backward,
    global_norm,
    layer_norm,
    load_checkpoint,
    lstm_forward,
    masked_mean,
    multi_head_self_attention,
    precision,
    save_checkpoint,
    softmax,
    softmax_cross_entropy,
    take,
)
from shopradar.numerics.layers import set_param, zeros_like_params


def numeric_grad(fn, array: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    """中心差分，原地扰动 array"""
    grad = np.zeros_like(array)
    for idx in np.ndindex(array.shape):
        old = array[idx]
        array[idx] = old + eps
        plus = fn()
        array[idx] = old - eps
        minus = fn()
        array[idx] = old
        grad[idx] = (plus - minus) / (2 * eps)
    return grad


def check_grads(loss_fn, tensors, rtol=1e-4, atol=1e-6):
    grads = forward_backward(loss_fn())
    for t in tensors:
        expected = numeric_grad(lambda: float(loss_fn().data), t.data)
        np.testing.assert_allclose(grads[t.name], expected, rtol=rtol, atol=atol, err_msg=t.name)


class TestAutodiff:

    def test_sum_gradient_is_ones(self, float64):
        x = Tensor.param([1.0, 2.0, 3.0], "x")
        grads = forward_backward(x.sum())
        np.testing.assert_allclose(grads["x"], [1.0, 1.0, 1.0])

    def test_self_dot_gradient(self, float64):
        x = Tensor.param([1.0, 2.0], "x")
        grads = forward_backward(dot(x, x))
        np.testing.assert_allclose(grads["x"], [2.0, 4.0])

    def test_repeated_rows_accumulate(self, float64):
        table = Tensor.param(np.zeros((3, 2)), "table")
        grads = forward_backward(take(table, [0, 0, 1]).sum())
        np.testing.assert_allclose(grads["table"], [[2.0, 2.0], [1.0, 1.0], [0.0, 0.0]])

    def test_unused_parameter_not_reported(self, float64):
        x = Tensor.param([1.0], "x")
        Tensor.param([1.0], "y")
        assert set(forward_backward(x.sum())) == {"x"}

    def test_non_scalar_loss_raises(self):
        x = Tensor.param([1.0, 2.0], "x")
        with pytest.raises(ShapeError):
            forward_backward(x * 2.0)

    def test_non_finite_result_raises(self):
        x = Tensor.param([1.0], "x")
        with pytest.raises(NumericError):
            x * float("inf")

    def test_matmul_shape_mismatch(self):
        with pytest.raises(ShapeError):
            Tensor(np.ones((2, 3))) @ Tensor(np.ones((2, 3)))

    def test_precision_context_restores_default(self):
        with precision(np.float64):
            assert Tensor([1.0]).dtype == np.float64
        assert Tensor([1.0]).dtype == np.float32

    def test_tensor_division_rejected(self):
        with pytest.raises(ShapeError):
            Tensor([1.0]) / Tensor([2.0])


class TestSoftmax:

    def test_rows_sum_to_one(self, rng):
        p = softmax(Tensor(rng.normal(size=(4, 7)))).data
        np.testing.assert_allclose(p.sum(axis=-1), 1.0, atol=1e-6)

    def test_masked_positions_get_zero(self):
        mask = np.array([[True, False, True], [False, False, False]])
        p = softmax(Tensor(np.zeros((2, 3))), mask).data
        np.testing.assert_allclose(p[0], [0.5, 0.0, 0.5], atol=1e-7)
        np.testing.assert_allclose(p[1], 0.0)

    def test_cross_entropy_matches_direct_formula(self, float64, rng):
        logits = rng.normal(size=(3, 5))
        targets = np.array([0, 4, 2])
        loss = softmax_cross_entropy(Tensor(logits), targets).data
        log_p = logits - np.log(np.exp(logits).sum(axis=1, keepdims=True))
        np.testing.assert_allclose(loss, -log_p[np.arange(3), targets], rtol=1e-10)

    def test_cross_entropy_gradient(self, float64, rng):
        w = Tensor.param(rng.normal(size=(3, 5)), "w")
        mask = np.ones((3, 5), dtype=bool)
        mask[1, 3] = False
        check_grads(lambda: softmax_cross_entropy(w, [0, 1, 2], mask).mean(), [w])

    def test_masked_target_raises(self):
        mask = np.array([[False, True]])
        with pytest.raises(ShapeError):
            softmax_cross_entropy(Tensor(np.zeros((1, 2))), [0], mask)

    def test_masked_mean_of_empty_row_is_zero(self):
        x = Tensor(np.ones((2, 3, 4)))
        mask = np.array([[True, True, False], [False, False, False]])
        out = masked_mean(x, mask, axis=1).data
        np.testing.assert_allclose(out[0], 1.0)
        np.testing.assert_allclose(out[1], 0.0)


class TestLayerGradients:

    def test_layer_norm(self, float64, rng):
        x = Tensor.param(rng.normal(size=(2, 4)), "x")
        gamma = Tensor.param(rng.normal(size=4), "gamma")
        beta = Tensor.param(rng.normal(size=4), "beta")
        weights = Tensor(rng.normal(size=(2, 4)))
        check_grads(lambda: (layer_norm(x, gamma, beta) * weights).sum(), [x, gamma, beta])

    def test_attention(self, float64, rng):
        q = Tensor.param(rng.normal(size=(2, 3)), "q")
        k = Tensor.param(rng.normal(size=(4, 3)), "k")
        v = Tensor.param(rng.normal(size=(4, 3)), "v")
        weights = Tensor(rng.normal(size=(2, 3)))
        mask = np.array([True, True, False, True])

        def loss():
            out, _ = attention(q, k, v, key_mask=mask, scaled=True)
            return (out * weights).sum()

        check_grads(loss, [q, k, v])

    def test_multi_head_self_attention(self, float64, rng):
        params = ParameterSet()
        layer = MultiHeadSelfAttention(params, "mha", 4, 2, np.random.default_rng(0))
        x = Tensor.param(rng.normal(size=(3, 4)), "x")
        weights = Tensor(rng.normal(size=(3, 4)))
        check_grads(lambda: (multi_head_self_attention(x, layer) * weights).sum(),
                    [x, params["mha.q.weight"], params["mha.v.weight"]])

    def test_lstm(self, float64, rng):
        params = ParameterSet()
        layer = LSTM(params, "lstm", 3, 2, 0.0, np.random.default_rng(0))
        seq = Tensor.param(rng.normal(size=(4, 3)), "seq")
        weights = Tensor(rng.normal(size=(4, 3)))
        check_grads(lambda: (lstm_forward(seq, layer) * weights).sum(),
                    [seq, params["lstm.l0.f.u"], params["lstm.l1.g.w"], params["lstm.l0.i.b"]])


class TestMultiHeadSelfAttention:

    def test_single_position_passes_value_through(self, float64, rng):
        params = ParameterSet()
        layer = MultiHeadSelfAttention(params, "mha", 4, 2, np.random.default_rng(1))
        x = rng.normal(size=(1, 4))
        out = multi_head_self_attention(Tensor(x), layer).data
        expected = x @ params["mha.v.weight"].data @ params["mha.o.weight"].data
        np.testing.assert_allclose(out, expected, rtol=1e-10)

    def test_identical_rows_attend_uniformly(self, float64):
        params = ParameterSet()
        layer = MultiHeadSelfAttention(params, "mha", 4, 2, np.random.default_rng(1))
        x = np.tile(np.array([[0.3, -0.2, 0.5, 0.1]]), (5, 1))
        out = multi_head_self_attention(Tensor(x), layer).data
        np.testing.assert_allclose(layer.last_weights, 0.2, rtol=1e-10)
        np.testing.assert_allclose(out, np.tile(out[:1], (5, 1)), rtol=1e-10)

    def test_heads_must_divide_dim(self):
        with pytest.raises(ShapeError):
            MultiHeadSelfAttention(ParameterSet(), "mha", 6, 4, np.random.default_rng(0))


class TestLSTM:

    def test_zero_weights_give_zero_states(self, rng):
        params = ParameterSet()
        layer = LSTM(params, "lstm", 3, 2, 0.0, np.random.default_rng(0))
        zeros_like_params(params)
        out = lstm_forward(Tensor(rng.normal(size=(5, 3))), layer).data
        np.testing.assert_allclose(out, 0.0)

    def test_cell_recurrence_with_constant_gate(self, float64):
        params = ParameterSet()
        layer = LSTM(params, "lstm", 2, 1, 0.0, np.random.default_rng(0))
        zeros_like_params(params)
        set_param(params, "lstm.l0.g.b", np.ones(2))
        out = lstm_forward(Tensor(np.zeros((2, 2))), layer).data
        c1 = 0.5 * np.tanh(1.0)
        c2 = 0.5 * c1 + 0.5 * np.tanh(1.0)
        np.testing.assert_allclose(out[0], 0.5 * np.tanh(c1), rtol=1e-12)
        np.testing.assert_allclose(out[1], 0.5 * np.tanh(c2), rtol=1e-12)

    def test_empty_sequence_raises(self):
        layer = LSTM(ParameterSet(), "lstm", 3, 1, 0.0, np.random.default_rng(0))
        with pytest.raises(ShapeError):
            lstm_forward(Tensor(np.zeros((0, 3))), layer)


class TestAdaGrad:

    def test_first_step_moves_by_learning_rate(self):
        params = ParameterSet()
        w = params.add("w", np.array([0.0]))
        adagrad_step(AdaGradState(learning_rate=0.1, clip_norm=3.0), params, {"w": np.array([1.0])})
        np.testing.assert_allclose(w.data, [-0.1], rtol=1e-6)

    def test_zero_gradient_leaves_parameters(self):
        params = ParameterSet()
        w = params.add("w", np.array([0.5, -0.5]))
        adagrad_step(AdaGradState(), params, {"w": np.zeros(2)})
        np.testing.assert_allclose(w.data, [0.5, -0.5])

    def test_global_norm_clipping(self):
        clipped = clip_by_global_norm({"w": np.array([6.0, 0.0])}, 3.0)
        np.testing.assert_allclose(clipped["w"], [3.0, 0.0])
        assert global_norm({"a": np.array([3.0]), "b": np.array([4.0])}) == pytest.approx(5.0)

    def test_small_gradients_untouched_by_clipping(self):
        grads = {"w": np.array([0.1, 0.2])}
        assert clip_by_global_norm(grads, 3.0) is grads

    def test_accumulators_never_decrease(self, rng):
        params = ParameterSet()
        params.add("w", np.zeros(3))
        state = AdaGradState()
        previous = np.zeros(3)
        for _ in range(5):
            adagrad_step(state, params, {"w": rng.normal(size=3)})
            assert np.all(state.accumulators["w"] >= previous)
            previous = state.accumulators["w"].copy()
        assert state.steps == 5

    def test_shape_mismatch_raises(self):
        params = ParameterSet()
        params.add("w", np.zeros(3))
        with pytest.raises(ShapeError):
            adagrad_step(AdaGradState(), params, {"w": np.zeros(2)})
        with pytest.raises(ShapeError):
            adagrad_step(AdaGradState(), params, {"missing": np.zeros(3)})

    def test_non_finite_gradient_raises(self):
        params = ParameterSet()
        params.add("w", np.zeros(2))
        with pytest.raises(NumericError):
            adagrad_step(AdaGradState(), params, {"w": np.array([np.nan, 0.0])})


class TestCheckpoint:

    def test_round_trip_preserves_order_and_values(self, tmp_path, rng):
        arrays = OrderedDict([("b", rng.normal(size=(2, 3))), ("a", rng.normal(size=4)), ("s", np.array(1.5))])
        path = tmp_path / "model.mgd"
        save_checkpoint(str(path), arrays)
        loaded = load_checkpoint(str(path))
        assert list(loaded) == ["b", "a", "s"]
        for name in arrays:
            np.testing.assert_allclose(loaded[name], arrays[name].astype(np.float32))

    def test_same_parameters_same_bytes(self, tmp_path, rng):
        arrays = OrderedDict([("w", rng.normal(size=(3, 3)))])
        save_checkpoint(str(tmp_path / "a.mgd"), arrays)
        save_checkpoint(str(tmp_path / "b.mgd"), arrays)
        assert (tmp_path / "a.mgd").read_bytes() == (tmp_path / "b.mgd").read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.mgd"
        path.write_bytes(b"NOPE" + b"\x00" * 8)
        with pytest.raises(CheckpointFormatError):
            load_checkpoint(str(path))

    def test_truncated_file(self, tmp_path):
        path = tmp_path / "model.mgd"
        save_checkpoint(str(path), OrderedDict([("w", np.ones((4, 4)))]))
        path.write_bytes(path.read_bytes()[:-5])
        with pytest.raises(CheckpointFormatError):
            load_checkpoint(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointFormatError):
            load_checkpoint(str(tmp_path / "none.mgd"))

    def test_parameter_set_rejects_mismatched_names(self):
        params = ParameterSet()
        params.add("w", np.zeros(2))
        with pytest.raises(ShapeError):
            params.load_arrays({"v": np.zeros(2)})
        with pytest.raises(ShapeError):
            params.load_arrays({"w": np.zeros(3)})
