"""Tensor/tape semantics, gradient oracles, Adam, and the checkpoint format."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fusionrec.errors import DataError, NumericError, ShapeError
from fusionrec.tensor import Adam, Tape, Tensor, grad_check, load_params, save_params


def rand(rng, r, c, scale=1.0):
    return Tensor(rng.standard_normal((r, c)) * scale, requires_grad=True)


# ---------------------------------------------------------------- forward


class TestForward:
    def test_matmul_identity_bit_exact(self):
        rng = np.random.default_rng(0)
        x = Tensor(rng.standard_normal((2, 5)))
        eye = Tensor(np.eye(2))
        out = Tape().matmul(eye, x)
        assert np.array_equal(out.data, x.data)

    def test_matmul_hand_value(self):
        a = Tensor([[1.0, 2.0], [3.0, 4.0]])
        b = Tensor([[1.0], [1.0]])
        out = Tape().matmul(a, b)
        assert np.array_equal(out.data, [[3.0], [7.0]])

    def test_matmul_shape_error(self):
        a = Tensor(np.zeros((2, 3)))
        with pytest.raises(ShapeError):
            Tape().matmul(a, Tensor(np.zeros((2, 3))))

    def test_softmax_symmetry(self):
        out = Tape().softmax_rows(Tensor([[0.0, 0.0, 0.0]]))
        np.testing.assert_allclose(out.data, [[1 / 3] * 3], atol=1e-12)

    def test_softmax_closed_form(self):
        # e^(ln 4) = 4 against four ones: [1,1,1,1,4]/8
        out = Tape().softmax_rows(Tensor([[0.0, 0.0, 0.0, 0.0, math.log(4.0)]]))
        np.testing.assert_allclose(out.data, [[0.125, 0.125, 0.125, 0.125, 0.5]],
                                   atol=1e-12)

    def test_softmax_overflow_safe(self):
        out = Tape().softmax_rows(Tensor([[1000.0, 0.0]]))
        assert np.all(np.isfinite(out.data))
        np.testing.assert_allclose(out.data[0, 0], 1.0, atol=1e-12)
        assert abs(out.data.sum() - 1.0) < 1e-6

    def test_softmax_large_rows_sum_to_one(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal((8, 16)) * 400.0  # elements > 700 after abs
        out = Tape().softmax_rows(Tensor(x))
        np.testing.assert_allclose(out.data.sum(axis=1), 1.0, atol=1e-6)
        assert np.all(out.data >= 0)

    def test_softmax_rejects_nan(self):
        with pytest.raises(NumericError):
            Tape().softmax_rows(Tensor([[np.nan, 0.0]]))

    def test_relu(self):
        out = Tape().relu(Tensor([[-1.0, 2.0]]))
        assert np.array_equal(out.data, [[0.0, 2.0]])

    def test_layer_norm_constant_row_is_zero(self):
        tape = Tape()
        out = tape.layer_norm(Tensor([[5.0, 5.0, 5.0, 5.0]]),
                              Tensor(np.ones((1, 4))), Tensor(np.zeros((1, 4))))
        np.testing.assert_allclose(out.data, np.zeros((1, 4)), atol=1e-12)

    def test_concat_cols(self):
        a = Tensor(np.ones((2, 3)))
        b = Tensor(np.zeros((2, 3)))
        out = Tape().concat_cols([a, b])
        assert out.shape == (2, 6)

    def test_add_bias_row(self):
        x = Tensor(np.zeros((3, 2)))
        b = Tensor([[1.0, 2.0]])
        out = Tape().add(x, b)
        assert np.array_equal(out.data, np.tile([[1.0, 2.0]], (3, 1)))

    def test_add_shape_error(self):
        with pytest.raises(ShapeError):
            Tape().add(Tensor(np.zeros((2, 2))), Tensor(np.zeros((3, 2))))

    def test_interleave_and_take_every_round_trip(self):
        rng = np.random.default_rng(1)
        mats = [Tensor(rng.standard_normal((4, 3))) for _ in range(5)]
        tape = Tape()
        stacked = tape.interleave_rows(mats)
        assert stacked.shape == (20, 3)
        for k, m in enumerate(mats):
            got = tape.take_every(stacked, stride=5, offset=k)
            assert np.array_equal(got.data, m.data)


# ---------------------------------------------------------------- backward


class TestBackward:
    def test_loss_must_be_scalar(self):
        tape = Tape()
        x = Tensor(np.ones((2, 2)), requires_grad=True)
        y = tape.relu(x)
        with pytest.raises(ShapeError):
            tape.backward(y)

    def test_sum_gradient_is_ones(self):
        tape = Tape()
        x = Tensor(np.arange(6, dtype=float).reshape(2, 3), requires_grad=True)
        tape.backward(tape.sum_all(x))
        assert np.array_equal(x.grad, np.ones((2, 3)))

    def test_matmul_gradient_pattern(self):
        # loss = sum(A @ B) => dA = ones @ B^T
        rng = np.random.default_rng(2)
        a = rand(rng, 3, 4)
        b = rand(rng, 4, 2)
        tape = Tape()
        tape.backward(tape.sum_all(tape.matmul(a, b)))
        np.testing.assert_allclose(a.grad, np.ones((3, 2)) @ b.data.T, atol=1e-12)
        np.testing.assert_allclose(b.grad, a.data.T @ np.ones((3, 2)), atol=1e-12)

    def test_backward_idempotent(self):
        rng = np.random.default_rng(4)
        x = rand(rng, 2, 3)
        tape = Tape()
        loss = tape.sum_all(tape.mul(x, x))
        tape.backward(loss)
        first = x.grad.copy()
        tape.backward(loss)
        assert np.array_equal(first, x.grad)

    def test_untouched_param_gets_zero_grad(self):
        rng = np.random.default_rng(5)
        x = rand(rng, 2, 2)
        unused = rand(rng, 3, 3)
        tape = Tape()
        tape.backward(tape.sum_all(x), params=[x, unused])
        assert np.array_equal(unused.grad, np.zeros((3, 3)))

    @pytest.mark.parametrize("op_name", [
        "matmul", "add", "add_bias", "mul", "scale", "relu", "softmax_rows",
        "layer_norm", "concat_cols", "slice_cols", "slice_rows", "gather_rows",
        "take_every", "interleave_rows", "pick_per_row", "mean_all", "log",
        "clamp_min",
    ])
    def test_grad_check_every_op(self, op_name):
        rng = np.random.default_rng(hash(op_name) % 2**32)
        a = rand(rng, 3, 4)
        b = rand(rng, 4, 2)
        c = rand(rng, 3, 4)
        bias = rand(rng, 1, 4)
        gain = Tensor(1.0 + 0.1 * rng.standard_normal((1, 4)), requires_grad=True)
        pos = Tensor(rng.random((3, 4)) + 0.5, requires_grad=True)  # positive input

        builders = {
            "matmul": (lambda t: t.sum_all(t.mul(y := t.matmul(a, b), y)), [a, b]),
            "add": (lambda t: t.sum_all(t.mul(y := t.add(a, c), y)), [a, c]),
            "add_bias": (lambda t: t.sum_all(t.mul(y := t.add(a, bias), y)), [a, bias]),
            "mul": (lambda t: t.sum_all(t.mul(a, c)), [a, c]),
            "scale": (lambda t: t.sum_all(t.mul(y := t.scale(a, -1.7), y)), [a]),
            "relu": (lambda t: t.sum_all(t.mul(y := t.relu(a), y)), [a]),
            "softmax_rows": (lambda t: t.sum_all(t.mul(y := t.softmax_rows(a), t.relu(c))), [a]),
            "layer_norm": (lambda t: t.sum_all(t.mul(y := t.layer_norm(a, gain, bias), y)),
                           [a, gain, bias]),
            "concat_cols": (lambda t: t.sum_all(t.mul(y := t.concat_cols([a, c]), y)), [a, c]),
            "slice_cols": (lambda t: t.sum_all(t.mul(y := t.slice_cols(a, 1, 3), y)), [a]),
            "slice_rows": (lambda t: t.sum_all(t.mul(y := t.slice_rows(a, 0, 2), y)), [a]),
            "gather_rows": (lambda t: t.sum_all(
                t.mul(y := t.gather_rows(a, np.array([0, 2, 2, 1])), y)), [a]),
            "take_every": (lambda t: t.sum_all(
                t.mul(y := t.take_every(t.interleave_rows([a, c]), 2, 1), y)), [a, c]),
            "interleave_rows": (lambda t: t.sum_all(
                t.mul(y := t.interleave_rows([a, c]), y)), [a, c]),
            "pick_per_row": (lambda t: t.sum_all(
                t.mul(y := t.pick_per_row(a, np.array([0, 3, 2])), y)), [a]),
            "mean_all": (lambda t: t.mean_all(t.mul(a, a)), [a]),
            "log": (lambda t: t.sum_all(t.log(pos)), [pos]),
            "clamp_min": (lambda t: t.sum_all(t.mul(y := t.clamp_min(a, 0.1), y)), [a]),
        }
        f, params = builders[op_name]
        assert grad_check(f, params) < 1e-6

    def test_grad_check_sum_of_squares_vs_analytic(self):
        rng = np.random.default_rng(7)
        x = rand(rng, 4, 4)
        tape = Tape()
        tape.backward(tape.sum_all(tape.mul(x, x)))
        np.testing.assert_allclose(x.grad, 2 * x.data, atol=1e-12)
        assert grad_check(lambda t: t.sum_all(t.mul(x, x)), [x]) < 1e-6

    def test_grad_check_linear_is_machine_precision(self):
        rng = np.random.default_rng(8)
        x = rand(rng, 3, 3)
        assert grad_check(lambda t: t.sum_all(x), [x]) < 1e-10


# ---------------------------------------------------------------- Adam


class TestAdam:
    def test_zero_gradient_is_identity(self):
        p = Tensor(np.full((2, 2), 1.5), requires_grad=True)
        before = p.data.copy()
        opt = Adam([p], lr=0.01)
        p.grad = np.zeros((2, 2))
        opt.step()
        assert np.array_equal(p.data, before)
        assert opt.step_count == 1

    def test_first_step_is_signed_lr(self):
        # bias correction makes the first update ~ -lr * sign(g)
        p = Tensor(np.zeros((1, 3)), requires_grad=True)
        opt = Adam([p], lr=0.05)
        p.grad = np.array([[0.3, -2.0, 7.5]])
        opt.step()
        np.testing.assert_allclose(p.data, [[-0.05, 0.05, -0.05]], rtol=1e-6)

    def test_lr_zero_is_identity(self):
        p = Tensor(np.ones((2, 2)), requires_grad=True)
        before = p.data.copy()
        opt = Adam([p], lr=0.0)
        p.grad = np.ones((2, 2))
        opt.step()
        assert np.array_equal(p.data, before)

    def test_non_finite_gradient_rejected(self):
        p = Tensor(np.ones((1, 1)), requires_grad=True)
        opt = Adam([p])
        p.grad = np.array([[np.inf]])
        with pytest.raises(NumericError):
            opt.step()

    def test_shape_mismatch_rejected(self):
        p = Tensor(np.ones((2, 2)), requires_grad=True)
        opt = Adam([p])
        p.grad = np.ones((1, 2))
        with pytest.raises(ShapeError):
            opt.step()

    @given(st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=20, deadline=None)
    def test_zero_grad_identity_any_state(self, seed):
        rng = np.random.default_rng(seed)
        p = Tensor(rng.standard_normal((2, 3)), requires_grad=True)
        opt = Adam([p], lr=0.01)
        # advance the state with a few real steps first
        for _ in range(3):
            p.grad = rng.standard_normal((2, 3))
            opt.step()
        before = p.data.copy()
        p.grad = np.zeros((2, 3))
        opt.step()
        assert np.array_equal(p.data, before)


# ---------------------------------------------------------------- checkpoint


class TestCheckpoint:
    def test_round_trip_preserves_order_and_values(self, tmp_path):
        rng = np.random.default_rng(9)
        named = {
            "embed.user": rng.standard_normal((4, 3)).astype(np.float32),
            "head.w": rng.standard_normal((3, 5)).astype(np.float32),
            "head.b": rng.standard_normal((1, 5)).astype(np.float32),
        }
        path = tmp_path / "model.frwt"
        save_params(path, named)
        loaded = load_params(path)
        assert list(loaded) == list(named)
        for k in named:
            assert np.array_equal(loaded[k], named[k])

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.frwt"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(DataError, match="magic"):
            load_params(path)

    def test_truncated_file(self, tmp_path):
        rng = np.random.default_rng(10)
        path = tmp_path / "model.frwt"
        save_params(path, {"w": rng.standard_normal((8, 8)).astype(np.float32)})
        blob = path.read_bytes()
        path.write_bytes(blob[:-10])
        with pytest.raises(DataError, match="truncated"):
            load_params(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError, match="not found"):
            load_params(tmp_path / "absent.frwt")
