"""Dense 2-D tensors with a reverse-mode automatic differentiation tape.

Everything is a rows x cols matrix backed by a numpy array; there is no
broadcasting beyond adding a 1 x cols bias row. Operations are methods on a
Tape, which records one node per op in execution order (already topological),
so the backward pass is a single reversed sweep that visits each node once.

Training runs in float32, correctness tests in float64; the dtype of a graph
is taken from its inputs and must be uniform.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

from ..errors import NumericError, ShapeError


class Tensor:
    """A rows x cols matrix, optionally marked as a trainable parameter."""

    __slots__ = ("data", "requires_grad", "grad", "name", "_needs_grad")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None,
                 dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype.kind != "f":
            arr = arr.astype(np.float64)
        if arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise ShapeError(f"tensors are 2-D, got ndim={arr.ndim}")
        self.data = arr
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.name = name
        # true when this tensor is a parameter or depends on one
        self._needs_grad = requires_grad

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        if self.data.shape != (1, 1):
            raise ShapeError(f"item() needs a 1x1 tensor, got {self.data.shape}")
        return float(self.data[0, 0])

    def assert_finite(self, what: str = "tensor") -> "Tensor":
        if not np.all(np.isfinite(self.data)):
            raise NumericError(f"non-finite values in {what}"
                               + (f" '{self.name}'" if self.name else ""))
        return self

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"<Tensor {self.rows}x{self.cols} {self.data.dtype}{tag}>"


class TapeNode:
    __slots__ = ("inputs", "output", "backward_fn")

    def __init__(self, inputs: tuple[Tensor, ...], output: Tensor,
                 backward_fn: Callable[[np.ndarray], tuple]):
        self.inputs = inputs
        self.output = output
        self.backward_fn = backward_fn


def _check_same_dtype(*tensors: Tensor) -> None:
    dtypes = {t.dtype for t in tensors}
    if len(dtypes) > 1:
        raise ShapeError(f"mixed dtypes in op: {sorted(map(str, dtypes))}")


class Tape:
    """Records operations for one forward pass; replayed in reverse for gradients.

    A tape and its intermediate tensors belong to a single thread. With
    record=False the same ops run forward-only (evaluation mode).
    """

    def __init__(self, record: bool = True):
        self.nodes: list[TapeNode] = []
        self.record = record

    # ---- recording machinery -------------------------------------------

    def register(self, inputs: Sequence[Tensor], out_data: np.ndarray,
                 backward_fn: Callable[[np.ndarray], tuple]) -> Tensor:
        """Create the output tensor of an op and record its backward rule.

        backward_fn maps d(loss)/d(output) to one gradient array (or None)
        per input. Exposed so higher-level modules can add fused ops.
        """
        out = Tensor(out_data)
        if self.record:
            out._needs_grad = any(t._needs_grad for t in inputs)
            if out._needs_grad:
                self.nodes.append(TapeNode(tuple(inputs), out, backward_fn))
        return out

    def backward(self, loss: Tensor, params: Iterable[Tensor] | None = None) -> None:
        """Populate .grad on every parameter reachable from loss.

        loss must be 1x1. Parameters passed via `params` that the graph never
        touched receive a zero gradient. Calling backward twice on the same
        tape overwrites grads with identical values.
        """
        if loss.shape != (1, 1):
            raise ShapeError(f"loss must be 1x1, got {loss.shape}")
        loss.assert_finite("loss")
        grads: dict[int, np.ndarray] = {id(loss): np.ones((1, 1), dtype=loss.dtype)}
        touched: dict[int, Tensor] = {}
        for node in reversed(self.nodes):
            g_out = grads.get(id(node.output))
            if g_out is None:
                continue
            in_grads = node.backward_fn(g_out)
            for t, g in zip(node.inputs, in_grads):
                if g is None or not t._needs_grad:
                    continue
                key = id(t)
                if key in grads:
                    grads[key] = grads[key] + g
                else:
                    grads[key] = g
                if t.requires_grad:
                    touched[key] = t
        for key, t in touched.items():
            t.grad = np.ascontiguousarray(grads[key])
        if params is not None:
            for p in params:
                if id(p) not in touched:
                    p.grad = np.zeros_like(p.data)

    # ---- ops -------------------------------------------------------------

    def matmul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.cols != b.rows:
            raise ShapeError(f"matmul {a.shape} @ {b.shape}")
        _check_same_dtype(a, b)
        out = a.data @ b.data
        a_data, b_data = a.data, b.data
        need_a, need_b = a._needs_grad, b._needs_grad

        def bwd(g):
            return (g @ b_data.T if need_a else None,
                    a_data.T @ g if need_b else None)

        return self.register((a, b), out, bwd)

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        """Elementwise sum; b may also be a 1 x cols bias row."""
        _check_same_dtype(a, b)
        if a.shape == b.shape:
            def bwd(g):
                return g, g
        elif b.rows == 1 and b.cols == a.cols:
            def bwd(g):
                return g, g.sum(axis=0, keepdims=True)
        else:
            raise ShapeError(f"add {a.shape} + {b.shape}")
        return self.register((a, b), a.data + b.data, bwd)

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        if a.shape != b.shape:
            raise ShapeError(f"mul {a.shape} * {b.shape}")
        _check_same_dtype(a, b)
        a_data, b_data = a.data, b.data

        def bwd(g):
            return g * b_data, g * a_data

        return self.register((a, b), a_data * b_data, bwd)

    def scale(self, x: Tensor, c: float) -> Tensor:
        c = float(c)

        def bwd(g):
            return (g * c,)

        return self.register((x,), x.data * c, bwd)

    def relu(self, x: Tensor) -> Tensor:
        mask = x.data > 0

        def bwd(g):
            return (g * mask,)

        return self.register((x,), np.where(mask, x.data, 0.0), bwd)

    def log(self, x: Tensor) -> Tensor:
        x_data = x.data

        def bwd(g):
            return (g / x_data,)

        return self.register((x,), np.log(x_data), bwd)

    def clamp_min(self, x: Tensor, floor: float) -> Tensor:
        """max(x, floor); gradient passes through only where x > floor."""
        mask = x.data > floor

        def bwd(g):
            return (g * mask,)

        return self.register((x,), np.maximum(x.data, floor), bwd)

    def softmax_rows(self, x: Tensor) -> Tensor:
        """Row-wise softmax with max subtraction; rows sum to 1."""
        if not np.all(np.isfinite(x.data)):
            raise NumericError("non-finite input to softmax_rows")
        shifted = x.data - x.data.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=1, keepdims=True)

        def bwd(g):
            gy = g * y
            return (gy - y * gy.sum(axis=1, keepdims=True),)

        return self.register((x,), y, bwd)

    def layer_norm(self, x: Tensor, gain: Tensor, bias: Tensor,
                   eps: float = 1e-5) -> Tensor:
        """Per-row normalization followed by a 1 x cols gain and bias."""
        if gain.shape != (1, x.cols) or bias.shape != (1, x.cols):
            raise ShapeError(f"layer_norm gain/bias must be 1x{x.cols}")
        _check_same_dtype(x, gain, bias)
        mu = x.data.mean(axis=1, keepdims=True)
        var = x.data.var(axis=1, keepdims=True)
        inv = 1.0 / np.sqrt(var + eps)
        xhat = (x.data - mu) * inv
        out = xhat * gain.data + bias.data
        g_data = gain.data

        def bwd(g):
            dxhat = g * g_data
            dgain = (g * xhat).sum(axis=0, keepdims=True)
            dbias = g.sum(axis=0, keepdims=True)
            m1 = dxhat.mean(axis=1, keepdims=True)
            m2 = (dxhat * xhat).mean(axis=1, keepdims=True)
            dx = (dxhat - m1 - xhat * m2) * inv
            return dx, dgain, dbias

        return self.register((x, gain, bias), out, bwd)

    def concat_cols(self, tensors: Sequence[Tensor]) -> Tensor:
        tensors = list(tensors)
        if not tensors:
            raise ShapeError("concat_cols of empty list")
        rows = tensors[0].rows
        if any(t.rows != rows for t in tensors):
            raise ShapeError("concat_cols row mismatch")
        _check_same_dtype(*tensors)
        widths = [t.cols for t in tensors]
        edges = np.cumsum([0] + widths)

        def bwd(g):
            return tuple(g[:, edges[i]:edges[i + 1]] for i in range(len(widths)))

        return self.register(tuple(tensors), np.concatenate([t.data for t in tensors], axis=1), bwd)

    def transpose(self, x: Tensor) -> Tensor:
        def bwd(g):
            return (g.T,)

        return self.register((x,), x.data.T.copy(), bwd)

    def slice_cols(self, x: Tensor, start: int, stop: int) -> Tensor:
        if not (0 <= start < stop <= x.cols):
            raise ShapeError(f"slice_cols [{start}:{stop}] of {x.shape}")
        shape = x.shape

        def bwd(g):
            full = np.zeros(shape, dtype=g.dtype)
            full[:, start:stop] = g
            return (full,)

        return self.register((x,), x.data[:, start:stop].copy(), bwd)

    def slice_rows(self, x: Tensor, start: int, stop: int) -> Tensor:
        if not (0 <= start < stop <= x.rows):
            raise ShapeError(f"slice_rows [{start}:{stop}] of {x.shape}")
        shape = x.shape

        def bwd(g):
            full = np.zeros(shape, dtype=g.dtype)
            full[start:stop, :] = g
            return (full,)

        return self.register((x,), x.data[start:stop, :].copy(), bwd)

    def gather_rows(self, table: Tensor, idx: np.ndarray) -> Tensor:
        """Select rows table[idx]; the backward rule scatter-adds into the table."""
        idx = np.asarray(idx)
        if idx.ndim != 1:
            raise ShapeError("gather_rows index must be 1-D")
        if idx.size and (idx.min() < 0 or idx.max() >= table.rows):
            raise ShapeError(
                f"gather_rows index out of range [0, {table.rows}) : "
                f"[{idx.min()}, {idx.max()}]")
        shape = table.shape

        def bwd(g):
            full = np.zeros(shape, dtype=g.dtype)
            np.add.at(full, idx, g)
            return (full,)

        return self.register((table,), table.data[idx].copy(), bwd)

    def take_every(self, x: Tensor, stride: int, offset: int) -> Tensor:
        """Rows offset, offset+stride, ... — e.g. one row per record of a stacked batch."""
        if x.rows % stride != 0 or not (0 <= offset < stride):
            raise ShapeError(f"take_every(stride={stride}, offset={offset}) on {x.shape}")
        shape = x.shape

        def bwd(g):
            full = np.zeros(shape, dtype=g.dtype)
            full[offset::stride, :] = g
            return (full,)

        return self.register((x,), x.data[offset::stride, :].copy(), bwd)

    def interleave_rows(self, tensors: Sequence[Tensor]) -> Tensor:
        """Stack S tensors of shape B x d into (B*S) x d, record-major.

        Row i*S + k of the output is row i of the k-th input; this lays a batch
        of token sequences out as contiguous per-record blocks.
        """
        tensors = list(tensors)
        s = len(tensors)
        if s == 0:
            raise ShapeError("interleave_rows of empty list")
        b, d = tensors[0].shape
        if any(t.shape != (b, d) for t in tensors):
            raise ShapeError("interleave_rows shape mismatch")
        _check_same_dtype(*tensors)
        out = np.empty((b * s, d), dtype=tensors[0].dtype)
        for k, t in enumerate(tensors):
            out[k::s, :] = t.data

        def bwd(g):
            return tuple(g[k::s, :] for k in range(s))

        return self.register(tuple(tensors), out, bwd)

    def pick_per_row(self, x: Tensor, idx: np.ndarray) -> Tensor:
        """Column n x 1 of x[i, idx[i]] — e.g. the probability of each true class."""
        idx = np.asarray(idx)
        if idx.shape != (x.rows,):
            raise ShapeError("pick_per_row needs one index per row")
        if idx.size and (idx.min() < 0 or idx.max() >= x.cols):
            raise ShapeError("pick_per_row index out of range")
        rows = np.arange(x.rows)
        shape = x.shape

        def bwd(g):
            full = np.zeros(shape, dtype=g.dtype)
            full[rows, idx] = g[:, 0]
            return (full,)

        return self.register((x,), x.data[rows, idx].reshape(-1, 1).copy(), bwd)

    def sum_all(self, x: Tensor) -> Tensor:
        shape, dt = x.shape, x.dtype

        def bwd(g):
            return (np.full(shape, g[0, 0], dtype=dt),)

        return self.register((x,), np.array([[x.data.sum()]], dtype=dt), bwd)

    def mean_all(self, x: Tensor) -> Tensor:
        shape, dt = x.shape, x.dtype
        n = x.data.size

        def bwd(g):
            return (np.full(shape, g[0, 0] / n, dtype=dt),)

        return self.register((x,), np.array([[x.data.mean()]], dtype=dt), bwd)

    def dropout(self, x: Tensor, rate: float, rng: np.random.Generator) -> Tensor:
        """Inverted dropout; identity when rate == 0."""
        if not 0.0 <= rate < 1.0:
            raise ShapeError(f"dropout rate {rate} outside [0, 1)")
        if rate == 0.0:
            return x
        mask = (rng.random(x.shape) >= rate).astype(x.dtype) / (1.0 - rate)

        def bwd(g):
            return (g * mask,)

        return self.register((x,), x.data * mask, bwd)
