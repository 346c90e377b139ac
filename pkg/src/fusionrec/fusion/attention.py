"""Scaled dot-product self-attention, per-head and fused-batch forms.

The per-head form composes ordinary tape ops over one n x d sequence and is
the reference implementation. The fused form takes the already-projected
Q/K/V of a whole batch of equal-length sequences stacked record-major as
(B*S) x d and runs all records and heads in one tape node; the two paths
compute the same function and are tested against each other.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ShapeError
from ..tensor import Tape, Tensor


def head_slice(tape: Tape, w: Tensor, head: int, head_dim: int) -> Tensor:
    """Per-head partition of a d x d projection matrix: columns h*dk..(h+1)*dk."""
    return tape.slice_cols(w, head * head_dim, (head + 1) * head_dim)


def self_attention(tape: Tape, x: Tensor, wq: Tensor, wk: Tensor, wv: Tensor,
                   head: int, n_heads: int,
                   weights_out: list | None = None) -> Tensor:
    """One head over one sequence: softmax(Q K^T / sqrt(dk)) V, n x head_dim."""
    d = x.cols
    if d % n_heads != 0:
        raise ShapeError(f"width {d} not divisible into {n_heads} heads")
    dk = d // n_heads
    if not 0 <= head < n_heads:
        raise ShapeError(f"head {head} outside [0, {n_heads})")
    q = tape.matmul(x, head_slice(tape, wq, head, dk))
    k = tape.matmul(x, head_slice(tape, wk, head, dk))
    v = tape.matmul(x, head_slice(tape, wv, head, dk))
    scores = tape.scale(tape.matmul(q, tape.transpose(k)), 1.0 / math.sqrt(dk))
    attn = tape.softmax_rows(scores)
    if weights_out is not None:
        weights_out.append(attn.data.copy())
    return tape.matmul(attn, v)


def multi_head(tape: Tape, x: Tensor, wq: Tensor, wk: Tensor, wv: Tensor,
               wo: Tensor, n_heads: int,
               weights_out: list | None = None) -> Tensor:
    """Concat of all heads times the output projection (pre-residual)."""
    heads = [self_attention(tape, x, wq, wk, wv, h, n_heads, weights_out)
             for h in range(n_heads)]
    return tape.matmul(tape.concat_cols(heads), wo)


def batched_attention(tape: Tape, q: Tensor, k: Tensor, v: Tensor,
                      n_heads: int, seq_len: int,
                      drop_rate: float = 0.0,
                      rng: np.random.Generator | None = None,
                      weights_out: list | None = None) -> Tensor:
    """All records and heads of a stacked batch in one fused tape node.

    q, k, v are (B*S) x d with records laid out contiguously. Optional
    inverted dropout on the attention weights (training only). Returns the
    concatenated head outputs, (B*S) x d, ready for the output projection.
    """
    total, d = q.shape
    if k.shape != (total, d) or v.shape != (total, d):
        raise ShapeError("q/k/v shape mismatch")
    if total % seq_len != 0:
        raise ShapeError(f"{total} rows do not stack into length-{seq_len} sequences")
    if d % n_heads != 0:
        raise ShapeError(f"width {d} not divisible into {n_heads} heads")
    b = total // seq_len
    dk = d // n_heads
    scale = 1.0 / math.sqrt(dk)

    def split(arr: np.ndarray) -> np.ndarray:  # (B*S, d) -> (B, H, S, dk)
        return arr.reshape(b, seq_len, n_heads, dk).transpose(0, 2, 1, 3)

    def join(arr: np.ndarray) -> np.ndarray:  # (B, H, S, dk) -> (B*S, d)
        return np.ascontiguousarray(arr.transpose(0, 2, 1, 3)).reshape(total, d)

    q4, k4, v4 = split(q.data), split(k.data), split(v.data)
    scores = (q4 @ k4.transpose(0, 1, 3, 2)) * scale
    scores -= scores.max(axis=-1, keepdims=True)
    e = np.exp(scores)
    attn = e / e.sum(axis=-1, keepdims=True)
    if weights_out is not None:
        weights_out.append(attn.copy())
    if drop_rate > 0.0:
        if rng is None:
            raise ShapeError("attention dropout needs an rng")
        mask = ((rng.random(attn.shape) >= drop_rate) / (1.0 - drop_rate)).astype(attn.dtype)
        attn_used = attn * mask
    else:
        mask = None
        attn_used = attn
    out = join(attn_used @ v4)

    def bwd(g):
        g4 = split(g)
        d_attn_used = g4 @ v4.transpose(0, 1, 3, 2)
        dv4 = attn_used.transpose(0, 1, 3, 2) @ g4
        d_attn = d_attn_used * mask if mask is not None else d_attn_used
        # softmax jacobian, rows of attn sum to 1
        tmp = (d_attn * attn).sum(axis=-1, keepdims=True)
        d_scores = attn * (d_attn - tmp)
        dq4 = (d_scores @ k4) * scale
        dk4 = (d_scores.transpose(0, 1, 3, 2) @ q4) * scale
        return join(dq4), join(dk4), join(dv4)

    return tape.register((q, k, v), out, bwd)
