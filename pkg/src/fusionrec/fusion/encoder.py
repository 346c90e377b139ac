"""Encoder stack: multi-head self-attention + feed-forward sublayers.

Each sublayer is wrapped post-norm: x = LayerNorm(x + Sublayer(x)). Dropout
(training only) hits the attention weights and the feed-forward output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError
from ..tensor import Tape, Tensor
from .attention import batched_attention, multi_head


@dataclass(frozen=True)
class EncoderConfig:
    d: int = 768
    n_layers: int = 2
    n_heads: int = 8
    ffn_dim: int = 1024
    dropout: float = 0.1

    def __post_init__(self):
        if self.d <= 0 or self.n_heads <= 0 or self.ffn_dim <= 0:
            raise ConfigError("encoder dimensions must be positive")
        if self.n_layers < 0:
            raise ConfigError("n_layers must be >= 0")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout {self.dropout} outside [0, 1)")
        if self.d % self.n_heads != 0:
            raise ConfigError(
                f"n_heads * head_dim must equal d: {self.d} % {self.n_heads} != 0")

    @property
    def head_dim(self) -> int:
        return self.d // self.n_heads


@dataclass
class EncoderLayerParams:
    wq: Tensor
    wk: Tensor
    wv: Tensor
    wo: Tensor
    ff_w1: Tensor
    ff_b1: Tensor
    ff_w2: Tensor
    ff_b2: Tensor
    ln1_gain: Tensor
    ln1_bias: Tensor
    ln2_gain: Tensor
    ln2_bias: Tensor

    def params(self) -> list[Tensor]:
        return [self.wq, self.wk, self.wv, self.wo, self.ff_w1, self.ff_b1,
                self.ff_w2, self.ff_b2, self.ln1_gain, self.ln1_bias,
                self.ln2_gain, self.ln2_bias]


def make_layer(index: int, cfg: EncoderConfig, rng: np.random.Generator,
               dtype, scale: float = 0.02) -> EncoderLayerParams:
    def w(name, rows, cols, zero=False, one=False):
        if one:
            data = np.ones((rows, cols))
        elif zero:
            data = np.zeros((rows, cols))
        else:
            data = rng.uniform(-scale, scale, (rows, cols))
        return Tensor(data.astype(dtype), requires_grad=True,
                      name=f"encoder.{index}.{name}")

    d, f = cfg.d, cfg.ffn_dim
    return EncoderLayerParams(
        wq=w("wq", d, d), wk=w("wk", d, d), wv=w("wv", d, d), wo=w("wo", d, d),
        ff_w1=w("ff_w1", d, f), ff_b1=w("ff_b1", 1, f, zero=True),
        ff_w2=w("ff_w2", f, d), ff_b2=w("ff_b2", 1, d, zero=True),
        ln1_gain=w("ln1_gain", 1, d, one=True), ln1_bias=w("ln1_bias", 1, d, zero=True),
        ln2_gain=w("ln2_gain", 1, d, one=True), ln2_bias=w("ln2_bias", 1, d, zero=True),
    )


def layer_forward(tape: Tape, x: Tensor, layer: EncoderLayerParams,
                  cfg: EncoderConfig, seq_len: int, train: bool = False,
                  rng: np.random.Generator | None = None, fused: bool = True,
                  weights_out: list | None = None) -> Tensor:
    drop = cfg.dropout if train else 0.0
    if fused:
        q = tape.matmul(x, layer.wq)
        k = tape.matmul(x, layer.wk)
        v = tape.matmul(x, layer.wv)
        core = batched_attention(tape, q, k, v, cfg.n_heads, seq_len,
                                 drop_rate=drop, rng=rng, weights_out=weights_out)
        attn = tape.matmul(core, layer.wo)
    else:
        # reference path: per-head ops over a single sequence; no dropout
        attn = multi_head(tape, x, layer.wq, layer.wk, layer.wv, layer.wo,
                          cfg.n_heads, weights_out=weights_out)
    x = tape.layer_norm(tape.add(x, attn), layer.ln1_gain, layer.ln1_bias)
    h = tape.relu(tape.add(tape.matmul(x, layer.ff_w1), layer.ff_b1))
    ffn = tape.add(tape.matmul(h, layer.ff_w2), layer.ff_b2)
    if drop > 0.0:
        ffn = tape.dropout(ffn, drop, rng)
    return tape.layer_norm(tape.add(x, ffn), layer.ln2_gain, layer.ln2_bias)


def encoder_forward(tape: Tape, seq: Tensor, layers: list[EncoderLayerParams],
                    cfg: EncoderConfig, seq_len: int, train: bool = False,
                    rng: np.random.Generator | None = None, fused: bool = True,
                    weights_out: list | None = None) -> Tensor:
    """Apply every layer to a stacked (B*S) x d sequence batch (B may be 1)."""
    x = seq
    for layer in layers:
        x = layer_forward(tape, x, layer, cfg, seq_len, train=train, rng=rng,
                          fused=fused, weights_out=weights_out)
        x.assert_finite("encoder activations")
    return x
