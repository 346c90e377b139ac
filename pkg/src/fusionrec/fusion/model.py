"""The fusion model: 12-token sequence, encoder, and the rating head.

A record becomes [CLS, ten feature tokens, SEP] + position encoding; the
encoder mixes the tokens; the CLS row feeds a 5-way softmax over rating
classes. The scalar prediction is the probability-weighted expectation of
the classes (argmax is available for ablation).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError, DataError, ShapeError
from ..features.embedder import FeatureEmbedder, FeatureTables
from ..features.store import EmbeddingStore
from ..tensor import Tape, Tensor, load_params, save_params
from .encoder import EncoderConfig, EncoderLayerParams, encoder_forward, make_layer
from .positional import positional_encoding

SEQ_LEN = 12  # CLS + 10 feature slots + SEP
N_CLASSES = 5


@dataclass(frozen=True)
class ModelConfig:
    d: int = 768
    up_hidden: int = 256
    id_dim: int = 64
    zip_buckets: int = 1000
    n_layers: int = 2
    n_heads: int = 8
    ffn_dim: int = 1024
    dropout: float = 0.1
    mode: str = "cross"  # poster slot is masked to the missing-token in "single"
    init_seed: int = 1234
    dtype: str = "float32"

    def encoder(self) -> EncoderConfig:
        return EncoderConfig(d=self.d, n_layers=self.n_layers,
                             n_heads=self.n_heads, ffn_dim=self.ffn_dim,
                             dropout=self.dropout)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ClassifierHead:
    w: Tensor  # d x 5
    b: Tensor  # 1 x 5

    def params(self) -> list[Tensor]:
        return [self.w, self.b]


def classify(tape: Tape, h_cls: Tensor, head: ClassifierHead) -> Tensor:
    """Softmax(W h + b) over the five rating classes, one row per record."""
    if h_cls.cols != head.w.rows:
        raise ShapeError(f"classifier expects width {head.w.rows}, got {h_cls.cols}")
    logits = tape.add(tape.matmul(h_cls, head.w), head.b)
    logits.assert_finite("classifier logits")
    return tape.softmax_rows(logits)


def predict_rating(probs: np.ndarray, argmax: bool = False) -> np.ndarray:
    """Scalar rating in [1, 5] per row: class expectation, or argmax for ablation."""
    probs = np.asarray(probs)
    if probs.ndim == 1:
        probs = probs[None, :]
    if probs.shape[1] != N_CLASSES or np.any(probs < 0):
        raise ShapeError("predict_rating needs rows of 5 non-negative probabilities")
    if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-5):
        raise ShapeError("probability rows must sum to 1")
    if argmax:
        return (probs.argmax(axis=1) + 1).astype(np.float64)
    return probs @ np.arange(1, N_CLASSES + 1, dtype=np.float64)


def extract_cls(tape: Tape, h: Tensor) -> Tensor:
    """Row 0 of a single encoded 12 x d sequence."""
    if h.rows != SEQ_LEN:
        raise ShapeError(f"expected a {SEQ_LEN}-row sequence, got {h.rows}")
    return tape.slice_rows(h, 0, 1)


class FusionModel:
    """All trainable state plus the forward passes (batched and reference)."""

    def __init__(self, tables: FeatureTables,
                 stores: dict[str, EmbeddingStore | None],
                 config: ModelConfig | None = None):
        self.config = config or ModelConfig()
        cfg = self.config
        dtype = np.dtype(cfg.dtype)
        if dtype not in (np.dtype(np.float32), np.dtype(np.float64)):
            raise ConfigError(f"dtype must be float32 or float64, got {cfg.dtype}")
        self.dtype = dtype
        self.tables = tables
        self.stores = stores
        self.encoder_cfg = cfg.encoder()

        rng = np.random.default_rng(cfg.init_seed)
        self.embedder = FeatureEmbedder(
            tables, stores, d=cfg.d, up_hidden=cfg.up_hidden, id_dim=cfg.id_dim,
            mode=cfg.mode, init_seed=int(rng.integers(2**31)), dtype=dtype)
        self.cls_token = Tensor(
            rng.uniform(-0.02, 0.02, (1, cfg.d)).astype(dtype),
            requires_grad=True, name="seq.cls")
        self.sep_token = Tensor(
            rng.uniform(-0.02, 0.02, (1, cfg.d)).astype(dtype),
            requires_grad=True, name="seq.sep")
        self.layers = [make_layer(i, self.encoder_cfg, rng, dtype)
                       for i in range(cfg.n_layers)]
        self.head = ClassifierHead(
            w=Tensor(rng.uniform(-0.02, 0.02, (cfg.d, N_CLASSES)).astype(dtype),
                     requires_grad=True, name="head.w"),
            b=Tensor(np.zeros((1, N_CLASSES), dtype=dtype),
                     requires_grad=True, name="head.b"))
        self.positions = positional_encoding(SEQ_LEN, cfg.d).astype(dtype)
        self._pos_tiles: dict[int, np.ndarray] = {}

    # ---- parameters ------------------------------------------------------

    def params(self) -> dict[str, Tensor]:
        out = dict(self.embedder.params())
        out[self.cls_token.name] = self.cls_token
        out[self.sep_token.name] = self.sep_token
        for layer in self.layers:
            for p in layer.params():
                out[p.name] = p
        for p in self.head.params():
            out[p.name] = p
        return out

    def param_list(self) -> list[Tensor]:
        return list(self.params().values())

    # ---- forward ---------------------------------------------------------

    def build_sequence(self, tape: Tape, tokens: list[Tensor],
                       positions_enabled: bool = True) -> Tensor:
        """Stack [CLS; tokens; SEP] of one record and add position encoding."""
        if len(tokens) != 10:
            raise ShapeError(f"need exactly 10 feature tokens, got {len(tokens)}")
        if any(t.rows != 1 for t in tokens):
            raise ShapeError("single-record build_sequence needs 1-row tokens")
        seq = tape.interleave_rows([self.cls_token] + list(tokens) + [self.sep_token])
        if positions_enabled:
            seq = tape.add(seq, Tensor(self.positions))
        return seq

    def _batch_sequence(self, tape: Tape, tokens: list[Tensor], n: int,
                        positions_enabled: bool) -> Tensor:
        ones = Tensor(np.ones((n, 1), dtype=self.dtype))
        cls_rows = tape.matmul(ones, self.cls_token)
        sep_rows = tape.matmul(ones, self.sep_token)
        seq = tape.interleave_rows([cls_rows] + tokens + [sep_rows])
        if positions_enabled:
            tile = self._pos_tiles.get(n)
            if tile is None:
                tile = np.tile(self.positions, (n, 1))
                self._pos_tiles[n] = tile
            seq = tape.add(seq, Tensor(tile))
        return seq

    def forward_batch(self, tape: Tape, user_ids: np.ndarray,
                      movie_ids: np.ndarray, train: bool = False,
                      rng: np.random.Generator | None = None,
                      positions_enabled: bool = True) -> Tensor:
        """Probabilities (B x 5) for a batch, on the fused attention path."""
        user_ids = np.asarray(user_ids)
        movie_ids = np.asarray(movie_ids)
        tokens = self.embedder.slot_tokens(tape, user_ids, movie_ids)
        seq = self._batch_sequence(tape, tokens, len(user_ids), positions_enabled)
        h = encoder_forward(tape, seq, self.layers, self.encoder_cfg, SEQ_LEN,
                            train=train, rng=rng, fused=True)
        h_cls = tape.take_every(h, SEQ_LEN, 0)
        return classify(tape, h_cls, self.head)

    def forward_single(self, tape: Tape, user_id: int, movie_id: int,
                       positions_enabled: bool = True,
                       weights_out: list | None = None) -> Tensor:
        """Reference path for one record: per-head attention ops, no dropout."""
        tokens = self.embedder.slot_tokens(
            tape, np.array([user_id]), np.array([movie_id]))
        return self.forward_tokens(tape, tokens, positions_enabled, weights_out)

    def forward_tokens(self, tape: Tape, tokens: list[Tensor],
                       positions_enabled: bool = True,
                       weights_out: list | None = None) -> Tensor:
        """Single-record forward from externally supplied tokens (test hook)."""
        seq = self.build_sequence(tape, tokens, positions_enabled)
        h = encoder_forward(tape, seq, self.layers, self.encoder_cfg, SEQ_LEN,
                            fused=False, weights_out=weights_out)
        h_cls = extract_cls(tape, h)
        return classify(tape, h_cls, self.head)

    def predict(self, user_ids: np.ndarray, movie_ids: np.ndarray,
                argmax: bool = False) -> np.ndarray:
        """Expected ratings for a batch, forward-only."""
        probs = self.forward_batch(Tape(record=False), user_ids, movie_ids)
        return predict_rating(probs.data, argmax=argmax)

    # ---- checkpointing ---------------------------------------------------

    def save(self, path: str | Path) -> None:
        save_params(path, {name: t.data for name, t in self.params().items()})

    def load(self, path: str | Path) -> None:
        loaded = load_params(path)
        params = self.params()
        if list(loaded) != list(params):
            raise DataError(
                f"checkpoint parameter set does not match the model: "
                f"{len(loaded)} stored vs {len(params)} expected")
        for name, t in params.items():
            if loaded[name].shape != t.data.shape:
                raise DataError(f"checkpoint shape mismatch for '{name}': "
                                f"{loaded[name].shape} vs {t.data.shape}")
            t.data[...] = loaded[name].astype(self.dtype)
