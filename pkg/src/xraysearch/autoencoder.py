"""Single tied-weight autoencoder: forward pass, exact gradients, SGD.

One layer maps an n-vector to a p-vector and back with a single shared
weight matrix: the encoder computes sigmoid(W x + b_enc) and the decoder
computes sigmoid(W^T h + b_dec). The decoder matrix is never stored; it
is the transpose by construction. Training minimizes the mean
reconstruction cross-entropy over minibatches with plain SGD.

All arithmetic is float64. A trained layer is immutable by convention
and safe to share across threads; training itself is a single logical
sequence.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DimensionMismatch, InvalidDimensions


@dataclass(frozen=True)
class AutoencoderLayer:
    """One n/p/n tied-weight layer.

    w is the (p, n) encoder matrix; b_enc and b_dec are the hidden and
    output biases. The decoder weight matrix is definitionally w.T.
    """

    w: np.ndarray
    b_enc: np.ndarray
    b_dec: np.ndarray

    def __post_init__(self):
        w = np.ascontiguousarray(self.w, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] < 1 or w.shape[1] < 1:
            raise InvalidDimensions(f"weight matrix must be 2-D and nonempty, got shape {w.shape}")
        b_enc = np.ascontiguousarray(self.b_enc, dtype=np.float64)
        b_dec = np.ascontiguousarray(self.b_dec, dtype=np.float64)
        if b_enc.shape != (w.shape[0],):
            raise DimensionMismatch(
                f"encoder bias shape {b_enc.shape} does not match hidden size {w.shape[0]}")
        if b_dec.shape != (w.shape[1],):
            raise DimensionMismatch(
                f"decoder bias shape {b_dec.shape} does not match input size {w.shape[1]}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "b_enc", b_enc)
        object.__setattr__(self, "b_dec", b_dec)

    @property
    def n(self) -> int:
        """Input (and output) dimension."""
        return self.w.shape[1]

    @property
    def p(self) -> int:
        """Hidden dimension."""
        return self.w.shape[0]


@dataclass(frozen=True)
class TrainConfig:
    """SGD hyperparameters; the defaults are the reference settings."""

    epochs: int = 30
    learning_rate: float = 0.1
    batch_size: int = 20
    rng_seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not self.learning_rate > 0:
            raise ValueError(f"learning rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")


@dataclass(frozen=True)
class TrainReport:
    """Per-epoch mean training cross-entropy plus summary figures."""

    epoch_losses: list[float] = field(default_factory=list)
    final_train_rms: float = 0.0
    wall_seconds: float = 0.0


def init_layer(n: int, p: int, rng_seed) -> AutoencoderLayer:
    """Fresh layer with uniform weights in +-4*sqrt(6/(n+p)) and zero biases.

    rng_seed may be an integer seed or a numpy Generator; the draw is
    deterministic in either.
    """
    if n < 1 or p < 1:
        raise InvalidDimensions(f"dimensions must be >= 1, got n={n}, p={p}")
    rng = np.random.default_rng(rng_seed)
    limit = 4.0 * np.sqrt(6.0 / (n + p))
    w = rng.uniform(-limit, limit, size=(p, n))
    return AutoencoderLayer(w, np.zeros(p), np.zeros(n))


def encode(layer: AutoencoderLayer, x) -> np.ndarray:
    """Hidden activation sigmoid(W x + b_enc) for one input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (layer.n,):
        raise DimensionMismatch(f"expected input of shape ({layer.n},), got {x.shape}")
    return kernels.sigmoid(layer.w @ x + layer.b_enc)


def decode(layer: AutoencoderLayer, h) -> np.ndarray:
    """Reconstruction sigmoid(W^T h + b_dec) for one hidden vector."""
    h = np.asarray(h, dtype=np.float64)
    if h.shape != (layer.p,):
        raise DimensionMismatch(f"expected hidden vector of shape ({layer.p},), got {h.shape}")
    return kernels.sigmoid(layer.w.T @ h + layer.b_dec)


def cross_entropy(x, xhat) -> float:
    """Reconstruction cross-entropy -sum(x ln xhat + (1-x) ln(1-xhat)).

    Reconstructions are clamped to [1e-12, 1 - 1e-12] before the logs so
    saturated outputs cannot produce log(0).
    """
    x = np.asarray(x, dtype=np.float64)
    xhat = np.asarray(xhat, dtype=np.float64)
    if x.shape != xhat.shape:
        raise DimensionMismatch(f"shape mismatch: {x.shape} vs {xhat.shape}")
    xc = np.clip(xhat, kernels.LOG_EPS, 1.0 - kernels.LOG_EPS)
    return -float(np.sum(x * np.log(xc) + (1.0 - x) * np.log1p(-xc)))


def gradients(layer: AutoencoderLayer, batch):
    """Exact gradients of the mean batch cross-entropy.

    Returns (dw, db_enc, db_dec, mean_loss). Because the weights are
    tied, dw accumulates both the encoder term and the transpose of the
    decoder term; with sigmoid outputs under cross-entropy the output
    delta reduces to (xhat - x).
    """
    xb = np.ascontiguousarray(np.atleast_2d(np.asarray(batch, dtype=np.float64)))
    if xb.shape[0] < 1:
        raise DimensionMismatch("batch must be non-empty")
    if xb.shape[1] != layer.n:
        raise DimensionMismatch(
            f"batch vectors have length {xb.shape[1]}, layer expects {layer.n}")
    return kernels.batch_gradients(xb, layer.w, layer.b_enc, layer.b_dec)


def train_layer(data, n: int, p: int, config: TrainConfig) -> tuple[AutoencoderLayer, TrainReport]:
    """Train one layer with minibatch SGD.

    Runs config.epochs passes over the data; each epoch is deterministically
    reshuffled from the seeded generator when shuffling is on, and the
    final partial batch is used at its actual size. Reported per-epoch
    losses are the mean per-sample cross-entropy, each batch evaluated
    just before its update.
    """
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(data, dtype=np.float64)))
    if x.shape[0] < 1:
        raise DimensionMismatch("training data must be non-empty")
    if x.shape[1] != n:
        raise DimensionMismatch(f"data vectors have length {x.shape[1]}, expected {n}")
    rng = np.random.default_rng(config.rng_seed)
    start_layer = init_layer(n, p, rng)
    w = start_layer.w.copy()
    b_enc = start_layer.b_enc.copy()
    b_dec = start_layer.b_dec.copy()
    order = np.arange(x.shape[0])
    losses = []
    t0 = time.perf_counter()
    for _ in range(config.epochs):
        if config.shuffle:
            order = rng.permutation(x.shape[0])
        loss = kernels.sgd_epoch(x, order, w, b_enc, b_dec,
                                 config.batch_size, config.learning_rate)
        losses.append(float(loss))
    layer = AutoencoderLayer(w, b_enc, b_dec)
    report = TrainReport(losses, rms_reconstruction_error(layer, x),
                         time.perf_counter() - t0)
    return layer, report


def rms_reconstruction_error(model, data) -> float:
    """Root mean squared reconstruction error over all vectors and components.

    For a stacked model this reconstructs through the first layer only
    (the stack reporting convention); see stacked.full_unroll_rms for
    the all-layers round trip.
    """
    layer = model.layers[0] if hasattr(model, "layers") else model
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(data, dtype=np.float64)))
    if x.shape[0] < 1:
        raise DimensionMismatch("data must be non-empty")
    if x.shape[1] != layer.n:
        raise DimensionMismatch(
            f"data vectors have length {x.shape[1]}, layer expects {layer.n}")
    h = kernels.encode_batch(x, layer.w, layer.b_enc)
    xhat = kernels.decode_batch(h, layer.w, layer.b_dec)
    return float(np.sqrt(np.mean((xhat - x) ** 2)))
