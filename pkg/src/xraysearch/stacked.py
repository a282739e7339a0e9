"""Greedy layer-wise stack training, feature extraction, persistence.

Layers are trained one at a time: the first on raw pixel vectors, each
following layer on the hidden activations of the previous one. The
feature vector of an image is the deepest hidden activation. Model
files are little-endian binary with a versioned header and a CRC32
footer; round trips are bit-exact.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import kernels
from .autoencoder import AutoencoderLayer, TrainConfig, TrainReport, encode, train_layer
from .errors import CorruptModel, DimensionMismatch, InvalidArchitecture

MODEL_MAGIC = b"SAEM"
MODEL_VERSION = 1


@dataclass(frozen=True)
class StackedEncoder:
    """An ordered chain of trained layers; adjacent dimensions must link."""

    layers: tuple[AutoencoderLayer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise InvalidArchitecture("a stack needs at least one layer")
        for k in range(len(layers) - 1):
            if layers[k].p != layers[k + 1].n:
                raise InvalidArchitecture(
                    f"layer {k} produces {layers[k].p} features but layer {k + 1} "
                    f"expects {layers[k + 1].n}")
        object.__setattr__(self, "layers", layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].n

    @property
    def feature_dim(self) -> int:
        return self.layers[-1].p

    @property
    def architecture(self) -> str:
        """Descriptor string like ``1024/600/1024, 600/500/600``."""
        return ", ".join(f"{l.n}/{l.p}/{l.n}" for l in self.layers)


def _check_dims(layer_dims) -> list[int]:
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2:
        raise InvalidArchitecture(f"need at least 2 dimensions, got {dims}")
    if any(d < 1 for d in dims):
        raise InvalidArchitecture(f"dimensions must be >= 1, got {dims}")
    if any(b >= a for a, b in zip(dims, dims[1:])):
        raise InvalidArchitecture(
            f"dimensions must be strictly decreasing for compression, got {dims}")
    return dims


def train_stack(data, layer_dims, config: TrainConfig,
                per_layer_configs=None) -> tuple[StackedEncoder, list[TrainReport]]:
    """Greedy layer-wise training over a strictly decreasing dimension list.

    Layer k is trained with the shared config except its seed, which is
    config.rng_seed + k so each layer is independently reproducible.
    per_layer_configs, when given, overrides the config (seed included)
    layer by layer.
    """
    dims = _check_dims(layer_dims)
    if per_layer_configs is not None and len(per_layer_configs) != len(dims) - 1:
        raise InvalidArchitecture(
            f"got {len(per_layer_configs)} per-layer configs for {len(dims) - 1} layers")
    latents = np.ascontiguousarray(np.atleast_2d(np.asarray(data, dtype=np.float64)))
    if latents.shape[1] != dims[0]:
        raise DimensionMismatch(
            f"data vectors have length {latents.shape[1]}, expected {dims[0]}")
    layers = []
    reports = []
    for k, (n, p) in enumerate(zip(dims, dims[1:])):
        if per_layer_configs is not None:
            cfg = per_layer_configs[k]
        else:
            cfg = replace(config, rng_seed=config.rng_seed + k)
        layer, report = train_layer(latents, n, p, cfg)
        layers.append(layer)
        reports.append(report)
        latents = kernels.encode_batch(latents, layer.w, layer.b_enc)
    return StackedEncoder(tuple(layers)), reports


def encode_features(stack: StackedEncoder, x) -> np.ndarray:
    """Deepest hidden activation for one pixel vector."""
    h = np.asarray(x, dtype=np.float64)
    for layer in stack.layers:
        h = encode(layer, h)
    return h


def encode_features_batch(stack: StackedEncoder, xs) -> np.ndarray:
    """Deepest hidden activations for a (count, input_dim) matrix."""
    h = np.ascontiguousarray(np.atleast_2d(np.asarray(xs, dtype=np.float64)))
    if h.shape[1] != stack.input_dim:
        raise DimensionMismatch(
            f"vectors have length {h.shape[1]}, stack expects {stack.input_dim}")
    for layer in stack.layers:
        h = kernels.encode_batch(h, layer.w, layer.b_enc)
    return h


def compression_percent(stack: StackedEncoder) -> float:
    """Dimensionality reduction 100 * (1 - feature_dim / input_dim)."""
    return 100.0 * (1.0 - stack.feature_dim / stack.input_dim)


def full_unroll_rms(stack: StackedEncoder, data) -> float:
    """RMS error of the full round trip: encode through every layer, decode back.

    A second reconstruction figure next to the first-layer convention of
    autoencoder.rms_reconstruction_error.
    """
    x = np.ascontiguousarray(np.atleast_2d(np.asarray(data, dtype=np.float64)))
    if x.shape[1] != stack.input_dim:
        raise DimensionMismatch(
            f"vectors have length {x.shape[1]}, stack expects {stack.input_dim}")
    h = x
    for layer in stack.layers:
        h = kernels.encode_batch(h, layer.w, layer.b_enc)
    for layer in reversed(stack.layers):
        h = kernels.decode_batch(h, layer.w, layer.b_dec)
    return float(np.sqrt(np.mean((h - x) ** 2)))


def save_model(stack: StackedEncoder, path) -> None:
    """Write the stack: magic, version, layer count, per-layer arrays, CRC32."""
    buf = bytearray()
    buf += MODEL_MAGIC
    buf += struct.pack("<II", MODEL_VERSION, len(stack.layers))
    for layer in stack.layers:
        buf += struct.pack("<II", layer.n, layer.p)
        buf += layer.w.astype("<f8").tobytes()
        buf += layer.b_enc.astype("<f8").tobytes()
        buf += layer.b_dec.astype("<f8").tobytes()
    buf += struct.pack("<I", zlib.crc32(bytes(buf)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(buf))


def _take(data: bytes, offset: int, size: int, what: str) -> tuple[bytes, int]:
    if offset + size > len(data):
        raise CorruptModel(f"truncated model file: unexpected end in {what}")
    return data[offset:offset + size], offset + size


def load_model(path) -> StackedEncoder:
    """Read a model file back; bit-exact inverse of save_model."""
    data = Path(path).read_bytes()
    if len(data) < 16:
        raise CorruptModel(f"truncated model file: {len(data)} bytes")
    if data[:4] != MODEL_MAGIC:
        raise CorruptModel(f"bad magic {data[:4]!r}, expected {MODEL_MAGIC!r}")
    (stored_crc,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(data[:-4]) & 0xFFFFFFFF != stored_crc:
        raise CorruptModel("checksum mismatch")
    body = data[:-4]
    offset = 4
    chunk, offset = _take(body, offset, 8, "header")
    version, layer_count = struct.unpack("<II", chunk)
    if version != MODEL_VERSION:
        raise CorruptModel(f"unsupported model version {version}")
    layers = []
    for k in range(layer_count):
        chunk, offset = _take(body, offset, 8, f"layer {k} header")
        n, p = struct.unpack("<II", chunk)
        if n < 1 or p < 1:
            raise CorruptModel(f"layer {k}: bad dimensions {n}/{p}")
        chunk, offset = _take(body, offset, 8 * p * n, f"layer {k} weights")
        w = np.frombuffer(chunk, dtype="<f8").reshape(p, n).copy()
        chunk, offset = _take(body, offset, 8 * p, f"layer {k} encoder bias")
        b_enc = np.frombuffer(chunk, dtype="<f8").copy()
        chunk, offset = _take(body, offset, 8 * n, f"layer {k} decoder bias")
        b_dec = np.frombuffer(chunk, dtype="<f8").copy()
        layers.append(AutoencoderLayer(w, b_enc, b_dec))
    if offset != len(body):
        raise CorruptModel(f"{len(body) - offset} trailing bytes after last layer")
    return StackedEncoder(tuple(layers))
