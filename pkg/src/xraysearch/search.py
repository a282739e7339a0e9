"""Exact k-nearest-neighbor retrieval over stored feature vectors.

The index is a plain matrix scanned in full for every query: exact answers,
no approximation structures. Comparisons run on squared distances and ties
break on record_id so rankings are deterministic. Index files are
little-endian binary with a CRC32 footer and round-trip exactly.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import kernels
from .errors import (CorruptIndex, DimensionMismatch, DuplicateId, EmptyIndex,
                     MalformedCode)
from .irma import IrmaCode

INDEX_MAGIC = b"SAEI"
INDEX_VERSION = 1
CODE_TEXT_LENGTH = 16


@dataclass(frozen=True)
class FeatureRecord:
    record_id: str
    code: IrmaCode
    features: np.ndarray
    binarized: bool = False

    def __post_init__(self):
        features = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        if features.ndim != 1:
            raise DimensionMismatch(
                f"features must be a vector, got shape {features.shape}")
        object.__setattr__(self, "features", features)


class Hit(NamedTuple):
    record_id: str
    code: IrmaCode
    distance: float


@dataclass(frozen=True)
class QueryResult:
    hits: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.hits)

    def __iter__(self):
        return iter(self.hits)

    def __getitem__(self, i):
        return self.hits[i]


@dataclass(frozen=True)
class FeatureIndex:
    """Immutable snapshot of an encoded corpus: ids, codes, feature matrix."""

    ids: tuple
    codes: tuple
    matrix: np.ndarray
    binarized: bool = False

    def __len__(self):
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


def build_index(records) -> FeatureIndex:
    """Assemble validated FeatureRecords into a scannable index."""
    records = list(records)
    if not records:
        raise EmptyIndex("cannot build an index from zero records")
    dim = records[0].features.shape[0]
    binarized = records[0].binarized
    seen = set()
    for record in records:
        if record.features.shape[0] != dim:
            raise DimensionMismatch(
                f"record {record.record_id!r} has dimension "
                f"{record.features.shape[0]}, index requires {dim}")
        if record.record_id in seen:
            raise DuplicateId(f"duplicate record_id {record.record_id!r}")
        seen.add(record.record_id)
        if record.binarized != binarized:
            raise ValueError(
                f"record {record.record_id!r} mixes binarized and real-valued "
                "features in one index")
    matrix = np.ascontiguousarray(
        np.stack([r.features for r in records]), dtype=np.float64)
    if matrix.size and (matrix.min() < 0.0 or matrix.max() > 1.0):
        raise ValueError("feature values must lie in [0,1]")
    return FeatureIndex(ids=tuple(r.record_id for r in records),
                        codes=tuple(r.code for r in records),
                        matrix=matrix, binarized=binarized)


def euclidean(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatch(f"vector shapes differ: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def knn(index: FeatureIndex, query, k: int) -> QueryResult:
    """Exact k nearest records by full scan, ties broken by record_id."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(index) == 0:
        raise EmptyIndex("cannot query an empty index")
    q = np.ascontiguousarray(np.asarray(query, dtype=np.float64))
    if q.ndim != 1 or q.shape[0] != index.dim:
        raise DimensionMismatch(
            f"query has shape {q.shape}, index dimension is {index.dim}")
    d2 = kernels.squared_distances(index.matrix, q)
    # lexsort treats the last key as primary: distance first, then id.
    order = np.lexsort((np.array(index.ids), d2))[:min(k, len(index))]
    hits = tuple(Hit(index.ids[i], index.codes[i], float(np.sqrt(max(d2[i], 0.0))))
                 for i in order)
    return QueryResult(hits)


def binarize(features, threshold: float = 0.5) -> np.ndarray:
    """Threshold each component: >= threshold maps to 1.0, else 0.0."""
    features = np.asarray(features, dtype=np.float64)
    return np.where(features >= threshold, 1.0, 0.0)


def save_index(index: FeatureIndex, path) -> None:
    """Write the index: header, per-record id/code/features, CRC32 footer."""
    buf = bytearray()
    buf += INDEX_MAGIC
    buf += struct.pack("<IIIB", INDEX_VERSION, len(index), index.dim,
                       1 if index.binarized else 0)
    for i in range(len(index)):
        id_bytes = index.ids[i].encode("utf-8")
        if len(id_bytes) > 0xFFFF:
            raise ValueError(f"record_id too long to store: {index.ids[i]!r}")
        code_bytes = str(index.codes[i]).encode("ascii")
        assert len(code_bytes) == CODE_TEXT_LENGTH
        buf += struct.pack("<H", len(id_bytes))
        buf += id_bytes
        buf += code_bytes
        buf += index.matrix[i].astype("<f8").tobytes()
    buf += struct.pack("<I", zlib.crc32(bytes(buf)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(buf))


def _take(data: bytes, offset: int, size: int, what: str) -> tuple[bytes, int]:
    if offset + size > len(data):
        raise CorruptIndex(f"truncated index file: unexpected end in {what}")
    return data[offset:offset + size], offset + size


def load_index(path) -> FeatureIndex:
    """Read an index file back; exact inverse of save_index."""
    data = Path(path).read_bytes()
    if len(data) < 21:
        raise CorruptIndex(f"truncated index file: {len(data)} bytes")
    if data[:4] != INDEX_MAGIC:
        raise CorruptIndex(f"bad magic {data[:4]!r}, expected {INDEX_MAGIC!r}")
    (stored_crc,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(data[:-4]) & 0xFFFFFFFF != stored_crc:
        raise CorruptIndex("checksum mismatch")
    body = data[:-4]
    offset = 4
    chunk, offset = _take(body, offset, 13, "header")
    version, count, dim, bin_flag = struct.unpack("<IIIB", chunk)
    if version != INDEX_VERSION:
        raise CorruptIndex(f"unsupported index version {version}")
    if count < 1 or dim < 1:
        raise CorruptIndex(f"bad record count {count} or dimension {dim}")
    ids = []
    codes = []
    matrix = np.empty((count, dim), dtype=np.float64)
    for i in range(count):
        chunk, offset = _take(body, offset, 2, f"record {i} id length")
        (id_len,) = struct.unpack("<H", chunk)
        chunk, offset = _take(body, offset, id_len, f"record {i} id")
        try:
            ids.append(chunk.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise CorruptIndex(f"record {i}: id is not UTF-8") from exc
        chunk, offset = _take(body, offset, CODE_TEXT_LENGTH, f"record {i} code")
        try:
            codes.append(IrmaCode.parse(chunk.decode("ascii")))
        except (UnicodeDecodeError, MalformedCode) as exc:
            raise CorruptIndex(f"record {i}: bad stored code") from exc
        chunk, offset = _take(body, offset, 8 * dim, f"record {i} features")
        matrix[i] = np.frombuffer(chunk, dtype="<f8")
    if offset != len(body):
        raise CorruptIndex(f"{len(body) - offset} trailing bytes after last record")
    if len(set(ids)) != count:
        raise CorruptIndex("duplicate record ids in stored index")
    return FeatureIndex(ids=tuple(ids), codes=tuple(codes), matrix=matrix,
                        binarized=bool(bin_flag))
