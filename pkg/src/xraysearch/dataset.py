"""Corpus ingest: manifests, image preprocessing, synthetic corpus generation.

Every image becomes a length-1024 vector: luminance conversion, box-filter
resize to 32x32, division by the maximum representable intensity, row-major
flatten. The synthetic generator draws one parametric shape per class so
desk-scale corpora have real cluster structure.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import kernels
from .errors import (DecodeError, DegenerateImage, MalformedCode,
                     MalformedManifest)
from .irma import IrmaCode

MANIFEST_HEADER = ["record_id", "image_path", "irma_code", "split"]
SPLITS = ("train", "test")

# Rec. 601 luma weights for color conversion.
LUMA_R, LUMA_G, LUMA_B = 0.299, 0.587, 0.114

VECTOR_SIDE = 32
VECTOR_LENGTH = VECTOR_SIDE * VECTOR_SIDE


@dataclass(frozen=True)
class ManifestRecord:
    record_id: str
    image_path: Path
    code: IrmaCode
    split: str


@dataclass(frozen=True)
class CorpusStats:
    """Per-split histogram of full code strings."""

    counts: dict

    def count(self, split: str, code: str) -> int:
        return self.counts.get(split, {}).get(code, 0)


def load_manifest(path) -> list[ManifestRecord]:
    """Read and validate a manifest CSV.

    Image paths are resolved against the manifest's directory so a corpus
    can be moved as a unit.
    """
    path = Path(path)
    base = path.parent
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != MANIFEST_HEADER:
        got = rows[0] if rows else []
        raise MalformedManifest(
            f"{path}:1: bad header {got!r}, expected {MANIFEST_HEADER!r}")
    records = []
    seen = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise MalformedManifest(
                f"{path}:{lineno}: expected 4 fields, got {len(row)}")
        record_id, image_path, code_text, split = row
        if not record_id:
            raise MalformedManifest(f"{path}:{lineno}: empty record_id")
        if record_id in seen:
            raise MalformedManifest(
                f"{path}:{lineno}: duplicate record_id {record_id!r} "
                f"(first seen on line {seen[record_id]})")
        seen[record_id] = lineno
        if split not in SPLITS:
            raise MalformedManifest(
                f"{path}:{lineno}: unknown split {split!r}, expected one of {SPLITS}")
        try:
            code = IrmaCode.parse(code_text)
        except MalformedCode as exc:
            raise MalformedManifest(
                f"{path}:{lineno}: bad code {code_text!r}: {exc}") from exc
        resolved = Path(image_path)
        if not resolved.is_absolute():
            resolved = base / resolved
        records.append(ManifestRecord(record_id, resolved, code, split))
    return records


def split_records(records, split: str) -> list[ManifestRecord]:
    return [r for r in records if r.split == split]


def decode_image(path) -> np.ndarray:
    """Decode an image file to a 2D grayscale array with values in [0,1]."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            if im.mode == "1":
                im = im.convert("L")
            elif im.mode not in ("L", "LA", "I", "I;16", "RGB", "RGBA"):
                im = im.convert("RGB")
            mode = im.mode
            arr = np.asarray(im, dtype=np.float64)
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, ValueError, SyntaxError) as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    if arr.ndim == 2:
        peak = 65535.0 if mode in ("I", "I;16") else 255.0
        gray = arr / peak
    elif arr.ndim == 3:
        # Alpha, if present, is ignored: retrieval compares luminance only.
        r, g, b = arr[..., 0], arr[..., 1], arr[..., 2]
        lum = LUMA_R * r + LUMA_G * g + LUMA_B * b
        # The weights sum to 1 only up to rounding; keep equal-channel
        # pixels exact by taking the channel value directly.
        gray = np.where((r == g) & (g == b), r, lum) / 255.0
    else:
        raise DecodeError(f"cannot decode {path}: unsupported layout {arr.shape}")
    if gray.ndim != 2 or gray.shape[0] == 0 or gray.shape[1] == 0:
        raise DegenerateImage(f"{path}: zero-area image {gray.shape}")
    return gray


def preprocess(image) -> np.ndarray:
    """Reduce a 2D grayscale array in [0,1] to the length-1024 pixel vector."""
    gray = np.asarray(image, dtype=np.float64)
    if gray.ndim != 2:
        raise DegenerateImage(f"expected a 2D image, got shape {gray.shape}")
    if gray.shape[0] == 0 or gray.shape[1] == 0:
        raise DegenerateImage(f"zero-area image {gray.shape}")
    small = kernels.box_resize(gray, VECTOR_SIDE, VECTOR_SIDE)
    # Averaging weights sum to 1 only up to rounding; pin the range exactly.
    return np.clip(small, 0.0, 1.0).reshape(VECTOR_LENGTH)


def load_vector(path) -> np.ndarray:
    return preprocess(decode_image(path))


def load_vectors(records) -> np.ndarray:
    """Pixel vectors for a record list, row k aligned with records[k]."""
    out = np.empty((len(records), VECTOR_LENGTH), dtype=np.float64)
    for k, record in enumerate(records):
        out[k] = load_vector(record.image_path)
    return out


def corpus_stats(records) -> CorpusStats:
    counts = {}
    for record in records:
        per_split = counts.setdefault(record.split, {})
        key = str(record.code)
        per_split[key] = per_split.get(key, 0) + 1
    return CorpusStats(counts)


def stats_csv(stats: CorpusStats) -> str:
    """Render stats as `split,code,count` rows, sorted for stable output."""
    lines = ["split,code,count"]
    for split in sorted(stats.counts):
        for code in sorted(stats.counts[split]):
            lines.append(f"{split},{code},{stats.counts[split][code]}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Synthetic corpus
# ---------------------------------------------------------------------------

_CANVAS = 64


def _class_code(c: int) -> str:
    return f"{1000 + c:04d}-{100 + c:03d}-{200 + c:03d}-{300 + c:03d}"


def _draw_class(c: int, jitter_xy, jitter_size, rng) -> np.ndarray:
    """Render one image of class c on a 64x64 canvas.

    Shape kind cycles with the class index while position and scale walk a
    deterministic grid, so distinct classes get distinct patterns and the
    per-image variation stays small against the between-class differences.
    """
    cx = 16.0 + 16.0 * (c % 3) + jitter_xy[0]
    cy = 16.0 + 16.0 * ((c // 3) % 3) + jitter_xy[1]
    size = 9.0 + 2.0 * ((c // 9) % 3) + jitter_size
    kind = c % 5
    ys, xs = np.mgrid[0:_CANVAS, 0:_CANVAS].astype(np.float64)
    dx, dy = xs - cx, ys - cy
    if kind == 0:
        mask = (np.abs(dx) <= size) & (np.abs(dy) <= 0.6 * size)
    elif kind == 1:
        mask = dx ** 2 + dy ** 2 <= size ** 2
    elif kind == 2:
        arm = 0.3 * size
        mask = ((np.abs(dx) <= arm) | (np.abs(dy) <= arm)) \
            & (np.abs(dx) <= size) & (np.abs(dy) <= size)
    elif kind == 3:
        r2 = dx ** 2 + dy ** 2
        mask = ((0.55 * size) ** 2 <= r2) & (r2 <= size ** 2)
    else:
        stripe = np.mod(dx + dy, 6.0) < 3.0
        mask = stripe & (np.abs(dx) <= size) & (np.abs(dy) <= size)
    img = np.full((_CANVAS, _CANVAS), 0.15)
    img[mask] = 0.85
    img += rng.normal(0.0, 0.03, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def _write_png(img: np.ndarray, path: Path) -> None:
    eight_bit = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(eight_bit, mode="L").save(path, format="PNG")


def generate_synthetic_corpus(out_dir, seed: int, n_train: int, n_test: int,
                              n_classes: int) -> tuple[Path, Path]:
    """Write a deterministic labeled corpus; returns (manifest, taxonomy) paths.

    Records are assigned to classes round-robin, so class counts within a
    split differ by at most one. The taxonomy descriptor is uniform:10 to
    match the digit-only synthetic codes.
    """
    if n_classes < 2:
        raise ValueError(f"n_classes must be >= 2, got {n_classes}")
    if n_train < 0 or n_test < 0:
        raise ValueError(f"split sizes must be >= 0, got {n_train}/{n_test}")
    out_dir = Path(out_dir)
    rng = np.random.default_rng(seed)
    rows = []
    for split, count, prefix in (("train", n_train, "tr"),
                                 ("test", n_test, "te")):
        split_dir = out_dir / "corpus" / split
        split_dir.mkdir(parents=True, exist_ok=True)
        for i in range(count):
            c = i % n_classes
            record_id = f"{prefix}{i:05d}"
            jitter_xy = rng.normal(0.0, 1.2, size=2)
            jitter_size = rng.normal(0.0, 0.6)
            img = _draw_class(c, jitter_xy, jitter_size, rng)
            rel = Path("corpus") / split / f"{record_id}.png"
            _write_png(img, out_dir / rel)
            rows.append([record_id, rel.as_posix(), _class_code(c), split])
    manifest_path = out_dir / "manifest.csv"
    with open(manifest_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(MANIFEST_HEADER)
        writer.writerows(rows)
    taxonomy_path = out_dir / "taxonomy.txt"
    taxonomy_path.write_text("uniform:10\n")
    return manifest_path, taxonomy_path
