"""Retrieval scoring: 1-NN over the train index, code error per query.

Each test image is encoded, its nearest training neighbor looked up, and
the code difference scored and accumulated. Queries are processed in
ascending record_id order so the summed total and the emitted report are
byte-stable run to run.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple

from .autoencoder import rms_reconstruction_error
from .dataset import load_vectors
from .irma import Taxonomy, code_error
from .search import FeatureIndex, knn
from .stacked import (StackedEncoder, compression_percent,
                      encode_features_batch, full_unroll_rms)


class EvalRow(NamedTuple):
    query_id: str
    truth_code: str
    hit_id: str
    hit_code: str
    error: float


@dataclass(frozen=True)
class EvalReport:
    """Score triple plus the per-query breakdown behind the total."""

    total_score: float
    error_percentage: float
    n_test: int
    compression_percent: float
    train_rms: float
    test_rms: float
    train_rms_full: float
    test_rms_full: float
    rows: tuple

    def scalars(self) -> dict:
        d = asdict(self)
        del d["rows"]
        return d


def evaluate(stack: StackedEncoder, index: FeatureIndex, test_records,
             taxonomy: Taxonomy, *, train_vectors,
             test_vectors=None) -> EvalReport:
    """Score retrieval of every test record against the train index.

    train_vectors are the training pixel vectors (needed for the train-side
    reconstruction error); test_vectors are loaded from the records' image
    files when not supplied.
    """
    test_records = list(test_records)
    if not test_records:
        raise ValueError("test records must be non-empty")
    if test_vectors is None:
        test_vectors = load_vectors(test_records)
    if len(test_vectors) != len(test_records):
        raise ValueError(
            f"{len(test_vectors)} test vectors for {len(test_records)} records")
    order = sorted(range(len(test_records)),
                   key=lambda i: test_records[i].record_id)
    features = encode_features_batch(stack, test_vectors)
    rows = []
    total = 0.0
    for i in order:
        record = test_records[i]
        hit = knn(index, features[i], 1).hits[0]
        err = code_error(record.code, hit.code, taxonomy)
        total += err
        rows.append(EvalRow(record.record_id, str(record.code),
                            hit.record_id, str(hit.code), err))
    n_test = len(test_records)
    return EvalReport(
        total_score=total,
        error_percentage=total / n_test,
        n_test=n_test,
        compression_percent=compression_percent(stack),
        train_rms=rms_reconstruction_error(stack, train_vectors),
        test_rms=rms_reconstruction_error(stack, test_vectors),
        train_rms_full=full_unroll_rms(stack, train_vectors),
        test_rms_full=full_unroll_rms(stack, test_vectors),
        rows=tuple(rows))


def report_csv(report: EvalReport, path) -> None:
    """Write the per-query breakdown with a trailing TOTAL summary row."""
    lines = ["query_id,truth_code,hit_id,hit_code,error"]
    for row in report.rows:
        lines.append(f"{row.query_id},{row.truth_code},{row.hit_id},"
                     f"{row.hit_code},{row.error!r}")
    lines.append(f"TOTAL,,,,{report.total_score!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def summary_json(report: EvalReport) -> str:
    return json.dumps(report.scalars(), indent=2, sort_keys=True) + "\n"
