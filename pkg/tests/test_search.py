"""Index construction, exact nearest-neighbor scans, and index files."""

import math

import numpy as np
import pytest

from xraysearch.errors import (CorruptIndex, DimensionMismatch, DuplicateId,
                               EmptyIndex)
from xraysearch.irma import parse_code
from xraysearch.search import (FeatureIndex, FeatureRecord, binarize,
                               build_index, euclidean, knn, load_index,
                               save_index)

CODE = parse_code("1121-127-700-500")


def _records(vectors, ids=None, codes=None, binarized=False):
    vectors = np.asarray(vectors, dtype=np.float64)
    ids = ids or [f"r{i:04d}" for i in range(len(vectors))]
    codes = codes or [CODE] * len(vectors)
    return [FeatureRecord(i, c, v, binarized)
            for i, c, v in zip(ids, codes, vectors)]


def _random_code(rng):
    digits = "0123456789"
    return parse_code("-".join(
        "".join(digits[d] for d in rng.integers(0, 10, size=size))
        for size in (4, 3, 3, 3)))


# ---------------------------------------------------------------------------
# build
# ---------------------------------------------------------------------------

def test_build_small_index():
    index = build_index(_records(np.random.default_rng(0).uniform(0, 1, (3, 4))))
    assert len(index) == 3
    assert index.dim == 4


def test_build_rejects_mixed_dims():
    records = _records(np.zeros((2, 4))) + [FeatureRecord("x", CODE, np.zeros(5))]
    with pytest.raises(DimensionMismatch):
        build_index(records)


def test_build_rejects_duplicate_ids():
    with pytest.raises(DuplicateId):
        build_index(_records(np.zeros((2, 4)), ids=["same", "same"]))


def test_build_rejects_empty():
    with pytest.raises(EmptyIndex):
        build_index([])


def test_build_rejects_out_of_range_features():
    with pytest.raises(ValueError):
        build_index(_records([[0.5, 1.5]]))


def test_build_rejects_mixed_binarized_flags():
    records = [FeatureRecord("a", CODE, np.array([0.0, 1.0]), binarized=True),
               FeatureRecord("b", CODE, np.array([0.2, 0.4]), binarized=False)]
    with pytest.raises(ValueError):
        build_index(records)


# ---------------------------------------------------------------------------
# the metric
# ---------------------------------------------------------------------------

def test_euclidean_pythagorean():
    assert euclidean([0.0, 0.0], [3.0, 4.0]) == 5.0


def test_euclidean_identity():
    v = np.array([0.3, 0.7, 0.1])
    assert euclidean(v, v) == 0.0


def test_euclidean_hand_value():
    assert euclidean([0.1, 0.2, 0.3], [0.4, 0.6, 0.3]) == pytest.approx(0.5)


def test_euclidean_rejects_length_mismatch():
    with pytest.raises(DimensionMismatch):
        euclidean([0.1, 0.2], [0.1, 0.2, 0.3])


def test_euclidean_metric_axioms():
    rng = np.random.default_rng(5)
    for _ in range(50):
        a, b, c = rng.uniform(0, 1, size=(3, 6))
        ab, ba = euclidean(a, b), euclidean(b, a)
        assert ab == pytest.approx(ba, abs=1e-12)
        assert euclidean(a, c) <= ab + euclidean(b, c) + 1e-12


# ---------------------------------------------------------------------------
# k-NN
# ---------------------------------------------------------------------------

def test_self_retrieval_rank_one_distance_zero():
    rng = np.random.default_rng(2)
    vectors = rng.uniform(0, 1, size=(30, 8))
    index = build_index(_records(vectors))
    for i in (0, 13, 29):
        result = knn(index, vectors[i], 3)
        assert result[0].record_id == f"r{i:04d}"
        assert result[0].distance == 0.0


def test_k_larger_than_index_returns_all():
    vectors = np.random.default_rng(3).uniform(0, 1, size=(3, 4))
    index = build_index(_records(vectors))
    result = knn(index, np.full(4, 0.5), 10)
    assert len(result) == 3
    distances = [hit.distance for hit in result]
    assert distances == sorted(distances)


def test_knn_rejects_bad_inputs():
    index = build_index(_records(np.zeros((2, 4))))
    with pytest.raises(ValueError):
        knn(index, np.zeros(4), 0)
    with pytest.raises(DimensionMismatch):
        knn(index, np.zeros(5), 1)


def test_knn_on_empty_index_impossible():
    with pytest.raises(EmptyIndex):
        build_index([])


def test_exact_ties_break_on_record_id():
    base = np.array([0.5, 0.5, 0.5, 0.5])
    vectors = np.stack([base, base, base, base + 0.1])
    index = build_index(_records(vectors, ids=["zz", "aa", "mm", "far"]))
    result = knn(index, base, 4)
    assert [hit.record_id for hit in result] == ["aa", "mm", "zz", "far"]
    assert result[0].distance == result[1].distance == result[2].distance == 0.0


def _naive_knn(vectors, ids, q, k):
    """Two-loop full sort, the reference the scan must reproduce."""
    rows = []
    for i in range(len(vectors)):
        total = 0.0
        for j in range(vectors.shape[1]):
            diff = vectors[i, j] - q[j]
            total += diff * diff
        rows.append((math.sqrt(total), ids[i]))
    rows.sort()
    return rows[:k]


def test_knn_matches_naive_oracle_many_instances():
    rng = np.random.default_rng(99)
    for trial in range(100):
        size = int(rng.integers(2, 60))
        dim = int(rng.integers(1, 16))
        k = int(rng.integers(1, size + 3))
        vectors = rng.uniform(0, 1, size=(size, dim))
        if trial % 3 == 0 and size >= 4:
            # Force exact ties by duplicating a block of rows.
            vectors[size // 2:size // 2 + 2] = vectors[0]
        ids = [f"id{int(j):04d}" for j in rng.permutation(size)]
        index = build_index(_records(vectors, ids=ids))
        query = vectors[0] if trial % 2 else rng.uniform(0, 1, size=dim)
        expected = _naive_knn(vectors, ids, query, k)
        got = knn(index, query, k)
        assert [h.record_id for h in got] == [i for _, i in expected]
        np.testing.assert_allclose([h.distance for h in got],
                                   [d for d, _ in expected],
                                   rtol=1e-12, atol=1e-12)


def test_knn_matches_naive_oracle_large_instance():
    rng = np.random.default_rng(1000)
    vectors = rng.uniform(0, 1, size=(1000, 64))
    ids = [f"rec{i:05d}" for i in range(1000)]
    index = build_index(_records(vectors, ids=ids))
    query = rng.uniform(0, 1, size=64)
    expected = _naive_knn(vectors, ids, query, 10)
    got = knn(index, query, 10)
    assert [h.record_id for h in got] == [i for _, i in expected]
    assert all(hit.distance >= 0.0 for hit in got)


# ---------------------------------------------------------------------------
# binarization
# ---------------------------------------------------------------------------

def test_binarize_threshold_inclusive():
    assert list(binarize([0.2, 0.5, 0.9])) == [0.0, 1.0, 1.0]


def test_binarize_all_midpoints():
    assert np.all(binarize(np.full(6, 0.5)) == 1.0)


def test_binarized_euclidean_is_sqrt_hamming():
    rng = np.random.default_rng(8)
    a = binarize(rng.uniform(0, 1, size=32))
    b = binarize(rng.uniform(0, 1, size=32))
    hamming = int(np.sum(a != b))
    assert euclidean(a, b) == pytest.approx(math.sqrt(hamming))


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def test_index_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(4)
    vectors = rng.uniform(0, 1, size=(5, 7))
    codes = [_random_code(rng) for _ in range(5)]
    ids = ["alpha", "beta-2", "r/unusual", "naïve", "zulu"]
    index = build_index(_records(vectors, ids=ids, codes=codes))
    path = tmp_path / "index.saei"
    save_index(index, path)
    loaded = load_index(path)
    assert loaded.ids == index.ids
    assert [str(c) for c in loaded.codes] == [str(c) for c in index.codes]
    assert np.array_equal(loaded.matrix, index.matrix)
    assert loaded.binarized is False


def test_binarized_flag_round_trips(tmp_path):
    vectors = binarize(np.random.default_rng(1).uniform(0, 1, size=(3, 4)))
    index = build_index(_records(vectors, binarized=True))
    path = tmp_path / "index.saei"
    save_index(index, path)
    assert load_index(path).binarized is True


def test_index_file_header(tmp_path):
    index = build_index(_records(np.zeros((2, 3))))
    path = tmp_path / "index.saei"
    save_index(index, path)
    data = path.read_bytes()
    assert data[:4] == b"SAEI"
    import struct
    version, count, dim, flag = struct.unpack_from("<IIIB", data, 4)
    assert (version, count, dim, flag) == (1, 2, 3, 0)


def test_load_rejects_wrong_magic(tmp_path):
    path = tmp_path / "bad.saei"
    path.write_bytes(b"WHAT" + b"\x00" * 40)
    with pytest.raises(CorruptIndex, match="magic"):
        load_index(path)


def test_load_rejects_corruption(tmp_path):
    index = build_index(_records(np.random.default_rng(0).uniform(0, 1, (4, 6))))
    path = tmp_path / "index.saei"
    save_index(index, path)
    data = bytearray(path.read_bytes())
    data[30] ^= 0x01
    broken = tmp_path / "broken.saei"
    broken.write_bytes(bytes(data))
    with pytest.raises(CorruptIndex, match="checksum"):
        load_index(broken)
    clipped = tmp_path / "clipped.saei"
    clipped.write_bytes(bytes(data[:15]))
    with pytest.raises(CorruptIndex):
        load_index(clipped)
