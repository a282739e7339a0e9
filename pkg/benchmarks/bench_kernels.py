"""Time the numpy and numba kernel flavours side by side.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

Shapes mirror real workloads: a 1024-to-260 layer on batches of 20, a
10k-record distance scan, and a 512x512 image downscale. The numba
flavour is warmed up before timing so JIT compilation is excluded.
"""

import argparse
import time

import numpy as np

from xraysearch import kernels


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def build_cases(rng):
    n, p, m = 1024, 260, 20
    x = rng.random((m, n))
    xs = rng.random((200, n))
    w = rng.normal(scale=0.05, size=(p, n))
    b_enc = np.zeros(p)
    b_dec = np.zeros(n)
    order = rng.permutation(200)

    corpus = rng.random((10_000, p))
    query = rng.random(p)

    img = rng.random((512, 512))
    rs, rc, rw = kernels._overlap_spans(512, 32)
    cs, cc, cw = kernels._overlap_spans(512, 32)

    def sgd_args():
        return xs, order, w.copy(), b_enc.copy(), b_dec.copy(), 20, 0.1

    cases = [
        ("batch_gradients 20x1024->260",
         lambda: kernels._batch_gradients_numpy(x, w, b_enc, b_dec),
         lambda: kernels._batch_gradients_numba(x, w, b_enc, b_dec)),
        ("sgd_epoch 200x1024->260",
         lambda: kernels._sgd_epoch_numpy(*sgd_args()),
         lambda: kernels._sgd_epoch_numba(*sgd_args())),
        ("encode_batch 200x1024->260",
         lambda: kernels._encode_batch_numpy(xs, w, b_enc),
         lambda: kernels._encode_batch_numba(xs, w, b_enc)),
        ("squared_distances 10000x260",
         lambda: kernels._squared_distances_numpy(corpus, query),
         lambda: kernels._squared_distances_numba(corpus, query)),
        ("box_resize 512x512->32x32",
         lambda: kernels._box_resize_numpy(img, rs, rc, rw, cs, cc, cw, 32, 32),
         lambda: _numba_resize(img, rs, rc, rw, cs, cc, cw)),
    ]
    return cases


def _numba_resize(img, rs, rc, rw, cs, cc, cw):
    out = np.empty((32, 32))
    kernels._box_resize_accum_numba(img, rs, rc, rw, cs, cc, cw, out)
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5,
                        help="timing repeats per kernel (best is kept)")
    args = parser.parse_args()

    if not kernels.HAVE_NUMBA:
        print("numba flavour unavailable (package missing or disabled by "
              "XRAYSEARCH_NO_NUMBA); nothing to compare.")
        return

    rng = np.random.default_rng(0)
    cases = build_cases(rng)

    print("warming up JIT...")
    for _, _, numba_fn in cases:
        numba_fn()

    header = f"{'kernel':<34}{'numpy':>12}{'numba':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, numpy_fn, numba_fn in cases:
        t_np = _time(numpy_fn, args.repeats)
        t_nb = _time(numba_fn, args.repeats)
        print(f"{name:<34}{t_np * 1e3:>10.2f}ms{t_nb * 1e3:>10.2f}ms"
              f"{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
