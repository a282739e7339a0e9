"""Hot numeric kernels with a numba and a pure-numpy flavour.

Every kernel exists twice: a vectorized numpy implementation
(``_*_numpy``) and, when numba is importable, an ``@njit`` twin
(``_*_numba``). The active flavour is picked once at import time and
bound to the public names. Set ``XRAYSEARCH_NO_NUMBA=1`` to force the
numpy path; the numpy path is also the automatic fallback when numba is
not installed. ``benchmarks/bench_kernels.py`` times both flavours
side by side.

Both flavours compute the same arithmetic on the same batch
partitioning, so results agree to float64 rounding (not bit-exactly;
summation orders differ). All kernels operate on float64 C-contiguous
arrays.
"""

import os

import numpy as np

# Clamp applied to reconstructions inside the cross-entropy only, never
# to the values used by the gradient terms.
LOG_EPS = 1e-12

_disabled = os.environ.get("XRAYSEARCH_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")
try:
    if _disabled:
        raise ImportError("numba disabled by XRAYSEARCH_NO_NUMBA")
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False


def sigmoid(z):
    """Elementwise logistic function 1 / (1 + exp(-z))."""
    z = np.asarray(z, dtype=np.float64)
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-z))


# ---------------------------------------------------------------------------
# numpy flavour
# ---------------------------------------------------------------------------

def _encode_batch_numpy(x, w, b_enc):
    return sigmoid(x @ w.T + b_enc)


def _decode_batch_numpy(h, w, b_dec):
    return sigmoid(h @ w + b_dec)


def _batch_gradients_numpy(xb, w, b_enc, b_dec):
    """Mean cross-entropy gradients of one tied-weight minibatch.

    xb is (m, n), w is (p, n). Returns (dw, db_enc, db_dec, mean_loss)
    where dw accumulates both the encoder contribution and the
    transposed decoder contribution of the shared matrix.
    """
    m = xb.shape[0]
    h = sigmoid(xb @ w.T + b_enc)
    xhat = sigmoid(h @ w + b_dec)
    xc = np.clip(xhat, LOG_EPS, 1.0 - LOG_EPS)
    loss = -float(np.sum(xb * np.log(xc) + (1.0 - xb) * np.log1p(-xc))) / m
    dz2 = (xhat - xb) / m
    db_dec = dz2.sum(axis=0)
    dz1 = (dz2 @ w.T) * h * (1.0 - h)
    db_enc = dz1.sum(axis=0)
    dw = dz1.T @ xb + h.T @ dz2
    return dw, db_enc, db_dec, loss


def _sgd_epoch_numpy(x, order, w, b_enc, b_dec, batch_size, lr):
    """One SGD pass over x in the given sample order; updates in place.

    Returns the epoch mean cross-entropy (per-sample, evaluated on each
    batch before its update, final partial batch at its actual size).
    """
    n_samples = x.shape[0]
    total = 0.0
    for start in range(0, n_samples, batch_size):
        sel = order[start:start + batch_size]
        xb = x[sel]
        dw, dbe, dbd, loss = _batch_gradients_numpy(xb, w, b_enc, b_dec)
        w -= lr * dw
        b_enc -= lr * dbe
        b_dec -= lr * dbd
        total += loss * sel.shape[0]
    return total / n_samples


def _squared_distances_numpy(xs, q):
    diffs = xs - q
    return np.einsum("ij,ij->i", diffs, diffs)


# ---------------------------------------------------------------------------
# numba flavour
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def _batch_gradients_numba(xb, w, b_enc, b_dec):
        m, n = xb.shape
        p = w.shape[0]
        z1 = np.dot(xb, w.T)
        h = np.empty((m, p))
        for i in range(m):
            for j in range(p):
                h[i, j] = 1.0 / (1.0 + np.exp(-(z1[i, j] + b_enc[j])))
        z2 = np.dot(h, w)
        xhat = np.empty((m, n))
        loss = 0.0
        for i in range(m):
            for j in range(n):
                v = 1.0 / (1.0 + np.exp(-(z2[i, j] + b_dec[j])))
                xhat[i, j] = v
                vc = min(max(v, LOG_EPS), 1.0 - LOG_EPS)
                loss -= xb[i, j] * np.log(vc) + (1.0 - xb[i, j]) * np.log1p(-vc)
        loss /= m
        dz2 = (xhat - xb) / m
        db_dec = np.zeros(n)
        for i in range(m):
            for j in range(n):
                db_dec[j] += dz2[i, j]
        dh = np.dot(dz2, w.T)
        dz1 = np.empty((m, p))
        db_enc = np.zeros(p)
        for i in range(m):
            for j in range(p):
                dz1[i, j] = dh[i, j] * h[i, j] * (1.0 - h[i, j])
                db_enc[j] += dz1[i, j]
        dw = np.dot(dz1.T, xb) + np.dot(h.T, dz2)
        return dw, db_enc, db_dec, loss

    @njit(cache=True)
    def _sgd_epoch_numba(x, order, w, b_enc, b_dec, batch_size, lr):
        n_samples = x.shape[0]
        total = 0.0
        start = 0
        while start < n_samples:
            stop = min(start + batch_size, n_samples)
            xb = x[order[start:stop]]
            dw, dbe, dbd, loss = _batch_gradients_numba(xb, w, b_enc, b_dec)
            w -= lr * dw
            b_enc -= lr * dbe
            b_dec -= lr * dbd
            total += loss * (stop - start)
            start = stop
        return total / n_samples

    @njit(cache=True)
    def _encode_batch_numba(x, w, b_enc):
        m = x.shape[0]
        p = w.shape[0]
        z = np.dot(x, w.T)
        out = np.empty((m, p))
        for i in range(m):
            for j in range(p):
                out[i, j] = 1.0 / (1.0 + np.exp(-(z[i, j] + b_enc[j])))
        return out

    @njit(cache=True)
    def _decode_batch_numba(h, w, b_dec):
        m = h.shape[0]
        n = w.shape[1]
        z = np.dot(h, w)
        out = np.empty((m, n))
        for i in range(m):
            for j in range(n):
                out[i, j] = 1.0 / (1.0 + np.exp(-(z[i, j] + b_dec[j])))
        return out

    @njit(cache=True)
    def _squared_distances_numba(xs, q):
        n, d = xs.shape
        out = np.empty(n)
        for i in range(n):
            acc = 0.0
            for j in range(d):
                diff = xs[i, j] - q[j]
                acc += diff * diff
            out[i] = acc
        return out

    @njit(cache=True)
    def _box_resize_accum_numba(img, rs, rc, rw, cs, cc, cw, out):
        # Two-stage (rows, then columns) like the numpy flavour: fusing
        # both axes into one triple product would add a rounding step and
        # lose the exact constant-image result.
        in_w = img.shape[1]
        out_h, out_w = out.shape
        tmp = np.empty((out_h, in_w))
        for i in range(out_h):
            for col in range(in_w):
                acc = 0.0
                for a in range(rc[i]):
                    acc += rw[i, a] * img[rs[i] + a, col]
                tmp[i, col] = acc
        for i in range(out_h):
            for j in range(out_w):
                acc = 0.0
                for b in range(cc[j]):
                    acc += cw[j, b] * tmp[i, cs[j] + b]
                out[i, j] = acc


# ---------------------------------------------------------------------------
# box-filter resize (shared span/weight construction)
# ---------------------------------------------------------------------------

def _overlap_spans(n_in, n_out):
    """Area-overlap weights mapping n_in source cells onto n_out output cells.

    Output cell i covers the source interval [i*s, (i+1)*s), s = n_in/n_out.
    Returns (starts, counts, weights); weights[i, :counts[i]] applies to
    source cells starts[i].. and sums to 1 per output cell.
    """
    scale = n_in / n_out
    starts = np.zeros(n_out, dtype=np.int64)
    counts = np.zeros(n_out, dtype=np.int64)
    max_span = int(np.ceil(scale)) + 1
    weights = np.zeros((n_out, max_span))
    for i in range(n_out):
        lo = i * scale
        hi = (i + 1) * scale
        a = int(np.floor(lo))
        b = min(int(np.ceil(hi)), n_in)
        starts[i] = a
        counts[i] = b - a
        for j in range(a, b):
            weights[i, j - a] = (min(hi, j + 1.0) - max(lo, float(j))) / scale
    return starts, counts, weights


def _box_resize_numpy(img, rs, rc, rw, cs, cc, cw, out_h, out_w):
    in_h, in_w = img.shape
    row_mat = np.zeros((out_h, in_h))
    for i in range(out_h):
        row_mat[i, rs[i]:rs[i] + rc[i]] = rw[i, :rc[i]]
    col_mat = np.zeros((in_w, out_w))
    for j in range(out_w):
        col_mat[cs[j]:cs[j] + cc[j], j] = cw[j, :cc[j]]
    return row_mat @ img @ col_mat


def box_resize(img, out_h, out_w):
    """Downscale (or upscale) a 2-D float64 image by exact area averaging."""
    img = np.ascontiguousarray(img, dtype=np.float64)
    in_h, in_w = img.shape
    rs, rc, rw = _overlap_spans(in_h, out_h)
    cs, cc, cw = _overlap_spans(in_w, out_w)
    if BACKEND == "numba":
        out = np.empty((out_h, out_w))
        _box_resize_accum_numba(img, rs, rc, rw, cs, cc, cw, out)
        return out
    return _box_resize_numpy(img, rs, rc, rw, cs, cc, cw, out_h, out_w)


# ---------------------------------------------------------------------------
# flavour selection
# ---------------------------------------------------------------------------

if HAVE_NUMBA:
    BACKEND = "numba"
    batch_gradients = _batch_gradients_numba
    sgd_epoch = _sgd_epoch_numba
    encode_batch = _encode_batch_numba
    decode_batch = _decode_batch_numba
    squared_distances = _squared_distances_numba
else:
    BACKEND = "numpy"
    batch_gradients = _batch_gradients_numpy
    sgd_epoch = _sgd_epoch_numpy
    encode_batch = _encode_batch_numpy
    decode_batch = _decode_batch_numpy
    squared_distances = _squared_distances_numpy
