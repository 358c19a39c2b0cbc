"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``HYPERTIME_DISABLE_NUMBA`` is unset (or ``0``). Both paths are
always importable under explicit names so tests and the benchmark can
compare them in one process.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    numba = None
    HAVE_NUMBA = False

_DISABLED = os.environ.get("HYPERTIME_DISABLE_NUMBA", "0").strip().lower() not in (
    "",
    "0",
    "false",
    "no",
)
USE_NUMBA = HAVE_NUMBA and not _DISABLED


def _njit(fn):
    if HAVE_NUMBA:
        return numba.njit(cache=True, fastmath=False)(fn)
    return fn


def bit_reverse_indices(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.int64)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    return rev


# ---------------------------------------------------------------------------
# radix-2 FFT over the last axis of a 2-D complex array
# ---------------------------------------------------------------------------


def fft_radix2_numpy(x: np.ndarray) -> np.ndarray:
    """Iterative decimation-in-time FFT of each row of ``x``.

    ``x`` has shape ``(batch, n)`` with ``n`` a power of two.
    """
    batch, n = x.shape
    y = x[:, bit_reverse_indices(n)].astype(np.complex128)
    m = 2
    while m <= n:
        half = m // 2
        tw = np.exp(-2j * np.pi * np.arange(half) / m)
        blocks = y.reshape(batch, n // m, m)
        u = blocks[:, :, :half]
        v = blocks[:, :, half:] * tw
        y = np.concatenate((u + v, u - v), axis=2).reshape(batch, n)
        m *= 2
    return y


@_njit
def _fft_rows_loop(x, rev):
    batch, n = x.shape
    out = np.empty((batch, n), dtype=np.complex128)
    for r in range(batch):
        for i in range(n):
            out[r, rev[i]] = x[r, i]
    m = 2
    while m <= n:
        half = m // 2
        for k in range(half):
            ang = -2.0 * np.pi * k / m
            w = np.cos(ang) + 1j * np.sin(ang)
            for r in range(batch):
                for start in range(0, n, m):
                    a = out[r, start + k]
                    b = out[r, start + k + half] * w
                    out[r, start + k] = a + b
                    out[r, start + k + half] = a - b
        m *= 2
    return out


def fft_radix2_numba(x: np.ndarray) -> np.ndarray:
    n = x.shape[1]
    # bit reversal is an involution, so scattering by rev equals gathering by rev
    return _fft_rows_loop(np.ascontiguousarray(x, dtype=np.complex128), bit_reverse_indices(n))


def fft_radix2(x: np.ndarray) -> np.ndarray:
    if USE_NUMBA:
        return fft_radix2_numba(x)
    return fft_radix2_numpy(x)


# ---------------------------------------------------------------------------
# per-column interval coverage: fraction of rows of `a` inside [lo, hi]
# ---------------------------------------------------------------------------


def band_coverage_numpy(a: np.ndarray, lo: np.ndarray, hi: np.ndarray, eps: float) -> np.ndarray:
    inside = (a >= lo - eps) & (a <= hi + eps)
    return inside.mean(axis=0)


@_njit
def band_coverage_numba(a, lo, hi, eps):
    rows, cols = a.shape
    out = np.zeros(cols)
    for j in range(cols):
        lo_j = lo[j] - eps
        hi_j = hi[j] + eps
        c = 0
        for i in range(rows):
            v = a[i, j]
            if v >= lo_j and v <= hi_j:
                c += 1
        out[j] = c / rows
    return out


def band_coverage(a: np.ndarray, lo: np.ndarray, hi: np.ndarray, eps: float) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    lo = np.ascontiguousarray(lo, dtype=np.float64)
    hi = np.ascontiguousarray(hi, dtype=np.float64)
    if USE_NUMBA:
        return band_coverage_numba(a, lo, hi, float(eps))
    return band_coverage_numpy(a, lo, hi, eps)


# ---------------------------------------------------------------------------
# k nearest observed neighbours in time, uniform weights
# ---------------------------------------------------------------------------


def knn_fill_numpy(t_obs, v_obs, t_query, k):
    """Mean of the ``k`` observed values closest in time to each query."""
    k = min(k, t_obs.shape[0])
    dist = np.abs(t_query[:, None] - t_obs[None, :])
    # stable sort: ties resolved towards the earlier observation
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
    return v_obs[:, nearest].mean(axis=2)


@_njit
def _knn_fill_loop(t_obs, v_obs, t_query, k):
    # t_obs is strictly increasing: walk outwards from the insertion point,
    # taking the left neighbour on ties (same order as a stable sort)
    n_obs = t_obs.shape[0]
    channels = v_obs.shape[0]
    out = np.zeros((channels, t_query.shape[0]))
    picked = np.empty(k, dtype=np.int64)
    for q in range(t_query.shape[0]):
        tq = t_query[q]
        right = np.searchsorted(t_obs, tq)
        left = right - 1
        for j in range(k):
            if left < 0:
                picked[j] = right
                right += 1
            elif right >= n_obs or tq - t_obs[left] <= t_obs[right] - tq:
                picked[j] = left
                left -= 1
            else:
                picked[j] = right
                right += 1
        for c in range(channels):
            s = 0.0
            for j in range(k):
                s += v_obs[c, picked[j]]
            out[c, q] = s / k
    return out


def knn_fill_numba(t_obs, v_obs, t_query, k):
    t_obs = np.ascontiguousarray(t_obs, dtype=np.float64)
    if np.any(np.diff(t_obs) <= 0):
        raise ValueError("knn_fill_numba needs strictly increasing observation times")
    k = min(k, t_obs.shape[0])
    return _knn_fill_loop(
        t_obs,
        np.ascontiguousarray(v_obs, dtype=np.float64),
        np.ascontiguousarray(t_query, dtype=np.float64),
        k,
    )


def knn_fill(t_obs, v_obs, t_query, k):
    if USE_NUMBA:
        return knn_fill_numba(t_obs, v_obs, t_query, k)
    return knn_fill_numpy(t_obs, v_obs, t_query, k)
