import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hypertime import _accel
from hypertime.autodiff import ShapeError, Tape
from hypertime.spectral import fft_loss, fft_loss_var, ffte, next_pow2, rfft, rfft_array, rfft_var

from conftest import central_diff, rel_err


def naive_dft(x):
    """O(N^2) DFT of x zero-padded to the next power of two, bins 0..N/2."""
    n = len(x)
    N = 1
    while N < n:
        N *= 2
    xp = np.zeros(N)
    xp[:n] = x
    k = np.arange(N // 2 + 1)[:, None]
    m = np.arange(N)[None, :]
    return (xp[None, :] * np.exp(-2j * np.pi * k * m / N)).sum(axis=1)


@pytest.mark.parametrize("n", range(2, 65))
def test_rfft_matches_naive_dft(n):
    x = np.random.default_rng(n).normal(size=n)
    np.testing.assert_allclose(rfft(x).bins, naive_dft(x), rtol=0, atol=1e-9)


def test_length_13_equals_padded_16():
    x = np.random.default_rng(0).normal(size=13)
    spec = rfft(x)
    assert spec.n_original == 13 and spec.n_fft == 16
    np.testing.assert_allclose(spec.bins, naive_dft(np.concatenate([x, np.zeros(3)])), atol=1e-9)


def test_dc_only_and_pure_cosine():
    np.testing.assert_allclose(rfft(np.ones(4)).bins, [4, 0, 0], atol=1e-15)
    N, k = 32, 5
    x = np.cos(2 * np.pi * k * np.arange(N) / N)
    mag = rfft(x).magnitude
    assert np.argmax(mag) == k
    assert mag[k] == pytest.approx(N / 2)
    assert np.delete(mag, k).max() < 1e-9


def test_dc_and_nyquist_are_real():
    spec = rfft(np.random.default_rng(1).normal(size=16))
    assert spec.bins[0].imag == 0.0 and spec.bins[-1].imag == 0.0


@pytest.mark.parametrize("n", [2, 3, 8, 13, 31, 64])
def test_parseval(n):
    x = np.random.default_rng(n).normal(size=n)
    X = rfft(x).bins
    N = next_pow2(n)
    two_sided = np.abs(X[0]) ** 2 + np.abs(X[-1]) ** 2 + 2 * np.sum(np.abs(X[1:-1]) ** 2)
    if N == 2:
        two_sided = np.abs(X[0]) ** 2 + np.abs(X[1]) ** 2
    assert two_sided / N == pytest.approx(np.sum(x**2), rel=1e-9)


def test_rfft_rejects_short_input():
    with pytest.raises(ValueError):
        rfft([1.0])
    with pytest.raises(ValueError):
        rfft([])


def test_numba_and_numpy_kernels_agree():
    x = np.random.default_rng(3).normal(size=(5, 64)) + 1j * np.random.default_rng(4).normal(size=(5, 64))
    np.testing.assert_allclose(_accel.fft_radix2_numba(x), _accel.fft_radix2_numpy(x), atol=1e-12)


def test_fft_loss_identity_and_impulse():
    f = np.random.default_rng(5).normal(size=20)
    assert fft_loss(f, f) == 0.0
    assert fft_loss([1.0, 0, 0, 0], np.zeros(4)) == pytest.approx(1.0)


def test_fft_loss_length_mismatch():
    with pytest.raises(ShapeError):
        fft_loss(np.ones(4), np.ones(5))
    with pytest.raises(ShapeError):
        ffte(np.ones(4), np.ones(5))


def test_fft_loss_gradient(rng):
    f = rng.normal(size=11)
    g0 = rng.normal(size=11)
    t = Tape()
    p = t.param(g0, "g")
    grad = t.backward(fft_loss_var(t.constant(f), p))["g"]
    assert rel_err(grad, central_diff(lambda g: fft_loss(f, g), g0)) < 1e-5


def test_rfft_backprop_is_conjugate_transpose(rng):
    n = 12
    N = 16
    K = N // 2 + 1
    D = np.exp(-2j * np.pi * np.arange(K)[:, None] * np.arange(n)[None, :] / N)  # (K, n)
    g = rng.normal(size=(K, 2))
    t = Tape()
    x = t.param(rng.normal(size=n), "x")
    grad = t.backward((rfft_var(x) * g).sum())["x"]
    # real inner product <(Re, Im), g> pulled back through D
    expected = (D.real.T @ g[:, 0]) + (D.imag.T @ g[:, 1])
    np.testing.assert_allclose(grad, expected, atol=1e-9)


def test_ffte_examples():
    f = np.random.default_rng(6).normal(size=30)
    assert ffte(f, f) == 0.0
    assert ffte(f, -f) == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 63), st.sampled_from([8, 16, 32, 64]))
def test_metric_properties(seed, shift, n):
    rng = np.random.default_rng(seed)
    f, g = rng.normal(size=(2, n))
    assert fft_loss(f, f) == 0.0 and ffte(f, f) == 0.0
    assert fft_loss(f, g) >= 0.0 and ffte(f, g) >= 0.0
    # magnitudes are invariant to a shared circular shift (power-of-two length, no padding)
    s = shift % n
    assert ffte(np.roll(f, s), np.roll(g, s)) == pytest.approx(ffte(f, g), rel=1e-9, abs=1e-12)


def test_batched_rfft_matches_rows(rng):
    X = rng.normal(size=(3, 2, 10))
    B = rfft_array(X)
    for i in range(3):
        for c in range(2):
            np.testing.assert_allclose(B[i, c], naive_dft(X[i, c]), atol=1e-9)
