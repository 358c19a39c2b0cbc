"""One-sided spectra of real signals, the spectral training loss and FFTE.

Signals are zero-padded to the next power of two and transformed with the
iterative radix-2 kernel in :mod:`hypertime._accel`. Only bins
``0..n_fft // 2`` are kept; metrics average over those retained bins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from .autodiff import ShapeError, Var, cabs, register_op


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


@dataclass(frozen=True)
class Spectrum:
    bins: np.ndarray  # complex, length n_fft // 2 + 1
    n_original: int
    n_fft: int

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.bins)


def rfft_array(x: np.ndarray) -> np.ndarray:
    """One-sided FFT along the last axis, zero-padded to a power of two."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    if n < 2:
        raise ValueError(f"rfft needs at least 2 samples, got {n}")
    n_fft = next_pow2(n)
    lead = x.shape[:-1]
    flat = np.zeros((int(np.prod(lead, dtype=np.int64)), n_fft), dtype=np.complex128)
    flat[:, :n] = x.reshape(-1, n)
    full = _accel.fft_radix2(flat)
    spec = full[:, : n_fft // 2 + 1]
    # real-input symmetry makes these exactly real; clear rounding residue
    spec[:, 0] = spec[:, 0].real
    spec[:, n_fft // 2] = spec[:, n_fft // 2].real
    return spec.reshape(lead + (n_fft // 2 + 1,))


def rfft(signal) -> Spectrum:
    signal = np.asarray(signal, dtype=np.float64)
    if signal.ndim != 1:
        raise ValueError("rfft expects a 1-D signal; use rfft_array for batches")
    return Spectrum(rfft_array(signal), signal.shape[0], next_pow2(signal.shape[0]))


def rfft_adjoint(g: np.ndarray, n: int) -> np.ndarray:
    """Adjoint of :func:`rfft_array` applied to complex cotangents ``g``.

    Treating the spectrum as independent real and imaginary outputs, the
    input gradient is ``Re(FFT(conj(g)))`` over the padded length, cropped
    back to ``n`` samples.
    """
    n_fft = next_pow2(n)
    k = n_fft // 2 + 1
    lead = g.shape[:-1]
    flat = np.zeros((int(np.prod(lead, dtype=np.int64)), n_fft), dtype=np.complex128)
    flat[:, :k] = np.conj(g.reshape(-1, k))
    out = _accel.fft_radix2(flat).real[:, :n]
    return out.reshape(lead + (n,))


def _rfft_f(x):
    spec = rfft_array(x)
    return np.stack((spec.real, spec.imag), axis=-1), x.shape[-1]


def _rfft_b(g, n):
    return (rfft_adjoint(g[..., 0] + 1j * g[..., 1], n),)


register_op("rfft", _rfft_f, _rfft_b)


def rfft_var(x: Var) -> Var:
    """Differentiable one-sided spectrum; output shape ``(..., bins, 2)``."""
    return x.tape.apply("rfft", x)


def _check_pair(name, f, f_hat):
    f = np.asarray(f, dtype=np.float64)
    f_hat = np.asarray(f_hat, dtype=np.float64)
    if f.shape != f_hat.shape:
        raise ShapeError(name, (f.shape, f_hat.shape), "length mismatch")
    return f, f_hat


def fft_loss(f, f_hat) -> float:
    """Mean complex-modulus distance between the spectra of ``f`` and ``f_hat``.

    Averaged over retained bins (and any leading batch axes).
    """
    f, f_hat = _check_pair("fft_loss", f, f_hat)
    return float(np.abs(rfft_array(f) - rfft_array(f_hat)).mean())


def fft_loss_var(f: Var, f_hat: Var) -> Var:
    if f.shape != f_hat.shape:
        raise ShapeError("fft_loss", (f.shape, f_hat.shape), "length mismatch")
    return cabs(rfft_var(f) - rfft_var(f_hat)).mean()


def ffte(f, f_hat) -> float:
    """Fourier error: MAE between the magnitude spectra of ``f`` and ``f_hat``."""
    f, f_hat = _check_pair("ffte", f, f_hat)
    return float(np.abs(np.abs(rfft_array(f)) - np.abs(rfft_array(f_hat))).mean())


def magnitude_spectra(x) -> np.ndarray:
    return np.abs(rfft_array(x))
