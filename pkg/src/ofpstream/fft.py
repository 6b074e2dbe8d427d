"""Iterative radix-2 FFT and real-input transforms.

All transforms operate on the last axis and broadcast over leading axes, so a
batch of K frames is transformed in a single call. Sizes must be powers of two.
"""

from functools import lru_cache

import numpy as np

from .errors import InvalidConfigError


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _check_size(n: int, minimum: int = 1) -> None:
    if n < minimum or not is_power_of_two(n):
        raise InvalidConfigError(f"FFT size must be a power of two >= {minimum}, got {n}")


@lru_cache(maxsize=None)
def _bit_reversal(n: int) -> np.ndarray:
    bits = n.bit_length() - 1
    idx = np.arange(n)
    rev = np.zeros(n, dtype=np.intp)
    for b in range(bits):
        rev |= ((idx >> b) & 1) << (bits - 1 - b)
    rev.flags.writeable = False
    return rev


@lru_cache(maxsize=None)
def _twiddles(half: int) -> np.ndarray:
    # exp(-2j*pi*k / (2*half)) for k in [0, half)
    tw = np.exp(-1j * np.pi * np.arange(half) / half)
    tw.flags.writeable = False
    return tw


@lru_cache(maxsize=None)
def _rfft_twiddles(n: int) -> np.ndarray:
    tw = np.exp(-2j * np.pi * np.arange(n // 2 + 1) / n)
    tw.flags.writeable = False
    return tw


def fft(x) -> np.ndarray:
    """Forward complex DFT along the last axis (decimation in time)."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    _check_size(n)
    lead = x.shape[:-1]
    out = x[..., _bit_reversal(n)]
    half = 1
    while half < n:
        blocks = out.reshape(lead + (n // (2 * half), 2, half))
        even = blocks[..., 0, :]
        odd = blocks[..., 1, :] * _twiddles(half)
        out = np.stack((even + odd, even - odd), axis=-2).reshape(lead + (n,))
        half *= 2
    return out


def ifft(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    return np.conj(fft(np.conj(x))) / n


def rfft(x) -> np.ndarray:
    """DFT of a real signal, returning the n//2 + 1 non-negative bins.

    The real input of length n is packed into a complex sequence of length
    n//2 and split back into even/odd spectra afterwards.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[-1]
    _check_size(n, minimum=2)
    m = n // 2
    z = fft(x[..., 0::2] + 1j * x[..., 1::2])
    # Z[m - k] with Z[m] == Z[0], for k in [0, m]
    zr = np.conj(z[..., (-np.arange(m + 1)) % m])
    zk = z[..., np.arange(m + 1) % m]
    even = 0.5 * (zk + zr)
    odd = -0.5j * (zk - zr)
    return even + _rfft_twiddles(n) * odd


def irfft(spectrum, n: int) -> np.ndarray:
    """Inverse of :func:`rfft` for an even length ``n``.

    The spectrum is read as the non-negative half of a Hermitian spectrum;
    imaginary parts of the DC and Nyquist bins are ignored.
    """
    spectrum = np.asarray(spectrum, dtype=np.complex128)
    _check_size(n, minimum=2)
    m = n // 2
    if spectrum.shape[-1] != m + 1:
        raise InvalidConfigError(f"expected {m + 1} bins for n={n}, got {spectrum.shape[-1]}")
    spectrum = spectrum.copy()
    spectrum[..., 0] = spectrum[..., 0].real
    spectrum[..., m] = spectrum[..., m].real
    k = np.arange(m)
    xk = spectrum[..., :m]
    xr = np.conj(spectrum[..., m - k])
    even = 0.5 * (xk + xr)
    odd = 0.5 * (xk - xr) * np.conj(_rfft_twiddles(n)[:m])
    z = ifft(even + 1j * odd)
    out = np.empty(spectrum.shape[:-1] + (n,), dtype=np.float64)
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out
