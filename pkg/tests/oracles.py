"""Slow, independent reference implementations used as test oracles.

Pure-Python loops (``math``/``cmath``) on purpose: nothing here shares code
with the package's FFT, framing or overlap-add paths.
"""

import cmath
import math

import numpy as np


def naive_dft(x):
    n = len(x)
    return np.array([sum(x[t] * cmath.exp(-2j * math.pi * k * t / n) for t in range(n))
                     for k in range(n)])


def naive_rdft(x, n_fft):
    buf = list(x) + [0.0] * (n_fft - len(x))
    return naive_dft(buf)[: n_fft // 2 + 1]


def naive_irdft(bins, n_fft):
    """Inverse of a one-sided spectrum via the full Hermitian extension."""
    full = [0j] * n_fft
    for k, v in enumerate(bins):
        full[k] = v
        if 0 < k < n_fft - k:
            full[n_fft - k] = v.conjugate()
    full[0] = complex(full[0].real, 0.0)
    full[n_fft // 2] = complex(full[n_fft // 2].real, 0.0)
    return np.array([sum(full[k] * cmath.exp(2j * math.pi * k * t / n_fft) for k in range(n_fft)).real / n_fft
                     for t in range(n_fft)])


def padded(signal, w, h):
    """Lead W-H zeros, pad to a hop multiple, trail W-H zeros."""
    n = len(signal)
    hop_aligned = -(-n // h) * h
    return np.concatenate([np.zeros(w - h), signal, np.zeros(hop_aligned - n + w - h)])


def textbook_stft(signal, g, h, n_fft):
    w = len(g)
    x = padded(signal, w, h)
    frames = []
    for start in range(0, len(x) - w + 1, h):
        seg = x[start:start + w] * g
        frames.append(np.fft.rfft(seg, n_fft))
    return np.array(frames)


def textbook_istft(frames, l, h, n_fft, length):
    """Plain overlap-add of synthesis-windowed inverse frames, then trim padding."""
    w = len(l)
    out = np.zeros(w + h * (len(frames) - 1))
    for t, spec in enumerate(frames):
        out[t * h: t * h + w] += np.fft.irfft(spec, n_fft)[:w] * l
    return out[w - h: w - h + length]


def ri_mag_loop(estimates, target):
    """Element-wise loop for the real/imag/magnitude L1 loss."""
    total = 0.0
    for est in estimates:
        for t in range(target.shape[0]):
            for f in range(target.shape[1]):
                e, s = complex(est[t, f]), complex(target[t, f])
                total += abs(e.real - s.real) + abs(e.imag - s.imag) + abs(abs(e) - abs(s))
    return total


def wav_mag_loop(est, ref, g, h, n_fft):
    """Waveform L1 plus magnitude L1 with a naive per-frame DFT."""
    wav = sum(abs(a - b) for a, b in zip(est, ref))
    w = len(g)
    xe, xr = padded(est, w, h), padded(ref, w, h)
    mag = 0.0
    for start in range(0, len(xe) - w + 1, h):
        fe = naive_rdft([xe[start + i] * g[i] for i in range(w)], n_fft)
        fr = naive_rdft([xr[start + i] * g[i] for i in range(w)], n_fft)
        mag += sum(abs(abs(a) - abs(b)) for a, b in zip(fe, fr))
    return wav + mag
