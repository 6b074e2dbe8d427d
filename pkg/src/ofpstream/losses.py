"""Spectral and waveform L1 losses, gain equalisation and SI-SDR.

L1 norms are plain sums over all cells/samples; ``LossBreakdown.means`` carries
the per-cell averages as well.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dsp import Spectrogram, StftConfig, sqrt_hann_window
from .engine import stft
from .errors import DegenerateEstimateError, InvalidInputError

SI_SDR_CAP_DB = 120.0


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    components: dict
    alpha: float | None = None
    means: dict = field(default_factory=dict)


def _frames(spec) -> np.ndarray:
    return spec.frames if isinstance(spec, Spectrogram) else np.asarray(spec, dtype=np.complex128)


def loss_ri_mag(estimates, target) -> LossBreakdown:
    """Sum over the K estimates of real, imaginary and magnitude L1 distances.

    ``estimates`` is a sequence of spectrograms or an array of shape ``(K, T, F)``.
    """
    if isinstance(estimates, Spectrogram):
        estimates = [estimates]
    est = np.stack([_frames(e) for e in estimates]) if not isinstance(estimates, np.ndarray) \
        else np.asarray(estimates, dtype=np.complex128)
    tgt = _frames(target)
    if est.ndim != 3 or est.shape[0] < 1 or est.shape[1:] != tgt.shape:
        raise InvalidInputError(f"estimates {est.shape} do not match target {tgt.shape}")
    re = float(np.abs(est.real - tgt.real).sum())
    im = float(np.abs(est.imag - tgt.imag).sum())
    mag = float(np.abs(np.abs(est) - np.abs(tgt)).sum())
    cells = est.size
    comps = {"real_part_l1": re, "imag_part_l1": im, "magnitude_l1": mag}
    return LossBreakdown(re + im + mag, comps, None, {k: v / cells for k, v in comps.items()})


def assemble_slot_spectrograms(batches, n_frames: int | None = None) -> np.ndarray:
    """Stack per-slot estimates into ``(K, T, F)`` aligned with the target frames.

    Slot ``k`` of batch ``t`` estimates frame ``t - K + k``. The last ``K - k``
    frames of slot ``k`` are never produced by any batch; they are filled with the
    most recent estimate of that frame (from the final batch).
    """
    batches = list(batches)
    if not batches:
        raise InvalidInputError("no prediction batches")
    k, f = batches[0].frames.shape
    t = len(batches) if n_frames is None else n_frames
    out = np.zeros((k, t, f), dtype=np.complex128)
    have = np.zeros((k, t), dtype=bool)
    for b in batches:
        for slot in range(k):
            a = b.index - k + 1 + slot
            if 0 <= a < t:
                out[slot, a] = b.frames[slot]
                have[slot, a] = True
    last = batches[-1]
    for slot in range(k):
        for a in np.flatnonzero(~have[slot]):
            src = a - (last.index - k + 1)
            if 0 <= src < k:
                out[slot, a] = last.frames[src]
    return out


def _check_pair(est, ref):
    est = np.asarray(est, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if est.shape != ref.shape or est.ndim != 1:
        raise InvalidInputError(f"signals must be equal-length 1-D arrays, got {est.shape} and {ref.shape}")
    return est, ref


def loss_wav_mag(est_signal, target_signal, config: StftConfig, analysis=None) -> LossBreakdown:
    """Waveform L1 plus STFT-magnitude L1, using the engine's framing."""
    est, ref = _check_pair(est_signal, target_signal)
    if analysis is None:
        analysis = sqrt_hann_window(config.window_size)
    wav = float(np.abs(est - ref).sum())
    if len(est):
        diff = np.abs(np.abs(stft(est, config, analysis).frames) - np.abs(stft(ref, config, analysis).frames))
        mag, cells = float(diff.sum()), diff.size
    else:
        mag, cells = 0.0, 0
    comps = {"waveform_l1": wav, "magnitude_l1": mag}
    means = {"waveform_l1": wav / max(len(est), 1), "magnitude_l1": mag / max(cells, 1)}
    return LossBreakdown(wav + mag, comps, None, means)


def gain_equalizer(est_signal, target_signal) -> float:
    """Least-squares scale aligning the estimate to the target."""
    est, ref = _check_pair(est_signal, target_signal)
    energy = float(np.dot(est, est))
    if energy == 0.0:
        raise DegenerateEstimateError("estimate has zero energy; gain equalisation undefined")
    return float(np.dot(est, ref)) / energy


def loss_wav_mag_geq(est_signal, target_signal, config: StftConfig, analysis=None) -> LossBreakdown:
    est, ref = _check_pair(est_signal, target_signal)
    alpha = gain_equalizer(est, ref)
    inner = loss_wav_mag(alpha * est, ref, config, analysis)
    return LossBreakdown(inner.total, inner.components, alpha, inner.means)


def alpha_optimality_check(est_signal, target_signal) -> bool:
    """Confirm the closed-form gain beats small perturbations either side."""
    est, ref = _check_pair(est_signal, target_signal)
    alpha = gain_equalizer(est, ref)
    eps = 1e-3 * abs(alpha) + 1e-6

    def err(a):
        r = a * est - ref
        return float(np.dot(r, r))

    best = err(alpha)
    return best <= err(alpha + eps) and best <= err(alpha - eps)


def si_sdr(estimate, reference, cap_db: float = SI_SDR_CAP_DB) -> float:
    est, ref = _check_pair(estimate, reference)
    ref_energy = float(np.dot(ref, ref))
    if ref_energy == 0.0:
        raise InvalidInputError("reference has zero energy")
    target = (float(np.dot(est, ref)) / ref_energy) * ref
    residual = est - target
    num = float(np.dot(target, target))
    den = float(np.dot(residual, residual))
    # a zero projection means no target content at all, even if the residual is also zero
    if num == 0.0:
        return -cap_db
    if den == 0.0:
        return cap_db
    return float(min(10.0 * np.log10(num / den), cap_db))
