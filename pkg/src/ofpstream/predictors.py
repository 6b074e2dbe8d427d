"""Reference predictors that satisfy the engine's predictor contract."""

from __future__ import annotations

from collections import deque

import numpy as np

from .dsp import StftConfig, sqrt_hann_window
from .engine import PredictionBatch, stft
from .errors import InvalidConfigError, OutOfRangeError

NOISE_FLOOR_REL = 1e-10
NOISE_FLOOR_ABS = 1e-12
MAX_SNR = 1e12


class _HistoryPredictor:
    """Keeps the last ``k`` frames of some per-frame quantity."""

    def __init__(self, k: int, n_bins: int):
        if k < 1:
            raise InvalidConfigError("k must be >= 1")
        self.k = k
        self.n_bins = n_bins

    def _batch(self, frames: list, index: int) -> PredictionBatch:
        out = np.zeros((self.k, self.n_bins), dtype=np.complex128)
        if frames:
            out[self.k - len(frames):] = frames
        return PredictionBatch(out, index)


class OraclePredictor(_HistoryPredictor):
    """Returns the reference (clean) frames, as a perfect model would."""

    def __init__(self, reference, config: StftConfig, k: int, analysis=None):
        super().__init__(k, config.n_bins)
        if analysis is None:
            analysis = sqrt_hann_window(config.window_size)
        self.spectrogram = stft(reference, config, analysis)

    @classmethod
    def from_spectrogram(cls, spectrogram, k: int) -> "OraclePredictor":
        self = cls.__new__(cls)
        _HistoryPredictor.__init__(self, k, spectrogram.config.n_bins)
        self.spectrogram = spectrogram
        return self

    def reset(self) -> None:
        pass

    def push_frame(self, frame, index: int) -> PredictionBatch:
        frames = self.spectrogram.frames
        if not 0 <= index < len(frames):
            raise OutOfRangeError(f"frame {index} outside reference of {len(frames)} frames")
        lo = max(0, index - self.k + 1)
        return self._batch(list(frames[lo:index + 1]), index)


class PassthroughPredictor(_HistoryPredictor):
    """Echoes the mixture frames back; the engine then reproduces its input."""

    def __init__(self, config: StftConfig, k: int):
        super().__init__(k, config.n_bins)
        self.reset()

    def reset(self) -> None:
        self._frames = deque(maxlen=self.k)

    def push_frame(self, frame, index: int) -> PredictionBatch:
        self._frames.append(np.asarray(frame, dtype=np.complex128))
        return self._batch(list(self._frames), index)


class WienerGatePredictor(_HistoryPredictor):
    """Decision-directed Wiener gain with look-back re-estimation of past frames.

    The newest slot uses the causal decision-directed a-priori SNR
    ``beta * |S_prev|^2 / noise + (1 - beta) * max(post - 1, 0)``. Older slots are
    recomputed every frame with the same recursion term but with the a-posteriori
    SNR replaced by its average over a window centred on that frame. The window
    widens as newer frames arrive, so a frame predicted for the last time has
    seen ``k - 1`` frames of future context.

    Noise PSD: mean of the first ``noise_init_frames`` frames that contain no
    leading padding, then minimum tracking on a smoothed periodogram with a slow
    upward drift.
    """

    def __init__(self, config: StftConfig, k: int, beta: float = 0.98, gain_floor: float = 0.1,
                 noise_init_frames: int = 5, psd_smoothing: float = 0.8,
                 noise_rise_db_per_s: float = 1.0):
        super().__init__(k, config.n_bins)
        if not 0.0 < beta < 1.0:
            raise InvalidConfigError("beta must be in (0, 1)")
        if not 0.0 < gain_floor < 1.0:
            raise InvalidConfigError("gain_floor must be in (0, 1)")
        if noise_init_frames < 1:
            raise InvalidConfigError("noise_init_frames must be >= 1")
        if not 0.0 <= psd_smoothing < 1.0:
            raise InvalidConfigError("psd_smoothing must be in [0, 1)")
        self.config = config
        self.beta = beta
        self.gain_floor = gain_floor
        self.noise_init_frames = noise_init_frames
        self.psd_smoothing = psd_smoothing
        self.noise_rise_db_per_s = noise_rise_db_per_s
        frames_per_s = config.sample_rate / config.hop_size
        self._rise = 10.0 ** (noise_rise_db_per_s / 10.0 / frames_per_s)
        # frames before this index contain leading zero padding
        self._first_full = config.overlap - 1
        self.reset()

    def params(self) -> dict:
        return {
            "beta": self.beta,
            "gain_floor": self.gain_floor,
            "noise_init_frames": self.noise_init_frames,
            "psd_smoothing": self.psd_smoothing,
            "noise_rise_db_per_s": self.noise_rise_db_per_s,
        }

    def reset(self) -> None:
        f = self.n_bins
        self._init_sum = np.zeros(f)
        self._init_n = 0
        self.noise = None
        self._smoothed = None
        self._prev_clean = None
        self._mix = deque(maxlen=self.k)
        # centred averaging around the oldest slot reaches 2(k-1) frames back
        self._snr_post = deque(maxlen=2 * self.k - 1)
        self._decision = deque(maxlen=2 * self.k - 1)
        self.last_gains = np.ones((self.k, f))

    def _update_noise(self, power: np.ndarray, index: int) -> np.ndarray:
        if index >= self._first_full and self._init_n < self.noise_init_frames:
            self._init_sum += power
            self._init_n += 1
            self.noise = self._init_sum / self._init_n
            self._smoothed = self.noise.copy()
        elif self._init_n >= self.noise_init_frames:
            a = self.psd_smoothing
            self._smoothed = a * self._smoothed + (1.0 - a) * power
            self.noise = np.minimum(self.noise * self._rise, self._smoothed)
        est = power if self.noise is None else self.noise
        # relative floor keeps the SNR finite for bins where the estimate collapses
        return np.maximum(est, NOISE_FLOOR_REL * float(est.mean()) + NOISE_FLOOR_ABS)

    def _gain(self, prior: np.ndarray) -> np.ndarray:
        return np.clip(prior / (1.0 + prior), self.gain_floor, 1.0)

    def push_frame(self, frame, index: int) -> PredictionBatch:
        y = np.asarray(frame, dtype=np.complex128)
        power = y.real ** 2 + y.imag ** 2
        noise = self._update_noise(power, index)
        post = np.minimum(power / noise, MAX_SNR)

        if self._prev_clean is None:
            decision = np.zeros(self.n_bins)
            prior = np.maximum(post - 1.0, 0.0)
        else:
            decision = self._prev_clean / noise
            prior = self.beta * decision + (1.0 - self.beta) * np.maximum(post - 1.0, 0.0)
        gain = self._gain(prior)
        self._prev_clean = (gain * gain) * power

        self._mix.append(y)
        self._snr_post.append(post)
        self._decision.append(decision)
        gains = np.ones((self.k, self.n_bins))
        gains[-1] = gain
        n_hist = len(self._mix)
        if n_hist > 1:
            snr = np.asarray(self._snr_post)
            last = len(snr) - 1
            for back in range(1, n_hist):
                centre = last - back
                smoothed = snr[max(0, centre - back):].mean(axis=0)
                prior = (self.beta * self._decision[centre]
                         + (1.0 - self.beta) * np.maximum(smoothed - 1.0, 0.0))
                gains[self.k - 1 - back] = self._gain(prior)
        self.last_gains = gains

        out = np.zeros((self.k, self.n_bins), dtype=np.complex128)
        # slots before the stream start stay zero (history is shorter than k)
        out[self.k - n_hist:] = gains[self.k - n_hist:] * np.asarray(self._mix)
        return PredictionBatch(out, index)


def make_predictor(name: str, config: StftConfig, k: int, reference=None, **params):
    """Build a predictor by CLI name (``oracle``, ``passthrough`` or ``wiener``)."""
    if name == "oracle":
        if reference is None:
            raise InvalidConfigError("the oracle predictor needs a reference signal")
        return OraclePredictor(reference, config, k)
    if name == "passthrough":
        return PassthroughPredictor(config, k)
    if name == "wiener":
        return WienerGatePredictor(config, k, **params)
    raise InvalidConfigError(f"unknown predictor {name!r}")
