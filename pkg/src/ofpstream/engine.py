"""Frame-online STFT analysis / overlap-add synthesis with a pluggable predictor.

Frame geometry
--------------
The input is preceded by ``W - H`` zeros so that every real sample is covered by
exactly ``C`` analysis frames. Frame ``t`` spans padded samples ``[tH, tH + W)``,
i.e. sub-frames ``t .. t + C - 1`` (a sub-frame is one hop of samples). Sub-frame
``u`` therefore sits at position ``p = u - a`` inside frame ``a``.

At input frame ``t`` the predictor returns ``K`` frames. Slot ``k`` (1-based) is
the prediction for absolute frame ``t - K + k``: slot ``K`` is the current frame,
slot 1 the oldest one. Output sub-frame ``t`` is complete once batch ``t`` is in:

* single-frame: ``K = 1``; frame ``t`` is overlap-added into sub-frames
  ``t .. t + C - 1``.
* overlapped, partial summation: sub-frame ``t`` is the sum of the ``C``
  sub-frames of batch ``t`` that land on it.
* overlapped, full summation: every batch ``t`` adds, for each of its slots,
  all sub-frames at or after sub-frame ``t``. Sub-frame ``u`` ends up with
  ``C (C + 1) / 2`` contributions and position ``p`` is counted ``p + 1`` times,
  which the weighted synthesis window compensates.

Release clock
-------------
Time is measured on the input sample clock (real samples plus flushed padding).
Output sample ``m`` is released once input sample ``m + W - 1`` has been consumed,
so the delay through the engine is exactly ``W`` samples for every chunking.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from .dsp import (
    DesignMode,
    Spectrogram,
    StftConfig,
    WindowPair,
    forward_frame,
    inverse_frame,
)
from .errors import (
    InvalidConfigError,
    InvalidInputError,
    NotReadyError,
    PredictorFault,
    StreamStateError,
)


class Mode(enum.Enum):
    SINGLE_FRAME = "single"
    OVERLAPPED_PARTIAL = "overlap-partial"
    OVERLAPPED_FULL = "overlap-full"


REQUIRED_DESIGN = {
    Mode.SINGLE_FRAME: DesignMode.REGULAR,
    Mode.OVERLAPPED_PARTIAL: DesignMode.REGULAR,
    Mode.OVERLAPPED_FULL: DesignMode.WEIGHTED,
}


def slot_count(mode: Mode, config: StftConfig) -> int:
    """Frames a predictor must emit per input frame in ``mode``."""
    return 1 if Mode(mode) is Mode.SINGLE_FRAME else config.overlap


def design_for(mode: Mode) -> DesignMode:
    return REQUIRED_DESIGN[Mode(mode)]


@dataclass(frozen=True, eq=False)
class PredictionBatch:
    """``K`` predicted frames, shape ``(K, F)``, emitted at input frame ``index``."""

    frames: np.ndarray
    index: int

    @property
    def k(self) -> int:
        return self.frames.shape[0]

    def frame_index(self, slot: int) -> int:
        """Absolute frame predicted by 1-based ``slot``."""
        return self.index - self.k + slot


@runtime_checkable
class Predictor(Protocol):
    """What the engine needs from an enhancement model.

    ``push_frame`` is called once per analysis frame, in order, with the mixture
    spectrum of frame ``index``. It may only depend on frames ``<= index`` and must
    return zero frames for slots whose absolute frame index is negative.
    """

    k: int

    def reset(self) -> None: ...

    def push_frame(self, frame: np.ndarray, index: int) -> PredictionBatch: ...


def padded_length(n_samples: int, config: StftConfig) -> int:
    """Length of the internally padded signal holding ``n_samples`` real samples."""
    w, h = config.window_size, config.hop_size
    hop_aligned = -(-n_samples // h) * h
    return hop_aligned + 2 * (w - h)


def frame_count(n_samples: int, config: StftConfig) -> int:
    if n_samples == 0:
        return 0
    return (padded_length(n_samples, config) - config.window_size) // config.hop_size + 1


def frame_signal(signal, config: StftConfig) -> np.ndarray:
    """Cut ``signal`` into the ``(T, W)`` frames the engine sees, padding included."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidInputError("expected a mono 1-D signal")
    w, h = config.window_size, config.hop_size
    t = frame_count(len(x), config)
    padded = np.zeros(padded_length(len(x), config))
    padded[w - h: w - h + len(x)] = x
    idx = np.arange(t)[:, None] * h + np.arange(w)[None, :]
    return padded[idx]


def stft(signal, config: StftConfig, analysis) -> Spectrogram:
    """Offline STFT using the same padding and framing as :class:`StreamEngine`."""
    return Spectrogram(forward_frame(frame_signal(signal, config), analysis, config.n_fft), config)


class StreamEngine:
    """One mono audio stream. Not thread-safe; use one engine per stream."""

    def __init__(self, config: StftConfig, pair: WindowPair, mode: Mode, predictor: Predictor):
        mode = Mode(mode)
        if pair.config != config:
            raise InvalidConfigError("window pair was designed for a different configuration")
        if pair.design_mode is not REQUIRED_DESIGN[mode]:
            raise InvalidConfigError(
                f"mode {mode.value} needs a {REQUIRED_DESIGN[mode].value} window pair, "
                f"got {pair.design_mode.value}")
        k = slot_count(mode, config)
        if getattr(predictor, "k", None) != k:
            raise InvalidConfigError(
                f"mode {mode.value} needs a predictor with k={k}, got {getattr(predictor, 'k', None)}")
        self.config = config
        self.pair = pair
        self.mode = mode
        self.predictor = predictor
        self.k = k
        predictor.reset()

        w, h = config.window_size, config.hop_size
        self._inbuf = np.zeros(w)
        self._fill = w - h  # leading zero padding is already in place
        self._acc = np.zeros(w)
        self._acc_count = np.zeros(config.overlap, dtype=np.int64)
        self._pending = np.zeros(0)
        self._pending_clock = np.zeros(0, dtype=np.int64)
        self._state = "open"

        self.frames_consumed = 0
        self.samples_in = 0
        self.samples_out = 0
        self.clock = 0
        self.contribution_counts: list[int] = []
        # (first sample index, count, release clock of the first sample)
        self.release_log: list[tuple[int, int, int]] = []
        self._max_latency: int | None = None

    # -- public API ---------------------------------------------------------

    @property
    def finalized(self) -> bool:
        return self._state == "finalized"

    def push_samples(self, samples) -> np.ndarray:
        self._check_open()
        x = np.asarray(samples, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(x)):
            raise InvalidInputError("input samples must be finite")
        return self._consume(x, real=True)

    def finalize(self) -> np.ndarray:
        """Flush trailing padding and return every remaining output sample."""
        self._check_open()
        n = self.samples_in
        pieces = []
        if n:
            w, h = self.config.window_size, self.config.hop_size
            pad = (-n) % h + (w - h)
            pieces.append(self._consume(np.zeros(pad), real=False))
            pieces.append(self._release(n, clock=self.clock, final=True))
        self._state = "finalized"
        return np.concatenate(pieces) if pieces else np.zeros(0)

    def measured_latency(self) -> int:
        """Largest (input consumed at release) - (sample index) over released samples."""
        if self._max_latency is None:
            raise NotReadyError("no output sample has been released yet")
        return self._max_latency

    # -- internals ----------------------------------------------------------

    def _check_open(self):
        if self._state == "finalized":
            raise StreamStateError("stream already finalized")
        if self._state == "aborted":
            raise StreamStateError("stream aborted after a predictor fault")

    def _consume(self, x: np.ndarray, real: bool) -> np.ndarray:
        w = self.config.window_size
        pos = 0
        out = []
        while pos < len(x):
            take = min(w - self._fill, len(x) - pos)
            self._inbuf[self._fill:self._fill + take] = x[pos:pos + take]
            self._fill += take
            pos += take
            self.clock += take
            if real:
                self.samples_in += take
            if self._fill == w:
                self._process_frame()
            released = self._release(min(self.clock - w + 1, self.samples_in), clock=None)
            if released.size:
                out.append(released)
        return np.concatenate(out) if out else np.zeros(0)

    def _process_frame(self):
        cfg = self.config
        w, h, c = cfg.window_size, cfg.hop_size, cfg.overlap
        tau = self.frames_consumed
        spectrum = forward_frame(self._inbuf, self.pair.analysis, cfg.n_fft)
        batch = self.predictor.push_frame(spectrum, tau)
        frames = self._validate(batch, tau)

        first = tau - self.k + 1
        skip = max(0, -first)
        if skip < self.k:
            y = inverse_frame(frames[skip:], cfg.n_fft, w) * self.pair.synthesis
            full = self.mode is not Mode.OVERLAPPED_PARTIAL
            for j, a in enumerate(range(first + skip, tau + 1)):
                p0 = tau - a
                p1 = c if full else p0 + 1
                self._acc[: (p1 - p0) * h] += y[j, p0 * h: p1 * h]
                self._acc_count[: p1 - p0] += 1

        subframe = self._acc[:h].copy()
        self.contribution_counts.append(int(self._acc_count[0]))
        self._acc[:-h] = self._acc[h:]
        self._acc[-h:] = 0.0
        self._acc_count[:-1] = self._acc_count[1:]
        self._acc_count[-1] = 0

        self._inbuf[: w - h] = self._inbuf[h:]
        self._fill = w - h
        self.frames_consumed += 1

        # the first C - 1 sub-frames hold only leading padding
        if tau >= c - 1:
            self._pending = np.concatenate((self._pending, subframe))
            self._pending_clock = np.concatenate(
                (self._pending_clock, np.full(h, self.clock, dtype=np.int64)))

    def _validate(self, batch, tau: int) -> np.ndarray:
        f = self.config.n_bins
        try:
            frames = np.asarray(batch.frames, dtype=np.complex128)
            index = int(batch.index)
        except (AttributeError, TypeError, ValueError) as exc:
            self._abort(f"predictor returned an invalid batch at frame {tau}: {exc}")
        if index != tau:
            self._abort(f"predictor returned batch for frame {index} at frame {tau}")
        if frames.shape != (self.k, f):
            self._abort(f"predictor returned shape {frames.shape} at frame {tau}, "
                        f"expected ({self.k}, {f})")
        if not np.all(np.isfinite(frames)):
            self._abort(f"predictor returned non-finite values at frame {tau}")
        negative = max(0, self.k - 1 - tau)
        if negative and np.any(frames[:negative] != 0):
            self._abort(f"predictor returned non-zero slots for negative frames at frame {tau}")
        return frames

    def _abort(self, message: str):
        self._state = "aborted"
        raise PredictorFault(message)

    def _release(self, limit: int, clock: int | None, final: bool = False) -> np.ndarray:
        """Release pending output up to (exclusive) absolute sample ``limit``."""
        n = min(limit - self.samples_out, self._pending.size)
        if n <= 0:
            return np.zeros(0)
        start = self.samples_out
        out = self._pending[:n]
        computed_at = self._pending_clock[:n]
        self._pending = self._pending[n:]
        self._pending_clock = self._pending_clock[n:]
        m = start + np.arange(n)
        if final:
            released_at = np.full(n, clock, dtype=np.int64)
        else:
            # a sample becomes available once computed and once its delay has elapsed
            released_at = np.maximum(m + self.config.window_size, computed_at)
        latency = int(np.max(released_at - m))
        self._max_latency = latency if self._max_latency is None else max(self._max_latency, latency)
        self.release_log.append((start, n, int(released_at[0])))
        self.samples_out += n
        return out


def create_stream(config: StftConfig, pair: WindowPair, mode: Mode, predictor: Predictor) -> StreamEngine:
    return StreamEngine(config, pair, mode, predictor)


def process_offline(signal, config: StftConfig, pair: WindowPair, mode: Mode, predictor: Predictor,
                    chunk_size: int | None = None) -> np.ndarray:
    """Run a whole signal through a fresh stream, optionally in fixed-size chunks."""
    x = np.asarray(signal, dtype=np.float64)
    engine = StreamEngine(config, pair, mode, predictor)
    step = len(x) if not chunk_size else int(chunk_size)
    pieces = [engine.push_samples(x[i:i + step]) for i in range(0, len(x), max(step, 1))]
    pieces.append(engine.finalize())
    return np.concatenate(pieces)
