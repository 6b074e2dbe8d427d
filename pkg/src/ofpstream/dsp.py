"""Windows, frame transforms and overlap-add window design.

Notation used throughout the package: ``W`` window length, ``H`` hop, ``C = W // H``
frames overlapping each sample, ``N`` DFT size (power of two, ``N >= W``) and
``F = N // 2 + 1`` frequency bins per frame.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import fft as _fft
from .errors import DegenerateWindowError, InvalidConfigError, InvalidInputError

DEFAULT_WINDOW_EPS = 1e-12
COLA_TOLERANCE = 1e-10


class DesignMode(enum.Enum):
    REGULAR = "regular"
    WEIGHTED = "weighted"


class Summation(enum.Enum):
    PARTIAL = "partial"
    FULL = "full"


def _next_pow2(n: int) -> int:
    return 1 << max(n - 1, 0).bit_length()


@dataclass(frozen=True)
class StftConfig:
    window_size: int
    hop_size: int
    n_fft: int = 0
    sample_rate: int = 16000

    def __post_init__(self):
        w, h = self.window_size, self.hop_size
        if not (isinstance(w, (int, np.integer)) and isinstance(h, (int, np.integer))):
            raise InvalidConfigError("window and hop sizes must be integers")
        if w < 1 or h < 1:
            raise InvalidConfigError(f"window ({w}) and hop ({h}) must be positive")
        if w % h:
            raise InvalidConfigError(f"window size {w} is not a multiple of hop size {h}")
        if self.n_fft == 0:
            object.__setattr__(self, "n_fft", _next_pow2(max(w, 2)))
        if self.n_fft < w:
            raise InvalidConfigError(f"DFT size {self.n_fft} shorter than window {w}")
        if self.n_fft < 2 or not _fft.is_power_of_two(self.n_fft):
            raise InvalidConfigError(f"DFT size must be a power of two >= 2, got {self.n_fft}")
        if self.sample_rate < 1:
            raise InvalidConfigError("sample rate must be positive")

    @classmethod
    def from_ms(cls, window_ms: float, hop_ms: float, sample_rate: int = 16000,
                n_fft: int = 0) -> "StftConfig":
        w = window_ms * sample_rate / 1000.0
        h = hop_ms * sample_rate / 1000.0
        if abs(w - round(w)) > 1e-9 or abs(h - round(h)) > 1e-9:
            raise InvalidConfigError(
                f"{window_ms}/{hop_ms} ms is not a whole number of samples at {sample_rate} Hz")
        return cls(int(round(w)), int(round(h)), n_fft, sample_rate)

    @property
    def overlap(self) -> int:
        """C, the number of frames covering each sample."""
        return self.window_size // self.hop_size

    @property
    def n_bins(self) -> int:
        return self.n_fft // 2 + 1

    def samples_to_ms(self, n: int) -> float:
        return 1000.0 * n / self.sample_rate


@dataclass(frozen=True, eq=False)
class WindowPair:
    analysis: np.ndarray
    synthesis: np.ndarray
    design_mode: DesignMode
    config: StftConfig

    def __post_init__(self):
        for name in ("analysis", "synthesis"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.shape != (self.config.window_size,):
                raise InvalidConfigError(
                    f"{name} window has shape {arr.shape}, expected ({self.config.window_size},)")
            if not np.all(np.isfinite(arr)):
                raise InvalidConfigError(f"{name} window has non-finite values")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


@dataclass(frozen=True, eq=False)
class Spectrogram:
    """Time-ordered complex frames, shape ``(T, F)``."""

    frames: np.ndarray
    config: StftConfig = field(repr=False)

    def __post_init__(self):
        frames = np.array(self.frames, dtype=np.complex128)
        if frames.ndim != 2 or frames.shape[1] != self.config.n_bins:
            raise InvalidInputError(
                f"spectrogram must have shape (T, {self.config.n_bins}), got {frames.shape}")
        frames.flags.writeable = False
        object.__setattr__(self, "frames", frames)

    def __len__(self):
        return self.frames.shape[0]


def sqrt_hann_window(size: int) -> np.ndarray:
    """Square root of the periodic (DFT-even) Hann window."""
    if size < 2 or size % 2:
        raise InvalidConfigError(f"square-root Hann needs an even size >= 2, got {size}")
    n = np.arange(size)
    hann = 0.5 * (1.0 - np.cos(2.0 * np.pi * n / size))
    # cos rounding leaves tiny negatives near n=0 for some sizes
    return np.sqrt(np.clip(hann, 0.0, 1.0))


def rectangular_window(size: int) -> np.ndarray:
    if size < 1:
        raise InvalidConfigError("window size must be positive")
    return np.ones(size)


def phase_weights(config: StftConfig, mode: DesignMode | Summation) -> np.ndarray:
    """Per-position multiplicity of sub-frame ``e`` in the overlap-add sum."""
    c = config.overlap
    if mode in (DesignMode.REGULAR, Summation.PARTIAL):
        return np.ones(c)
    return np.arange(1, c + 1, dtype=np.float64)


def design_synthesis_window(analysis, config: StftConfig, mode: DesignMode = DesignMode.REGULAR,
                            eps: float = DEFAULT_WINDOW_EPS) -> WindowPair:
    """Build the synthesis window that pairs with ``analysis`` for perfect reconstruction.

    ``REGULAR`` normalises by the plain sum of squared analysis samples sharing a
    hop phase; ``WEIGHTED`` weights the sub-frame at position ``e`` by ``e + 1``,
    which is what full sub-frame summation requires.
    """
    g = np.asarray(analysis, dtype=np.float64)
    w, h, c = config.window_size, config.hop_size, config.overlap
    if g.shape != (w,):
        raise InvalidConfigError(f"analysis window length {g.shape} != ({w},)")
    mode = DesignMode(mode)
    # rows: position e within the frame, columns: hop phase m
    sq = (g * g).reshape(c, h)
    denom = phase_weights(config, mode) @ sq
    bad = np.flatnonzero(~(np.abs(denom) >= eps))
    if bad.size:
        m = int(bad[0])
        raise DegenerateWindowError(m, float(denom[m]), eps)
    synthesis = g / np.tile(denom, c)
    return WindowPair(g, synthesis, mode, config)


def make_window_pair(config: StftConfig, mode: DesignMode = DesignMode.REGULAR) -> WindowPair:
    """Square-root Hann analysis window with its designed synthesis window."""
    return design_synthesis_window(sqrt_hann_window(config.window_size), config, mode)


def forward_frame(samples, analysis, n_fft: int) -> np.ndarray:
    """Window, zero-pad to ``n_fft`` and transform one frame (or a stack of frames)."""
    x = np.asarray(samples, dtype=np.float64)
    g = np.asarray(analysis, dtype=np.float64)
    if x.shape[-1] != g.shape[-1]:
        raise InvalidInputError(f"frame has {x.shape[-1]} samples, window has {g.shape[-1]}")
    if n_fft < g.shape[-1]:
        raise InvalidConfigError(f"DFT size {n_fft} shorter than frame {g.shape[-1]}")
    buf = np.zeros(x.shape[:-1] + (n_fft,))
    buf[..., : g.shape[-1]] = x * g
    return _fft.rfft(buf)


def inverse_frame(frame, n_fft: int, window_size: int) -> np.ndarray:
    """Inverse real DFT truncated to the first ``window_size`` samples."""
    spec = np.asarray(frame, dtype=np.complex128)
    if spec.shape[-1] != n_fft // 2 + 1:
        raise InvalidInputError(f"frame has {spec.shape[-1]} bins, expected {n_fft // 2 + 1}")
    if window_size > n_fft:
        raise InvalidConfigError(f"window {window_size} longer than DFT size {n_fft}")
    return _fft.irfft(spec, n_fft)[..., :window_size]


@dataclass(frozen=True)
class ColaReport:
    max_deviation: float
    passed: bool
    phase_sums: tuple = ()


def verify_cola(pair: WindowPair, mode: Summation, tolerance: float = COLA_TOLERANCE) -> ColaReport:
    """Check the hop-phase overlap-add identity of ``pair`` under ``mode`` summation."""
    cfg = pair.config
    prod = (pair.analysis * pair.synthesis).reshape(cfg.overlap, cfg.hop_size)
    sums = phase_weights(cfg, Summation(mode)) @ prod
    dev = float(np.max(np.abs(sums - 1.0)))
    return ColaReport(dev, bool(dev <= tolerance), tuple(float(s) for s in sums))
