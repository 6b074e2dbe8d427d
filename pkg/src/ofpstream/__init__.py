"""Streaming STFT overlap-add with single-frame and overlapped-frame prediction."""

__version__ = "0.1.0"

from .dsp import (  # noqa: E402
    DesignMode,
    Spectrogram,
    StftConfig,
    Summation,
    WindowPair,
    design_synthesis_window,
    forward_frame,
    inverse_frame,
    make_window_pair,
    sqrt_hann_window,
    verify_cola,
)
from .engine import Mode, PredictionBatch, Predictor, StreamEngine, create_stream, process_offline, stft  # noqa: E402
from .losses import loss_ri_mag, loss_wav_mag, loss_wav_mag_geq, si_sdr  # noqa: E402
from .predictors import OraclePredictor, PassthroughPredictor, WienerGatePredictor  # noqa: E402
