import numpy as np
import pytest

from ofpstream.dsp import StftConfig, make_window_pair
from ofpstream.engine import Mode, process_offline, stft
from ofpstream.errors import InvalidConfigError, OutOfRangeError
from ofpstream.predictors import (
    OraclePredictor,
    PassthroughPredictor,
    WienerGatePredictor,
    make_predictor,
)

CFG = StftConfig(512, 128)


def test_oracle_slots_hold_reference_frames(rng):
    x = rng.standard_normal(4000)
    pred = OraclePredictor(x, CFG, 4)
    ref = pred.spectrogram.frames
    first = pred.push_frame(np.zeros(CFG.n_bins), 0)
    assert np.array_equal(first.frames[-1], ref[0])
    assert not np.any(first.frames[:-1])
    batch = pred.push_frame(np.zeros(CFG.n_bins), 10)
    assert batch.index == 10
    for slot in range(4):
        assert np.array_equal(batch.frames[slot], ref[7 + slot])


def test_oracle_out_of_range(rng):
    x = rng.standard_normal(1000)
    pred = OraclePredictor(x, CFG, 1)
    with pytest.raises(OutOfRangeError):
        pred.push_frame(np.zeros(CFG.n_bins), len(pred.spectrogram.frames))
    with pytest.raises(OutOfRangeError):
        pred.push_frame(np.zeros(CFG.n_bins), -1)


def test_oracle_from_spectrogram(rng):
    x = rng.standard_normal(1000)
    spec = stft(x, CFG, make_window_pair(CFG).analysis)
    a = OraclePredictor.from_spectrogram(spec, 2).push_frame(None, 3).frames
    b = OraclePredictor(x, CFG, 2).push_frame(None, 3).frames
    assert np.array_equal(a, b)


def test_passthrough_echoes_history(rng):
    pred = PassthroughPredictor(CFG, 3)
    frames = rng.standard_normal((5, CFG.n_bins)) + 0j
    for i, f in enumerate(frames):
        batch = pred.push_frame(f, i)
    assert np.array_equal(batch.frames, frames[2:])
    pred.reset()
    assert not np.any(pred.push_frame(frames[0], 0).frames[:-1])


def _wiener_run(x, k=4, **kw):
    pred = WienerGatePredictor(CFG, k, **kw)
    frames = stft(x, CFG, make_window_pair(CFG).analysis).frames
    batches, gains = [], []
    for i, f in enumerate(frames):
        batches.append(pred.push_frame(f, i))
        gains.append(pred.last_gains.copy())
    return pred, frames, batches, np.array(gains)


def test_wiener_gains_bounded(rng):
    x = rng.standard_normal(16000) * np.linspace(0.1, 2.0, 16000)
    pred, _, _, gains = _wiener_run(x, gain_floor=0.1)
    assert gains.min() >= 0.1 and gains.max() <= 1.0


def test_wiener_output_is_gain_times_mixture(rng):
    x = rng.standard_normal(8000)
    _, frames, batches, gains = _wiener_run(x)
    for t in range(3, len(frames)):
        expected = gains[t] * frames[t - 3:t + 1]
        np.testing.assert_allclose(batches[t].frames, expected, atol=1e-12)


def test_wiener_is_causal(rng):
    x = rng.standard_normal(16000)
    y = x.copy()
    y[9000:] = rng.standard_normal(7000) * 5.0
    _, _, ba, _ = _wiener_run(x)
    _, _, bb, _ = _wiener_run(y)
    # padded sample 9000 + 384 first enters frame 70 (span 70*128 .. 70*128 + 511)
    first_touched = 70
    for t in range(first_touched):
        assert np.array_equal(ba[t].frames, bb[t].frames)
    assert not np.array_equal(ba[first_touched].frames, bb[first_touched].frames)
    assert not np.array_equal(ba[-1].frames, bb[-1].frames)


def test_wiener_silence_stays_silent():
    x = np.zeros(8000)
    y = process_offline(x, CFG, make_window_pair(CFG), Mode.OVERLAPPED_PARTIAL,
                        WienerGatePredictor(CFG, 4))
    assert np.all(np.isfinite(y)) and np.max(np.abs(y)) == 0.0
    _, _, _, gains = _wiener_run(x)
    assert np.all(gains[-1] == 0.1)


def test_wiener_passes_strong_tone(rng):
    sr = CFG.sample_rate
    n = 3 * sr
    # noise 20 dB below the tone power of 0.5
    noise = rng.standard_normal(n) * np.sqrt(0.5 * 10 ** (-20 / 10))
    tone = np.zeros(n)
    t = np.arange(n - sr) / sr
    tone[sr:] = np.sin(2 * np.pi * 1000.0 * t)
    _, frames, _, gains = _wiener_run(tone + noise)
    tone_bin = round(1000.0 * CFG.n_fft / sr)
    late = gains[-20:, -1, tone_bin]
    assert late.min() >= 0.9
    # far from the tone the gate closes on noise
    assert np.median(gains[-20:, -1, 200]) < 0.5


def test_wiener_parameter_validation():
    for kw in ({"beta": 1.0}, {"gain_floor": 0.0}, {"noise_init_frames": 0}, {"psd_smoothing": 1.0}):
        with pytest.raises(InvalidConfigError):
            WienerGatePredictor(CFG, 1, **kw)


def test_wiener_reset_reproduces(rng):
    x = rng.standard_normal(5000)
    pred = WienerGatePredictor(CFG, 4)
    pair = make_window_pair(CFG)
    a = process_offline(x, CFG, pair, Mode.OVERLAPPED_PARTIAL, pred)
    b = process_offline(x, CFG, pair, Mode.OVERLAPPED_PARTIAL, pred)
    assert np.array_equal(a, b)


def test_make_predictor():
    assert isinstance(make_predictor("passthrough", CFG, 2), PassthroughPredictor)
    assert make_predictor("wiener", CFG, 2, beta=0.9).beta == 0.9
    with pytest.raises(InvalidConfigError):
        make_predictor("oracle", CFG, 1)
    with pytest.raises(InvalidConfigError):
        make_predictor("magic", CFG, 1)
