import json
import struct

import numpy as np
import pytest
from scipy.signal import welch

from ofpstream.errors import InvalidConfigError, InvalidInputError, WavFormatError
from ofpstream.simulate import (
    DESK16,
    NOISE_KINDS,
    SuiteSpec,
    achieved_snr_db,
    generate_suite,
    mix_at_snr,
    read_manifest,
    speechlike_f0,
    synth_noise,
    synth_speechlike,
    write_suite,
)
from ofpstream.wavio import wav_bytes, wav_read, wav_write

SR = 16000


# -- generators -----------------------------------------------------------------------

def test_speechlike_is_deterministic_and_sized():
    a = synth_speechlike(3, 1.5)
    assert np.array_equal(a, synth_speechlike(3, 1.5))
    assert len(a) == 24000
    assert np.max(np.abs(a)) == pytest.approx(0.5)
    assert not np.array_equal(a, synth_speechlike(4, 1.5))


def test_speechlike_starts_with_pause():
    assert not np.any(synth_speechlike(0, 1.0)[: int(0.2 * SR)])


def test_speechlike_fundamental_tracks_contour():
    x = synth_speechlike(7, 2.0)
    f0 = speechlike_f0(7, 2.0)
    n = 2048
    # find a loud segment and compare its spectral peak with the contour
    start = int(np.argmax(np.convolve(np.abs(x), np.ones(n), "valid")))
    seg = x[start:start + n] * np.hanning(n)
    spec = np.abs(np.fft.rfft(seg, 8 * n))
    peak_hz = np.argmax(spec) * SR / (8 * n)
    assert f0[start:start + n].min() - 15 <= peak_hz <= f0[start:start + n].max() + 15
    assert 100.0 <= f0.min() and f0.max() <= 300.0


@pytest.mark.parametrize("kind", NOISE_KINDS)
def test_noise_unit_rms_and_deterministic(kind):
    x = synth_noise(5, 1.0, kind=kind)
    assert len(x) == SR
    assert np.sqrt(np.mean(x * x)) == pytest.approx(1.0, rel=1e-12)
    assert np.array_equal(x, synth_noise(5, 1.0, kind=kind))


def test_pink_noise_slope_is_minus_three_db_per_octave():
    x = synth_noise(0, 20.0, kind="pink")
    f, p = welch(x, SR, nperseg=4096)
    band = (f >= 50) & (f <= 5000)
    slope = np.polyfit(np.log2(f[band]), 10 * np.log10(p[band]), 1)[0]
    assert slope == pytest.approx(-3.0, abs=0.3)


def test_white_noise_is_flat():
    x = synth_noise(0, 20.0, kind="white")
    f, p = welch(x, SR, nperseg=4096)
    band = (f >= 50) & (f <= 7000)
    slope = np.polyfit(np.log2(f[band]), 10 * np.log10(p[band]), 1)[0]
    assert abs(slope) < 0.2


def test_babble_has_no_silent_start():
    x = synth_noise(1, 2.0, kind="babble")
    assert np.sqrt(np.mean(x[:3200] ** 2)) > 0.1


def test_unknown_noise_kind():
    with pytest.raises(InvalidConfigError):
        synth_noise(0, 1.0, kind="brown")


# -- mixing -----------------------------------------------------------------------------

@pytest.mark.parametrize("snr", [0.0, -8.0, 3.0, -20.0, 20.0, 7.3])
def test_mix_hits_requested_snr(snr):
    rec = mix_at_snr(synth_speechlike(1, 1.0), synth_noise(1, 1.0, kind="pink"), snr)
    assert achieved_snr_db(rec) == pytest.approx(snr, abs=1e-6)
    np.testing.assert_array_equal(rec.mixture, rec.clean + rec.noise)


def test_mix_rejects_zero_energy_and_mismatch():
    with pytest.raises(InvalidInputError):
        mix_at_snr(np.zeros(10), np.ones(10), 0.0)
    with pytest.raises(InvalidInputError):
        mix_at_snr(np.ones(10), np.ones(11), 0.0)


def test_desk16_suite_layout():
    spec = SuiteSpec(count=4, duration_s=0.5)
    recs = generate_suite(spec)
    assert [r.kind for r in recs] == ["white", "pink", "babble", "white"]
    assert [r.seed for r in recs] == [0, 1, 2, 3]
    np.testing.assert_allclose([r.snr_db for r in recs], np.linspace(-8, 3, 4))
    assert DESK16.count == 16 and DESK16.duration_s == 4.0
    np.testing.assert_allclose(DESK16.snrs()[[0, -1]], [-8.0, 3.0])


# -- WAV I/O ---------------------------------------------------------------------------

def test_wav_float32_roundtrip_bit_exact(tmp_path, rng):
    x = rng.standard_normal(1001).astype(np.float32).astype(np.float64)
    wav_write(tmp_path / "a.wav", x, 22050)
    y, rate = wav_read(tmp_path / "a.wav")
    assert rate == 22050 and np.array_equal(x, y)


def test_wav_pcm16_roundtrip(tmp_path, rng):
    x = rng.uniform(-0.99, 0.99, 1000)
    wav_write(tmp_path / "a.wav", x, SR, "pcm16")
    y, _ = wav_read(tmp_path / "a.wav")
    assert np.max(np.abs(x - y)) <= 1.0 / 32768


def test_wav_truncated(tmp_path):
    data = wav_bytes(np.zeros(100), SR)
    (tmp_path / "t.wav").write_bytes(data[:-50])
    with pytest.raises(WavFormatError, match="truncated"):
        wav_read(tmp_path / "t.wav")


def test_wav_not_riff(tmp_path):
    (tmp_path / "x.wav").write_bytes(b"hello world, not audio")
    with pytest.raises(WavFormatError):
        wav_read(tmp_path / "x.wav")


def _patched_fmt(channels=1, tag=3, bits=32):
    data = bytearray(wav_bytes(np.zeros(8), SR))
    block = channels * bits // 8
    struct.pack_into("<HHIIHH", data, 20, tag, channels, SR, SR * block, block, bits)
    return bytes(data)


def test_wav_multichannel_rejected(tmp_path):
    (tmp_path / "s.wav").write_bytes(_patched_fmt(channels=2))
    with pytest.raises(WavFormatError, match="channels"):
        wav_read(tmp_path / "s.wav")


def test_wav_unsupported_encoding(tmp_path):
    (tmp_path / "u.wav").write_bytes(_patched_fmt(tag=1, bits=8))
    with pytest.raises(WavFormatError, match="unsupported"):
        wav_read(tmp_path / "u.wav")


# -- manifests ---------------------------------------------------------------------------

def test_write_and_read_suite(tmp_path):
    recs = generate_suite(SuiteSpec(count=3, duration_s=0.25))
    path = write_suite(recs, tmp_path)
    lines = [json.loads(s) for s in open(path)]
    assert [e["id"] for e in lines] == ["mix00000", "mix00001", "mix00002"]
    assert list(lines[0]) == ["id", "path", "clean", "noise", "seed", "snr_db", "kind", "sample_rate"]
    entries = read_manifest(path)
    mix, rate = wav_read(entries[1]["path"])
    assert rate == SR
    np.testing.assert_allclose(mix, recs[1].mixture, atol=1e-6)
