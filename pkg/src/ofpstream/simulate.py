"""Deterministic synthetic speech/noise generation and additive mixing."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import InvalidConfigError, InvalidInputError
from .wavio import wav_write

NOISE_KINDS = ("white", "pink", "babble")
N_HARMONICS = 5
F0_RANGE = (100.0, 300.0)
PEAK = 0.5
LEADING_PAUSE_S = 0.2

# 1/f approximation: three pole/zero pairs spread over the audio band
_PINK_B = np.array([0.049922035, -0.095993537, 0.050612699, -0.004408786])
_PINK_A = np.array([1.0, -2.494956002, 2.017265875, -0.522189400])


@dataclass(frozen=True, eq=False)
class MixtureRecord:
    clean: np.ndarray
    noise: np.ndarray  # already scaled to the requested SNR
    mixture: np.ndarray
    snr_db: float
    seed: int = 0
    sample_rate: int = 16000
    kind: str = ""
    meta: dict = field(default_factory=dict)


def _n_samples(duration_s: float, sample_rate: int) -> int:
    if duration_s <= 0:
        raise InvalidConfigError("duration must be positive")
    return int(round(duration_s * sample_rate))


def speechlike_f0(seed: int, duration_s: float, sample_rate: int = 16000,
                  detune: float = 1.0) -> np.ndarray:
    """Fundamental-frequency contour (Hz per sample) used by :func:`synth_speechlike`."""
    n = _n_samples(duration_s, sample_rate)
    rng = np.random.default_rng([seed, 0])
    t = np.arange(n) / sample_rate
    base = rng.uniform(130.0, 220.0)
    drift = np.zeros(n)
    for _ in range(3):
        rate = rng.uniform(0.3, 3.0)
        drift += rng.uniform(5.0, 25.0) * np.sin(2 * np.pi * rate * t + rng.uniform(0, 2 * np.pi))
    return np.clip((base + drift) * detune, *F0_RANGE)


def _envelope(rng, n: int, sample_rate: int) -> np.ndarray:
    env = np.zeros(n)
    pos = int(LEADING_PAUSE_S * sample_rate)
    while pos < n:
        length = int(rng.uniform(0.15, 0.45) * sample_rate)
        seg = np.sin(np.pi * np.arange(length) / length) ** 0.5
        seg *= rng.uniform(0.5, 1.0)
        stop = min(n, pos + length)
        env[pos:stop] = seg[: stop - pos]
        pos = stop + int(rng.uniform(0.05, 0.3) * sample_rate)
    return env


def synth_speechlike(seed: int, duration_s: float, sample_rate: int = 16000,
                     detune: float = 1.0) -> np.ndarray:
    """Voiced harmonic signal with a wandering pitch and syllable-like pauses.

    Starts with a short pause so noise estimators see noise-only frames first.
    Peak amplitude is normalised to 0.5.
    """
    n = _n_samples(duration_s, sample_rate)
    f0 = speechlike_f0(seed, duration_s, sample_rate, detune)
    rng = np.random.default_rng([seed, 1])
    phase = 2 * np.pi * np.cumsum(f0) / sample_rate
    x = np.zeros(n)
    for h in range(1, N_HARMONICS + 1):
        x += 0.6 ** (h - 1) * np.sin(h * phase + rng.uniform(0, 2 * np.pi))
    x *= _envelope(rng, n, sample_rate)
    peak = np.max(np.abs(x))
    if peak > 0:
        x *= PEAK / peak
    return x


def synth_noise(seed: int, duration_s: float, sample_rate: int = 16000,
                kind: str = "white") -> np.ndarray:
    """Unit-RMS noise of the given kind (``white``, ``pink`` or ``babble``)."""
    if kind not in NOISE_KINDS:
        raise InvalidConfigError(f"unknown noise kind {kind!r}, expected one of {NOISE_KINDS}")
    n = _n_samples(duration_s, sample_rate)
    rng = np.random.default_rng([seed, 2])
    if kind == "white":
        x = rng.standard_normal(n)
    elif kind == "pink":
        # run the filter past its transient before keeping samples
        warm = 4096
        x = lfilter(_PINK_B, _PINK_A, rng.standard_normal(n + warm))[warm:]
    else:
        x = np.zeros(n)
        for i in range(6):
            voice_seed = int(rng.integers(0, 2**31))
            voice = synth_speechlike(voice_seed, duration_s, sample_rate,
                                     detune=rng.uniform(0.85, 1.15))
            # circular shift so the voices' leading pauses do not line up at t=0
            x += np.roll(voice, int(rng.integers(0, n)))
    rms = np.sqrt(np.mean(x * x))
    return x / rms if rms > 0 else x


def _energy(x: np.ndarray) -> float:
    return float(np.dot(x, x))


def mix_at_snr(clean, noise, snr_db: float, seed: int = 0, sample_rate: int = 16000,
               kind: str = "") -> MixtureRecord:
    clean = np.asarray(clean, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    if clean.shape != noise.shape or clean.ndim != 1:
        raise InvalidInputError(f"clean {clean.shape} and noise {noise.shape} must be equal-length 1-D")
    ec, en = _energy(clean), _energy(noise)
    if ec == 0 or en == 0:
        raise InvalidInputError("clean and noise must both have non-zero energy")
    scale = np.sqrt(ec / (en * 10.0 ** (snr_db / 10.0)))
    scaled = scale * noise
    return MixtureRecord(clean, scaled, clean + scaled, float(snr_db), seed, sample_rate, kind,
                         {"noise_scale": float(scale)})


def achieved_snr_db(record: MixtureRecord) -> float:
    return 10.0 * np.log10(_energy(record.clean) / _energy(record.noise))


@dataclass(frozen=True)
class SuiteSpec:
    seed_base: int = 0
    count: int = 16
    snr_lo: float = -8.0
    snr_hi: float = 3.0
    duration_s: float = 4.0
    sample_rate: int = 16000

    def snrs(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.snr_lo])
        return np.linspace(self.snr_lo, self.snr_hi, self.count)


DESK16 = SuiteSpec()


def generate_suite(spec: SuiteSpec = DESK16) -> list[MixtureRecord]:
    """Mixtures for seeds ``seed_base ..``, SNRs evenly spaced, noise kinds cycled."""
    records = []
    for i, snr in enumerate(spec.snrs()):
        seed = spec.seed_base + i
        kind = NOISE_KINDS[i % len(NOISE_KINDS)]
        clean = synth_speechlike(seed, spec.duration_s, spec.sample_rate)
        noise = synth_noise(seed, spec.duration_s, spec.sample_rate, kind)
        records.append(mix_at_snr(clean, noise, float(snr), seed, spec.sample_rate, kind))
    return records


MANIFEST_NAME = "manifest.jsonl"
MANIFEST_FIELDS = ("id", "path", "clean", "noise", "seed", "snr_db", "kind", "sample_rate")


def write_suite(records, out_dir) -> str:
    """Write each record as three float32 WAVs plus a line-delimited JSON manifest.

    Paths in the manifest are relative to ``out_dir``. Returns the manifest path.
    """
    os.makedirs(out_dir, exist_ok=True)
    lines = []
    for rec in records:
        uid = f"mix{rec.seed:05d}"
        names = {part: f"{uid}_{part}.wav" for part in ("mixture", "clean", "noise")}
        for part, name in names.items():
            wav_write(os.path.join(out_dir, name), getattr(rec, part), rec.sample_rate, "float32")
        entry = {
            "id": uid,
            "path": names["mixture"],
            "clean": names["clean"],
            "noise": names["noise"],
            "seed": rec.seed,
            "snr_db": round(rec.snr_db, 10),
            "kind": rec.kind,
            "sample_rate": rec.sample_rate,
        }
        lines.append(json.dumps({k: entry[k] for k in MANIFEST_FIELDS}))
    path = os.path.join(out_dir, MANIFEST_NAME)
    with open(path, "w") as fh:
        fh.write("".join(line + "\n" for line in lines))
    return path


def read_manifest(path) -> list[dict]:
    """Manifest entries with ``path``/``clean``/``noise`` resolved against its directory."""
    base = os.path.dirname(os.path.abspath(path))
    entries = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            entry = json.loads(line)
            for key in ("path", "clean", "noise"):
                if key in entry and not os.path.isabs(entry[key]):
                    entry[key] = os.path.join(base, entry[key])
            entries.append(entry)
    return entries
