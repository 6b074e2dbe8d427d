"""Minimal RIFF/WAVE reader and writer for mono PCM16 and IEEE float32."""

from __future__ import annotations

import os
import struct

import numpy as np

from .errors import WavFormatError

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE

FORMATS = ("pcm16", "float32")


def _parse(data: bytes, name: str):
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{name}: not a RIFF/WAVE file")
    riff_size = struct.unpack_from("<I", data, 4)[0]
    if riff_size + 8 > len(data):
        raise WavFormatError(f"{name}: truncated (header says {riff_size + 8} bytes, got {len(data)})")

    fmt = None
    samples = None
    pos = 12
    end = riff_size + 8
    while pos + 8 <= end:
        chunk_id = data[pos:pos + 4]
        size = struct.unpack_from("<I", data, pos + 4)[0]
        body = pos + 8
        if body + size > len(data):
            raise WavFormatError(f"{name}: chunk {chunk_id!r} truncated")
        if chunk_id == b"fmt ":
            if size < 16:
                raise WavFormatError(f"{name}: fmt chunk too short ({size} bytes)")
            tag, channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", data, body)
            if tag == WAVE_FORMAT_EXTENSIBLE and size >= 40:
                tag = struct.unpack_from("<H", data, body + 24)[0]
            fmt = (tag, channels, rate, block_align, bits)
        elif chunk_id == b"data":
            samples = data[body:body + size]
        pos = body + size + (size & 1)

    if fmt is None:
        raise WavFormatError(f"{name}: missing fmt chunk")
    if samples is None:
        raise WavFormatError(f"{name}: missing data chunk")
    tag, channels, rate, block_align, bits = fmt
    if channels != 1:
        raise WavFormatError(f"{name}: {channels} channels, only mono is supported")
    if tag == WAVE_FORMAT_PCM and bits == 16:
        dtype, scale = "<i2", 1.0 / 32768.0
    elif tag == WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        dtype, scale = "<f4", 1.0
    else:
        raise WavFormatError(f"{name}: unsupported encoding (format tag {tag:#06x}, {bits} bits)")
    if len(samples) % block_align:
        raise WavFormatError(f"{name}: data size {len(samples)} not a multiple of {block_align}")
    x = np.frombuffer(samples, dtype=dtype).astype(np.float64)
    if scale != 1.0:
        x *= scale
    return x, rate


def wav_read(path) -> tuple[np.ndarray, int]:
    """Read a mono WAV file; returns float64 samples and the sample rate."""
    with open(path, "rb") as fh:
        data = fh.read()
    return _parse(data, os.fspath(path))


def wav_bytes(samples, sample_rate: int, fmt: str = "float32") -> bytes:
    x = np.asarray(samples, dtype=np.float64).reshape(-1)
    if fmt == "pcm16":
        payload = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2").tobytes()
        tag, bits = WAVE_FORMAT_PCM, 16
    elif fmt == "float32":
        payload = x.astype("<f4").tobytes()
        tag, bits = WAVE_FORMAT_IEEE_FLOAT, 32
    else:
        raise ValueError(f"unknown WAV format {fmt!r}, expected one of {FORMATS}")
    block = bits // 8
    header = b"RIFF" + struct.pack("<I", 4 + 24 + 8 + len(payload) + (len(payload) & 1)) + b"WAVE"
    header += b"fmt " + struct.pack("<IHHIIHH", 16, tag, 1, sample_rate, sample_rate * block, block, bits)
    header += b"data" + struct.pack("<I", len(payload))
    return header + payload + (b"\0" if len(payload) & 1 else b"")


def wav_write(path, samples, sample_rate: int, fmt: str = "float32") -> None:
    data = wav_bytes(samples, sample_rate, fmt)
    with open(path, "wb") as fh:
        fh.write(data)
