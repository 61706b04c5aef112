"""Mono WAV reading and writing, PCM16 and IEEE float32 only.

Hand-rolled RIFF: the format is 44 bytes of header plus raw samples, and
owning the writer pins the exact clamp/round semantics at the PCM
boundary instead of inheriting whichever convention a library picked.
"""

import struct
from dataclasses import dataclass

import numpy as np

from .dsp import Waveform

BIT_DEPTHS = ("pcm16", "float32")
PCM16_SCALE = 32768.0


@dataclass(frozen=True)
class WavSpec:
    """Stored sample format; this toolkit is strictly mono."""

    sample_rate: int = 22050
    bit_depth: str = "float32"
    channels: int = 1

    def __post_init__(self):
        if self.channels != 1:
            raise ValueError("unsupported channel count (mono only)")
        if self.bit_depth not in BIT_DEPTHS:
            raise ValueError(f"bit_depth must be one of {BIT_DEPTHS}")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")


def write_wav(path, y: Waveform, spec: WavSpec) -> None:
    """Write a canonical 44-byte-header RIFF/WAVE file.

    PCM16 clamps to [-1, 1 - 2^-15] and rounds half away from zero;
    float32 stores the samples verbatim.
    """
    x = y.samples
    if spec.bit_depth == "pcm16":
        clamped = np.clip(x, -1.0, 32767.0 / PCM16_SCALE) * PCM16_SCALE
        ints = np.sign(clamped) * np.floor(np.abs(clamped) + 0.5)
        payload = ints.astype("<i2").tobytes()
        audio_format, bits = 1, 16
    else:
        payload = x.astype("<f4").tobytes()
        audio_format, bits = 3, 32
    block_align = bits // 8
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(payload), b"WAVE",
        b"fmt ", 16, audio_format, 1,
        spec.sample_rate, spec.sample_rate * block_align, block_align, bits,
        b"data", len(payload),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_wav(path):
    """Parse a mono RIFF/WAVE file; returns (Waveform, WavSpec).

    PCM16 maps to [-1, 1) by dividing by 32768; float32 passes through.
    Unknown chunks are skipped, so files with extra metadata still load.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise ValueError(f"{path}: not a RIFF/WAVE file")

    fmt = None
    payload = None
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise ValueError(f"{path}: truncated {cid.decode(errors='replace')!r} chunk")
        if cid == b"fmt ":
            if size < 16:
                raise ValueError(f"{path}: malformed fmt chunk")
            fmt = struct.unpack_from("<HHIIHH", body, 0)
        elif cid == b"data":
            payload = body
        pos += 8 + size + (size & 1)    # chunks are word-aligned

    if fmt is None or payload is None:
        raise ValueError(f"{path}: missing fmt or data chunk")
    audio_format, channels, sample_rate, _, _, bits = fmt
    if channels != 1:
        raise ValueError(f"{path}: unsupported channel count {channels} (mono only)")
    if audio_format == 1 and bits == 16:
        if len(payload) % 2:
            raise ValueError(f"{path}: odd PCM16 payload size")
        samples = np.frombuffer(payload, dtype="<i2").astype(np.float64) / PCM16_SCALE
        depth = "pcm16"
    elif audio_format == 3 and bits == 32:
        if len(payload) % 4:
            raise ValueError(f"{path}: float32 payload size not a multiple of 4")
        samples = np.frombuffer(payload, dtype="<f4").astype(np.float64)
        depth = "float32"
    else:
        raise ValueError(
            f"{path}: unsupported format (code {audio_format}, {bits} bits); "
            "only PCM16 and IEEE float32 are readable"
        )
    if samples.shape[0] == 0:
        raise ValueError(f"{path}: empty data chunk")
    return Waveform(samples, sample_rate), WavSpec(sample_rate, depth)
