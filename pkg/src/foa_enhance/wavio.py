"""RIFF/WAVE reading and writing (PCM16 and IEEE float32, little-endian).

16-bit convention: ``sample / 32768.0`` on read; on write, scale by 32768,
round half away from zero and clamp to [-32768, 32767].
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from .dsp import AudioBuffer

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE


class WavError(ValueError):
    """Malformed or unsupported WAV file."""


@dataclass(frozen=True)
class WavInfo:
    channels: int
    sample_rate_hz: int
    bits_per_sample: int
    format_tag: int
    n_frames: int


def _read_chunks(data: bytes, path) -> dict[bytes, bytes]:
    if len(data) < 12:
        raise WavError(f"{path}: truncated header, missing 'RIFF' chunk")
    if data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavError(f"{path}: not a RIFF/WAVE file")
    chunks: dict[bytes, bytes] = {}
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack_from("<4sI", data, pos)
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise WavError(f"{path}: truncated {cid.decode('latin-1')!r} chunk "
                           f"({len(body)} of {size} bytes)")
        chunks.setdefault(cid, body)
        pos += 8 + size + (size & 1)
    for required in (b"fmt ", b"data"):
        if required not in chunks:
            raise WavError(f"{path}: missing {required.decode()!r} chunk")
    return chunks


def _parse_fmt(fmt: bytes, path) -> tuple[int, int, int, int]:
    if len(fmt) < 16:
        raise WavError(f"{path}: 'fmt ' chunk too short ({len(fmt)} bytes)")
    tag, channels, rate, _, block_align, bits = struct.unpack_from("<HHIIHH", fmt)
    if tag == WAVE_FORMAT_EXTENSIBLE:
        if len(fmt) < 40:
            raise WavError(f"{path}: extensible 'fmt ' chunk too short")
        tag = struct.unpack_from("<H", fmt, 24)[0]
    if channels == 0:
        raise WavError(f"{path}: channel count is 0")
    supported = (tag, bits) in ((WAVE_FORMAT_PCM, 16), (WAVE_FORMAT_IEEE_FLOAT, 32))
    if not supported:
        raise WavError(f"{path}: unsupported codec (format tag {tag:#06x}, {bits} bits)")
    if block_align != channels * bits // 8:
        raise WavError(f"{path}: inconsistent block alignment {block_align}")
    return tag, channels, rate, bits


def read_wav_info(path) -> WavInfo:
    with open(path, "rb") as f:
        data = f.read()
    chunks = _read_chunks(data, path)
    tag, channels, rate, bits = _parse_fmt(chunks[b"fmt "], path)
    frames = len(chunks[b"data"]) // (channels * bits // 8)
    return WavInfo(channels, rate, bits, tag, frames)


def read_wav(path) -> list[AudioBuffer]:
    """Read a WAV file; returns one buffer per channel."""
    with open(path, "rb") as f:
        data = f.read()
    chunks = _read_chunks(data, path)
    tag, channels, rate, bits = _parse_fmt(chunks[b"fmt "], path)
    raw = chunks[b"data"]
    frame_bytes = channels * bits // 8
    usable = len(raw) - len(raw) % frame_bytes
    if tag == WAVE_FORMAT_PCM:
        samples = np.frombuffer(raw[:usable], dtype="<i2").astype(np.float64) / 32768.0
    else:
        samples = np.frombuffer(raw[:usable], dtype="<f4").astype(np.float64)
    samples = samples.reshape(-1, channels)
    return [AudioBuffer(samples[:, c], rate) for c in range(channels)]


def quantize_pcm16(x: np.ndarray) -> np.ndarray:
    scaled = np.asarray(x, dtype=np.float64) * 32768.0
    rounded = np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)
    return np.clip(rounded, -32768, 32767).astype("<i2")


def write_wav(path, channels, rate: int | None = None, bit_depth: int = 16) -> None:
    """Write channels (buffers or arrays of equal length) as interleaved PCM16 or float32."""
    arrays = [c.samples if isinstance(c, AudioBuffer) else np.asarray(c, dtype=np.float64)
              for c in channels]
    if not arrays:
        raise WavError("channel count is 0")
    if rate is None:
        rates = {c.sample_rate_hz for c in channels if isinstance(c, AudioBuffer)}
        if len(rates) != 1:
            raise ValueError("sample rate must be given or shared by all buffers")
        rate = rates.pop()
    if len({a.shape[0] for a in arrays}) != 1:
        raise ValueError("all channels must have equal length")
    block = np.stack(arrays, axis=1)
    if bit_depth == 16:
        payload = quantize_pcm16(block).tobytes()
        tag = WAVE_FORMAT_PCM
    elif bit_depth == 32:
        payload = block.astype("<f4").tobytes()
        tag = WAVE_FORMAT_IEEE_FLOAT
    else:
        raise WavError(f"unsupported bit depth {bit_depth}; use 16 (PCM) or 32 (float)")
    n_ch = len(arrays)
    block_align = n_ch * bit_depth // 8
    fmt = struct.pack("<HHIIHH", tag, n_ch, int(rate), int(rate) * block_align,
                      block_align, bit_depth)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", len(payload)) + payload
    if len(payload) & 1:
        body += b"\x00"
    tmp = f"{os.fspath(path)}.part"
    with open(tmp, "wb") as f:
        f.write(b"RIFF" + struct.pack("<I", len(body)) + body)
    os.replace(tmp, path)
