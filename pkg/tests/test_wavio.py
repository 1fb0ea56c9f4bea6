import struct

import numpy as np
import pytest

from foa_enhance.dsp import AudioBuffer
from foa_enhance.wavio import WavError, quantize_pcm16, read_wav, read_wav_info, write_wav


def test_four_channel_pcm16_ramp_is_bit_exact(tmp_path):
    ramp = (np.arange(-2000, 2000) * 8) / 32768.0
    chans = [AudioBuffer(np.roll(ramp, 100 * c), 16000) for c in range(4)]
    path = tmp_path / "ramp.wav"
    write_wav(path, chans)
    back = read_wav(path)
    assert len(back) == 4
    info = read_wav_info(path)
    assert (info.channels, info.sample_rate_hz, info.bits_per_sample, info.n_frames) == (
        4, 16000, 16, ramp.size)
    for a, b in zip(chans, back):
        np.testing.assert_array_equal(a.samples, b.samples)


def test_float32_round_trip(tmp_path, rng):
    x = rng.uniform(-2, 2, 1001)
    write_wav(tmp_path / "f.wav", [x], 44100, bit_depth=32)
    (y,) = read_wav(tmp_path / "f.wav")
    np.testing.assert_array_equal(y.samples, x.astype(np.float32).astype(np.float64))


def test_full_scale_int16_mapping(tmp_path):
    ints = np.array([-32768, -1, 0, 1, 32767], dtype="<i2")
    fmt = struct.pack("<HHIIHH", 1, 1, 16000, 32000, 2, 16)
    data = ints.tobytes()
    body = b"WAVEfmt " + struct.pack("<I", 16) + fmt + b"data" + struct.pack("<I", len(data)) + data
    path = tmp_path / "ints.wav"
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    (x,) = read_wav(path)
    np.testing.assert_array_equal(x.samples, ints / 32768.0)
    assert x.samples.min() == -1.0 and x.samples.max() < 1.0


def test_quantize_rounds_half_away_and_clamps():
    x = np.array([0.5, -0.5, 1.5, -1.5, 2.0, -2.0]) / 32768.0
    np.testing.assert_array_equal(quantize_pcm16(x), [1, -1, 2, -2, 2, -2])
    np.testing.assert_array_equal(quantize_pcm16(np.array([1.0, -1.0, 3.0, -3.0])),
                                  [32767, -32768, 32767, -32768])


def test_truncated_header_names_missing_chunk(tmp_path):
    path = tmp_path / "t.wav"
    path.write_bytes(b"RIF")
    with pytest.raises(WavError, match="RIFF"):
        read_wav(path)
    fmt = struct.pack("<HHIIHH", 1, 1, 16000, 32000, 2, 16)
    no_data = b"WAVEfmt " + struct.pack("<I", 16) + fmt
    path.write_bytes(b"RIFF" + struct.pack("<I", len(no_data)) + no_data)
    with pytest.raises(WavError, match="'data'"):
        read_wav(path)
    path.write_bytes(b"RIFF" + struct.pack("<I", 4) + b"WAVE")
    with pytest.raises(WavError, match="'fmt '"):
        read_wav(path)


def test_truncated_data_chunk(tmp_path):
    path = tmp_path / "x.wav"
    write_wav(path, [np.zeros(100)], 16000)
    raw = path.read_bytes()
    path.write_bytes(raw[:-50])
    with pytest.raises(WavError, match="truncated 'data'"):
        read_wav(path)


def test_unsupported_codec_and_depth(tmp_path):
    fmt = struct.pack("<HHIIHH", 1, 1, 16000, 48000, 3, 24)
    body = b"WAVEfmt " + struct.pack("<I", 16) + fmt + b"data" + struct.pack("<I", 3) + b"\0\0\0\0"
    path = tmp_path / "p24.wav"
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    with pytest.raises(WavError, match="unsupported codec"):
        read_wav(path)
    with pytest.raises(WavError):
        write_wav(tmp_path / "bad.wav", [np.zeros(4)], 16000, bit_depth=24)
    with pytest.raises(WavError, match="channel count is 0"):
        write_wav(tmp_path / "bad.wav", [], 16000)


def test_skips_unknown_chunks(tmp_path):
    path = tmp_path / "a.wav"
    write_wav(path, [np.full(10, 0.25)], 8000)
    raw = path.read_bytes()
    extra = b"LIST" + struct.pack("<I", 3) + b"abc\0"
    body = raw[8:12] + extra + raw[12:]
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    (x,) = read_wav(path)
    np.testing.assert_array_equal(x.samples, np.full(10, 0.25))
